use super::{edge_key, Mesh, MeshError, Result};
use crate::geometry::{orient, Crack, Point};
use std::collections::{BTreeMap, BTreeSet};

/// A mesh of `Ω_K`: interior crack nodes exist twice so that functions may
/// jump across `K`. Duplicates are numbered after the base vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackedMesh {
    pub base: Mesh,
    /// `(original, duplicate)` for every interior crack node, in polyline order.
    pub crack_pairs: Vec<(usize, usize)>,
    /// Base triangles with duplicate indices substituted on the duplicate side.
    pub triangles: Vec<[usize; 3]>,
    /// Crack nodes in polyline order, tips included.
    pub crack_nodes: Vec<usize>,
}

impl CrackedMesh {
    /// The uncracked mesh viewed as a cracked mesh with no duplicates.
    pub fn uncracked(base: Mesh) -> Self {
        let triangles = base.triangles.clone();
        Self { base, crack_pairs: Vec::new(), triangles, crack_nodes: Vec::new() }
    }

    pub fn n_vertices(&self) -> usize {
        self.base.n_vertices() + self.crack_pairs.len()
    }

    /// Base vertex carrying the position of `v`.
    pub fn original_index(&self, v: usize) -> usize {
        let n = self.base.n_vertices();
        if v < n {
            v
        } else {
            self.crack_pairs[v - n].0
        }
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.base.vertices[self.original_index(v)]
    }

    pub fn vertices(&self) -> Vec<Point> {
        (0..self.n_vertices()).map(|v| self.vertex(v)).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertex(v))
    }

    /// Triangles whose vertices were (partly) replaced by duplicates.
    pub fn side_assignment(&self) -> Vec<bool> {
        let n = self.base.n_vertices();
        self.triangles.iter().map(|t| t.iter().any(|&v| v >= n)).collect()
    }

    /// Number of connected components of the triangle adjacency graph.
    pub fn components(&self) -> usize {
        count_components(&self.triangles)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Components of the graph whose nodes are triangles and whose edges join
/// triangles sharing a mesh edge.
fn count_components(triangles: &[[usize; 3]]) -> usize {
    let mut parent: Vec<usize> = (0..triangles.len()).collect();
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let e = edge_key(tri[k], tri[(k + 1) % 3]);
            if let Some(&s) = owner.get(&e) {
                union(&mut parent, s, t);
            } else {
                owner.insert(e, t);
            }
        }
    }
    (0..triangles.len()).filter(|&t| find(&mut parent, t) == t).count()
}

/// Ordered mesh nodes covering one crack segment, endpoints included.
fn segment_nodes(mesh: &Mesh, edges: &BTreeSet<(usize, usize)>, index: usize, a: Point, b: Point) -> Result<Vec<usize>> {
    let len = a.dist(b);
    let tol = 1e-9 * len;
    let mut on: Vec<(f64, usize)> = Vec::new();
    for (v, &p) in mesh.vertices.iter().enumerate() {
        let d = p.sub(a);
        let t = (d.x * (b.x - a.x) + d.y * (b.y - a.y)) / (len * len);
        if (-1e-12..=1.0 + 1e-12).contains(&t) && orient(a, b, p).abs() / len <= tol {
            on.push((t, v));
        }
    }
    on.sort_by(|x, y| x.0.total_cmp(&y.0));
    let not_aligned = |reason: String| MeshError::CrackNotAligned { segment: index, reason };
    match (on.first(), on.last()) {
        (Some(&(t0, _)), Some(&(t1, _))) if t0.abs() <= 1e-9 && (t1 - 1.0).abs() <= 1e-9 && on.len() >= 2 => {}
        _ => return Err(not_aligned("segment endpoints are not mesh vertices".into())),
    }
    let nodes: Vec<usize> = on.into_iter().map(|(_, v)| v).collect();
    for w in nodes.windows(2) {
        if !edges.contains(&edge_key(w[0], w[1])) {
            return Err(not_aligned(format!("vertices {} and {} are not joined by a mesh edge", w[0], w[1])));
        }
    }
    Ok(nodes)
}

/// Duplicates every interior crack node. At each such node the triangle fan
/// splits into two sectors at the crack edges; the sector to the left of the
/// polyline direction keeps the original index and the other takes the
/// duplicate. Tips stay single.
pub fn insert_crack(mesh: &Mesh, crack: &Crack) -> Result<CrackedMesh> {
    if crack.is_empty() {
        return Ok(CrackedMesh::uncracked(mesh.clone()));
    }
    let edges: BTreeSet<(usize, usize)> = mesh.edges().into_iter().collect();
    let mut chain: Vec<usize> = Vec::new();
    for (i, seg) in crack.segments().enumerate() {
        let nodes = segment_nodes(mesh, &edges, i, seg.a, seg.b)?;
        if chain.last() == Some(&nodes[0]) {
            chain.extend_from_slice(&nodes[1..]);
        } else {
            chain.extend_from_slice(&nodes);
        }
    }
    let boundary: BTreeSet<usize> = mesh.boundary_edges.iter().flatten().copied().collect();
    if let Some(&v) = chain.iter().find(|v| boundary.contains(v)) {
        return Err(MeshError::CrackTouchesBoundary(v));
    }
    let closed = chain.len() > 2 && chain.first() == chain.last();
    let chain_len = if closed { chain.len() - 1 } else { chain.len() };

    // Triangles incident to each vertex.
    let mut fan: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            fan[v].push(t);
        }
    }

    let n_base = mesh.n_vertices();
    let mut triangles = mesh.triangles.clone();
    let mut crack_pairs = Vec::new();
    let interior: Vec<usize> = if closed { (0..chain_len).collect() } else { (1..chain_len - 1).collect() };
    for i in interior {
        let v = chain[i];
        let prev = chain[(i + chain_len - 1) % chain_len];
        let next = chain[(i + 1) % chain_len];
        let cut = [edge_key(v, prev), edge_key(v, next)];
        let ts = &fan[v];
        // Group the fan by adjacency across non-crack edges at v.
        let mut parent: Vec<usize> = (0..ts.len()).collect();
        for a in 0..ts.len() {
            for b in a + 1..ts.len() {
                let shared: Vec<usize> =
                    mesh.triangles[ts[a]].iter().copied().filter(|w| *w != v && mesh.triangles[ts[b]].contains(w)).collect();
                if let [w] = shared[..] {
                    if !cut.contains(&edge_key(v, w)) {
                        union(&mut parent, a, b);
                    }
                }
            }
        }
        let pv = mesh.vertices[v];
        let pn = mesh.vertices[next];
        let left = (0..ts.len())
            .find(|&a| {
                let tri = mesh.triangles[ts[a]];
                tri.contains(&next) && tri.iter().any(|&c| c != v && c != next && orient(pv, pn, mesh.vertices[c]) > 0.0)
            })
            .map(|a| find(&mut parent, a))
            .ok_or_else(|| MeshError::Invalid(format!("crack node {v} has no triangle left of its crack edge")))?;
        let roots: BTreeSet<usize> = (0..ts.len()).map(|a| find(&mut parent, a)).collect();
        if roots.len() != 2 {
            return Err(MeshError::Invalid(format!("fan of crack node {v} splits into {} sectors", roots.len())));
        }
        let dup = n_base + crack_pairs.len();
        crack_pairs.push((v, dup));
        for a in 0..ts.len() {
            if find(&mut parent, a) != left {
                for w in triangles[ts[a]].iter_mut() {
                    if *w == v {
                        *w = dup;
                    }
                }
            }
        }
    }

    let cracked = CrackedMesh {
        base: mesh.clone(),
        crack_pairs,
        triangles,
        crack_nodes: chain[..chain_len].to_vec(),
    };
    let comps = cracked.components();
    if comps != 1 {
        return Err(MeshError::Disconnected(comps));
    }
    Ok(cracked)
}
