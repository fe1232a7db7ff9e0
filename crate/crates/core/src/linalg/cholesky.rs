//! Envelope (profile) Cholesky factorization under a reverse Cuthill–McKee
//! ordering. Finite-element matrices on planar meshes have envelopes of size
//! roughly `n^{3/2}` under RCM, which is small at the problem sizes used here.

use super::sparse::CsrMatrix;
use super::LinalgError;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Offset of row `i`'s first stored entry in `data`.
    start: Vec<usize>,
    data: Vec<f64>,
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) else {
            break;
        };
        let root = pseudo_peripheral(seed, &adj, &degree, &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(root: usize, adj: &[Vec<usize>], blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], blocked: &[bool]) -> usize {
    let mut root = seed;
    let mut depth = bfs_levels(root, adj, blocked).len();
    for _ in 0..8 {
        let levels = bfs_levels(root, adj, blocked);
        let candidate = *levels.last().unwrap().iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let d = bfs_levels(candidate, adj, blocked).len();
        if d <= depth {
            break;
        }
        depth = d;
        root = candidate;
    }
    root
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// (after permutation) is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                } else if i < j {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut data = vec![0.0; total];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (lo, hi) = data.split_at_mut(start[i]);
                let row_j = &lo[start[j] + k0 - fj..start[j] + j - fj];
                let row_i = &mut hi[..i - fi + 1];
                let s: f64 = row_i[k0 - fi..j - fi].iter().zip(row_j).map(|(x, y)| x * y).sum();
                let djj = lo[start[j] + j - fj];
                row_i[j - fi] = (row_i[j - fi] - s) / djj;
            }
            let row_i = &mut data[start[i]..start[i] + i - fi + 1];
            let (off, diag) = row_i.split_at_mut(i - fi);
            let d = diag[0] - off.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { pivot: perm[i], value: d });
            }
            diag[0] = d.sqrt();
        }
        Ok(Self { n, perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "dimension mismatch in solve");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi + 1];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi + 1];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Dense block `(A⁻¹)[idx, idx]`, one solve per index.
    pub fn inverse_block(&self, idx: &[usize]) -> nalgebra::DMatrix<f64> {
        let mut out = nalgebra::DMatrix::zeros(idx.len(), idx.len());
        let mut e = vec![0.0; self.n];
        for (c, &j) in idx.iter().enumerate() {
            e[j] = 1.0;
            let x = self.solve(&e);
            e[j] = 0.0;
            for (r, &i) in idx.iter().enumerate() {
                out[(r, c)] = x[i];
            }
        }
        out
    }
}
