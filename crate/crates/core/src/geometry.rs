//! Domains, cracks and balls in the plane, and the exact property* decision.
//!
//! Every domain is centered at the origin. A crack is a polyline of zero
//! area; the cracked domain `Ω_K = Ω \ K` shares its area with `Ω` and only
//! loses continuity across `K`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

const ON_SEGMENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("crack is malformed: {0}")]
    MalformedCrack(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn coord(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Open bounded convex domain centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
}

impl Domain {
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "rectangle sides must be positive, got {width} x {height}"
            )));
        }
        Ok(Domain::Rectangle { width, height })
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle { width: 1.0, height: 1.0 }
    }

    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Domain::Disk { radius })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Rectangle { width, height } => Domain::rectangle(width, height).map(|_| ()),
            Domain::Disk { radius } => Domain::disk(radius).map(|_| ()),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Rectangle { width, height } => width * height,
            Domain::Disk { radius } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Rectangle { width, height } => width.hypot(height),
            Domain::Disk { radius } => 2.0 * radius,
        }
    }

    /// Open-set membership.
    pub fn contains(&self, p: Point) -> bool {
        self.distance_to_boundary(p) > 0.0
    }

    /// Signed distance to the boundary, positive inside.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match *self {
            Domain::Rectangle { width, height } => {
                let dx = 0.5 * width - p.x.abs();
                let dy = 0.5 * height - p.y.abs();
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    -(dx.min(0.0).hypot(dy.min(0.0)))
                }
            }
            Domain::Disk { radius } => radius - p.norm(),
        }
    }

    /// The chord `Ω ∩ {axis coordinate = c}` as an open interval in the other
    /// coordinate, or `None` when the line misses `Ω`.
    pub fn chord(&self, axis: Axis, c: f64) -> Option<(f64, f64)> {
        match *self {
            Domain::Rectangle { width, height } => {
                let (half_across, half_along) = match axis {
                    Axis::X => (0.5 * width, 0.5 * height),
                    Axis::Y => (0.5 * height, 0.5 * width),
                };
                (c.abs() < half_across).then_some((-half_along, half_along))
            }
            Domain::Disk { radius } => {
                if c.abs() >= radius {
                    return None;
                }
                let half = (radius * radius - c * c).sqrt();
                Some((-half, half))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        let d = self.b.sub(self.a);
        let len2 = d.x * d.x + d.y * d.y;
        if len2 == 0.0 {
            return p.dist(self.a);
        }
        let t = (((p.x - self.a.x) * d.x + (p.y - self.a.y) * d.y) / len2).clamp(0.0, 1.0);
        p.dist(Point::new(self.a.x + t * d.x, self.a.y + t * d.y))
    }

    pub fn contains(&self, p: Point) -> bool {
        let scale = 1.0_f64.max(self.length());
        self.distance_to(p) <= ON_SEGMENT_TOL * scale
    }

    pub fn is_vertical(&self) -> bool {
        self.a.x == self.b.x
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    fn projection(&self, axis: Axis) -> (f64, f64) {
        let (p, q) = (self.a.coord(axis), self.b.coord(axis));
        (p.min(q), p.max(q))
    }
}

fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    t.contains(s.a) || t.contains(s.b) || s.contains(t.a) || s.contains(t.b)
}

/// A polyline crack. An empty polyline means "no crack".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Crack {
    points: Vec<Point>,
}

impl Crack {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a crack, rejecting single points, zero-length segments and
    /// self-intersections other than shared endpoints of consecutive
    /// segments (a closed loop may repeat its first point at the end).
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() == 1 {
            return Err(GeometryError::MalformedCrack(
                "a crack needs at least two points".into(),
            ));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::MalformedCrack("non-finite coordinate".into()));
        }
        let crack = Crack { points };
        let segs: Vec<Segment> = crack.segments().collect();
        if let Some(i) = segs.iter().position(|s| s.length() == 0.0) {
            return Err(GeometryError::MalformedCrack(format!("segment {i} has zero length")));
        }
        let closed = crack.is_closed();
        let n = segs.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (closed && i == 0 && j == n - 1);
                if adjacent {
                    // Consecutive segments may only share their common vertex.
                    let shared = if j == i + 1 { segs[i].b } else { segs[i].a };
                    let (s, t) = (&segs[i], &segs[j]);
                    let overlap = [s.a, s.b]
                        .iter()
                        .any(|&p| p != shared && t.contains(p))
                        || [t.a, t.b].iter().any(|&p| p != shared && s.contains(p));
                    if overlap {
                        return Err(GeometryError::MalformedCrack(format!(
                            "segments {i} and {j} overlap"
                        )));
                    }
                } else if segments_intersect(&segs[i], &segs[j]) {
                    return Err(GeometryError::MalformedCrack(format!(
                        "segments {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(crack)
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// First and last point coincide.
    pub fn is_closed(&self) -> bool {
        self.points.len() > 2 && self.points.first() == self.points.last()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment { a: w[0], b: w[1] })
    }

    pub fn contains(&self, p: Point) -> bool {
        self.segments().any(|s| s.contains(p))
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        self.segments().map(|s| s.distance_to(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, by: Point) -> Crack {
        Crack {
            points: self.points.iter().map(|p| Point::new(p.x + by.x, p.y + by.y)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        p.dist(self.center) <= self.radius * (1.0 + 1e-12)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Sorted, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion(Vec<(f64, f64)>);

impl IntervalUnion {
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        IntervalUnion(merged)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.0.iter().any(|&(lo, hi)| lo <= t && t <= hi)
    }

    /// Parts of `[lo, hi]` not covered by the union, as open gaps.
    pub fn gaps_within(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut gaps = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.0 {
            if b < cursor {
                continue;
            }
            if a > hi {
                break;
            }
            if a > cursor {
                gaps.push((cursor, a.min(hi)));
            }
            cursor = cursor.max(b);
        }
        if cursor < hi {
            gaps.push((cursor, hi));
        }
        gaps
    }
}

/// Union of the coordinate projections of all crack segments onto `axis`.
pub fn projection_intervals(crack: &Crack, axis: Axis) -> IntervalUnion {
    IntervalUnion::from_intervals(crack.segments().map(|s| s.projection(axis)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyStar {
    pub holds: bool,
    /// A point of `Ω_K` whose vertical and horizontal lines both meet `K`.
    pub witness: Option<Point>,
}

/// A cracked domain together with the ball that contains the crack and the
/// radius of the extension ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerforatedDomain {
    pub domain: Domain,
    pub crack: Crack,
    pub ball: Ball,
    pub extension_radius: f64,
}

/// `Ω \ B` for the extension ball `B`, described by its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularComplement {
    pub domain: Domain,
    pub hole: Ball,
}

impl AnnularComplement {
    pub fn contains(&self, p: Point) -> bool {
        self.domain.contains(p) && p.dist(self.hole.center) > self.hole.radius
    }

    pub fn area(&self) -> f64 {
        self.domain.area() - self.hole.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedSets {
    pub omega_eps_hat: AnnularComplement,
    pub ball_eps_hat: Ball,
}

impl PerforatedDomain {
    /// Default extension radius `3ε/2`.
    pub fn new(domain: Domain, crack: Crack, ball: Ball) -> Result<Self> {
        let extension_radius = 1.5 * ball.radius;
        Self::with_extension_radius(domain, crack, ball, extension_radius)
    }

    pub fn with_extension_radius(
        domain: Domain,
        crack: Crack,
        ball: Ball,
        extension_radius: f64,
    ) -> Result<Self> {
        let pd = PerforatedDomain { domain, crack, ball, extension_radius };
        pd.validate()?;
        Ok(pd)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        Ball::new(self.ball.center, self.ball.radius)?;
        let eps = self.ball.radius;
        let room = self.domain.distance_to_boundary(self.ball.center);
        if !(2.0 * eps < room) {
            return Err(GeometryError::InvalidParameter(format!(
                "ball of radius 2ε = {} around {} does not fit inside the domain (distance to boundary {room})",
                2.0 * eps,
                self.ball.center
            )));
        }
        check_extension_radius(eps, self.extension_radius)?;
        if let Some(p) = self.crack.points().iter().find(|p| !self.ball.contains_closed(**p)) {
            return Err(GeometryError::InvalidParameter(format!(
                "crack point {p} lies outside the ball of radius {eps} around {}",
                self.ball.center
            )));
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.ball.radius
    }

    pub fn extension_ball(&self) -> Ball {
        Ball { center: self.ball.center, radius: self.extension_radius }
    }

    pub fn derived_sets(&self) -> Result<DerivedSets> {
        check_extension_radius(self.ball.radius, self.extension_radius)?;
        let ball_eps_hat = self.extension_ball();
        Ok(DerivedSets {
            omega_eps_hat: AnnularComplement { domain: self.domain, hole: ball_eps_hat },
            ball_eps_hat,
        })
    }

    /// Exact property* decision.
    ///
    /// A point `(x0, y0)` of `Ω_K` violates property* iff `x0 ∈ proj_x K` and
    /// `y0 ∈ proj_y K` (lines are full chords of the convex `Ω`, and `K ⊂ Ω`).
    /// So property* holds iff `(proj_x K × proj_y K) ∩ Ω ⊆ K`, which is decided
    /// per pair of projection components.
    pub fn check_property_star(&self) -> PropertyStar {
        check_property_star(&self.domain, &self.crack)
    }
}

fn check_extension_radius(eps: f64, extension_radius: f64) -> Result<()> {
    if !(extension_radius > eps && extension_radius < 2.0 * eps) {
        return Err(GeometryError::InvalidParameter(format!(
            "extension radius {extension_radius} must lie in the open interval ({eps}, {})",
            2.0 * eps
        )));
    }
    Ok(())
}

pub fn check_property_star(domain: &Domain, crack: &Crack) -> PropertyStar {
    let holds = PropertyStar { holds: true, witness: None };
    if crack.is_empty() {
        return holds;
    }
    let px = projection_intervals(crack, Axis::X);
    let py = projection_intervals(crack, Axis::Y);
    for &(x0, x1) in px.intervals() {
        for &(y0, y1) in py.intervals() {
            let witness = match (x0 < x1, y0 < y1) {
                (true, true) => rectangle_witness(domain, crack, (x0, x1), (y0, y1)),
                (false, true) => line_witness(domain, crack, Axis::X, x0, (y0, y1)),
                (true, false) => line_witness(domain, crack, Axis::Y, y0, (x0, x1)),
                (false, false) => {
                    let p = Point::new(x0, y0);
                    (domain.contains(p) && !crack.contains(p)).then_some(p)
                }
            };
            if witness.is_some() {
                return PropertyStar { holds: false, witness };
            }
        }
    }
    holds
}

/// A point of the closed rectangle inside `Ω` and off `K`. The rectangle has
/// positive area and `K` has none, so one exists whenever the rectangle meets
/// `Ω`; probe a lattice that avoids the crack's own coordinates.
fn rectangle_witness(
    domain: &Domain,
    crack: &Crack,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
) -> Option<Point> {
    const FRACTIONS: [f64; 7] = [0.5, 0.3090169943749474, 0.6909830056250525, 0.1, 0.9, 0.01, 0.99];
    for &fx in &FRACTIONS {
        for &fy in &FRACTIONS {
            let p = Point::new(x0 + fx * (x1 - x0), y0 + fy * (y1 - y0));
            if domain.contains(p) && !crack.contains(p) {
                return Some(p);
            }
        }
    }
    None
}

/// Degenerate shadow: the segment `{axis = c} × [lo, hi]` must be covered by
/// crack segments lying on that line. Returns a point of an uncovered gap.
fn line_witness(domain: &Domain, crack: &Crack, axis: Axis, c: f64, (lo, hi): (f64, f64)) -> Option<Point> {
    let other = match axis {
        Axis::X => Axis::Y,
        Axis::Y => Axis::X,
    };
    let on_line: Vec<(f64, f64)> = crack
        .segments()
        .filter(|s| s.a.coord(axis) == c && s.b.coord(axis) == c)
        .map(|s| s.projection(other))
        .collect();
    let covered = IntervalUnion::from_intervals(on_line);
    let (chord_lo, chord_hi) = domain.chord(axis, c)?;
    let (lo, hi) = (lo.max(chord_lo), hi.min(chord_hi));
    if lo > hi {
        return None;
    }
    covered.gaps_within(lo, hi).into_iter().find_map(|(a, b)| {
        let t = 0.5 * (a + b);
        let p = match axis {
            Axis::X => Point::new(c, t),
            Axis::Y => Point::new(t, c),
        };
        (b > a && domain.contains(p) && !crack.contains(p)).then_some(p)
    })
}
