//! Distances between spectra, multiplicity windows and log-log rate fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("distance to an empty set is undefined")]
    Empty,
    #[error("spectrum contains an invalid value {0}")]
    InvalidValue(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rate fit needs at least 3 points with positive distance, got {0}")]
    TooFewPoints(usize),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// Sorted non-negative eigenvalues. Values within `cluster_tol·max(1, λ)` of
/// their predecessor join its multiplicity cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    cluster_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: f64,
    pub multiplicity: usize,
    /// Index of the first member.
    pub start: usize,
}

impl Spectrum {
    pub fn new(values: &[f64]) -> Result<Self> {
        Self::with_cluster_tol(values, DEFAULT_CLUSTER_TOL)
    }

    pub fn with_cluster_tol(values: &[f64], cluster_tol: f64) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(SpectralError::InvalidValue(v));
        }
        if !(cluster_tol >= 0.0) {
            return Err(SpectralError::InvalidParameter(format!("cluster_tol must be non-negative, got {cluster_tol}")));
        }
        let mut values = values.to_vec();
        values.sort_by(f64::total_cmp);
        Ok(Self { values, cluster_tol })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn clusters(&self) -> Vec<Cluster> {
        let mut out: Vec<Cluster> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some(c) if v - self.values[i - 1] <= self.cluster_tol * v.max(1.0) => {
                    c.value = (c.value * c.multiplicity as f64 + v) / (c.multiplicity + 1) as f64;
                    c.multiplicity += 1;
                }
                _ => out.push(Cluster { value: v, multiplicity: 1, start: i }),
            }
        }
        out
    }
}

/// Hausdorff distance between finite sets of reals by a sweep over sorted copies.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(SpectralError::Empty);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(directed(&a, &b).max(directed(&b, &a)))
}

/// `sup_{x∈a} dist(x, b)` for sorted inputs.
fn directed(a: &[f64], b: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst: f64 = 0.0;
    for &x in a {
        while j + 1 < b.len() && b[j + 1] <= x {
            j += 1;
        }
        let mut d = (x - b[j]).abs();
        if j + 1 < b.len() {
            d = d.min((b[j + 1] - x).abs());
        }
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance of the resolvent images `{1/(1+λ)}`.
pub fn dbar(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    let t = |s: &Spectrum| s.values.iter().map(|l| 1.0 / (1.0 + l)).collect::<Vec<_>>();
    hausdorff(&t(a), &t(b))
}

/// Values `≤ lambda`.
pub fn truncate(spec: &Spectrum, lambda: f64) -> Spectrum {
    Spectrum { values: spec.values.iter().copied().filter(|&v| v <= lambda).collect(), cluster_tol: spec.cluster_tol }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCut {
    pub cut: f64,
    /// Width of the common gap containing the cut; 0 when no gap was found.
    pub gap_width: f64,
}

/// A truncation level `≤ lambda` placed at the middle of the widest gap of
/// `a ∪ b` within `[lambda/2, lambda]`, so no nearby pair straddles the cut.
/// Falls back to `lambda` with zero width.
pub fn common_gap_cut(a: &Spectrum, b: &Spectrum, lambda: f64) -> GapCut {
    let mut all: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    all.sort_by(f64::total_cmp);
    let mut best = GapCut { cut: lambda, gap_width: 0.0 };
    for w in all.windows(2) {
        let (lo, hi) = (w[0], w[1].min(lambda));
        if lo >= 0.5 * lambda && hi > lo && hi - lo > best.gap_width {
            best = GapCut { cut: 0.5 * (lo + hi), gap_width: hi - lo };
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCheck {
    pub count_in_window: usize,
    pub satisfied: bool,
}

/// Counts perturbed eigenvalues in `(lam − eta, lam + eta)`; satisfied iff at least `mu`.
pub fn multiplicity_match(reference: &Spectrum, perturbed: &Spectrum, lam: f64, mu: usize, eta: f64) -> Result<MultiplicityCheck> {
    if !(eta > 0.0) {
        return Err(SpectralError::InvalidParameter(format!("window half-width must be positive, got {eta}")));
    }
    let in_window = |s: &Spectrum| s.values.iter().filter(|&&v| (v - lam).abs() < eta).count();
    if in_window(reference) < mu {
        return Err(SpectralError::InvalidParameter(format!(
            "reference has fewer than {mu} eigenvalues within {eta} of {lam}"
        )));
    }
    let count_in_window = in_window(perturbed);
    Ok(MultiplicityCheck { count_in_window, satisfied: count_in_window >= mu })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// `(ε, d)` pairs entering the fit.
    pub points: Vec<(f64, f64)>,
    /// Pairs dropped because `d ≤ 0`.
    pub excluded: Vec<(f64, f64)>,
}

/// Least-squares fit of `log d = log C + p log ε`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let (used, excluded): (Vec<_>, Vec<_>) = points.iter().copied().partition(|&(e, d)| d > 0.0 && e > 0.0);
    if used.len() < 3 {
        return Err(SpectralError::TooFewPoints(used.len()));
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(SpectralError::InvalidParameter("all ε values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { exponent: slope, prefactor: intercept.exp(), r_squared, points: used, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn brute_hausdorff(a: &[f64], b: &[f64]) -> f64 {
        let one = |x: &[f64], y: &[f64]| {
            x.iter().map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        one(a, b).max(one(b, a))
    }

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v).unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(hausdorff(&[0.0], &[0.0, 3.0]).unwrap(), 3.0);
        assert_eq!(hausdorff(&[], &[1.0]), Err(SpectralError::Empty));
    }

    #[test]
    fn dbar_examples() {
        assert_eq!(dbar(&spec(&[0.0, PI * PI]), &spec(&[0.0, PI * PI])).unwrap(), 0.0);
        assert_eq!(dbar(&spec(&[0.0, 1.0]), &spec(&[0.0])).unwrap(), 0.5);
        assert_eq!(dbar(&spec(&[3.0]), &spec(&[1.0])).unwrap(), 0.25);
        assert!(matches!(Spectrum::new(&[-1.0]), Err(SpectralError::InvalidValue(_))));
    }

    #[test]
    fn truncate_examples() {
        let s = spec(&[0.0, 9.87, 19.7, 39.5]);
        assert_eq!(truncate(&s, 20.0).values(), &[0.0, 9.87, 19.7]);
        assert_eq!(truncate(&s, 100.0).values(), s.values());
        assert_eq!(truncate(&spec(&[0.0, 1.0]), 0.0).values(), &[0.0]);
    }

    #[test]
    fn clusters_detect_multiplicity() {
        let s = spec(&[0.0, PI * PI, PI * PI * (1.0 + 1e-9), 2.0 * PI * PI]);
        let c = s.clusters();
        assert_eq!(c.iter().map(|c| c.multiplicity).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(c[1].start, 1);
    }

    #[test]
    fn multiplicity_examples() {
        let reference = spec(&[0.0, PI * PI, PI * PI]);
        let hit = multiplicity_match(&reference, &spec(&[0.0, 9.82, 9.91]), PI * PI, 2, 0.5).unwrap();
        assert_eq!(hit, MultiplicityCheck { count_in_window: 2, satisfied: true });
        assert!(multiplicity_match(&reference, &reference, PI * PI, 2, 1e-3).unwrap().satisfied);
        let miss = multiplicity_match(&reference, &spec(&[0.0, 5.0]), PI * PI, 2, 0.1).unwrap();
        assert_eq!(miss, MultiplicityCheck { count_in_window: 0, satisfied: false });
        assert!(multiplicity_match(&reference, &reference, PI * PI, 2, 0.0).is_err());
    }

    #[test]
    fn fit_examples() {
        let f = fit_rate(&[(0.2, 0.2), (0.1, 0.1), (0.05, 0.05)]).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_rate(&[(0.16, 0.4), (0.04, 0.2), (0.01, 0.1)]).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, e.powf(1.0 / 6.0))).collect();
        assert!((fit_rate(&pts).unwrap().exponent - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(0.1, 0.1), (0.2, 0.0), (0.3, 0.3)]), Err(SpectralError::TooFewPoints(2)));
    }

    #[test]
    fn gap_cut_avoids_straddling() {
        let a = spec(&[0.0, 9.87, 19.74, 39.5, 49.3, 78.96, 88.8, 98.7, 99.9]);
        let b = spec(&[0.0, 9.8, 19.6, 39.2, 49.0, 78.5, 88.1, 98.0, 100.2]);
        let g = common_gap_cut(&a, &b, 100.0);
        assert!(g.cut > 88.8 && g.cut < 98.0, "{g:?}");
        assert!((g.gap_width - 9.2).abs() < 1e-9);
        assert_eq!(truncate(&a, g.cut).len(), truncate(&b, g.cut).len());
    }

    fn finite_set() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..50.0, 1..12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn hausdorff_matches_brute_force_and_is_a_metric(a in finite_set(), b in finite_set(), c in finite_set()) {
            let ab = hausdorff(&a, &b).unwrap();
            prop_assert!((ab - brute_hausdorff(&a, &b)).abs() <= 1e-12);
            prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
            let ac = hausdorff(&a, &c).unwrap();
            let bc = hausdorff(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn dbar_matches_definition(a in finite_set(), b in finite_set(), extra in 0.0f64..50.0) {
            let t = |v: &[f64]| v.iter().map(|l| 1.0 / (1.0 + l)).collect::<Vec<_>>();
            let d = dbar(&spec(&a), &spec(&b)).unwrap();
            prop_assert!((d - brute_hausdorff(&t(&a), &t(&b))).abs() <= 1e-12);
            let mut a2 = a.clone();
            a2.push(extra);
            let mut b2 = b.clone();
            b2.push(extra);
            prop_assert!(dbar(&spec(&a2), &spec(&b2)).unwrap() <= d + 1e-12);
        }

        #[test]
        fn singleton_dbar_formula(l in 0.0f64..1e3, m in 0.0f64..1e3) {
            let d = dbar(&spec(&[l]), &spec(&[m])).unwrap();
            let f = (l - m).abs() / ((1.0 + l) * (1.0 + m));
            prop_assert!((d - f).abs() <= 1e-12 * (1.0 + f));
        }
    }
}
