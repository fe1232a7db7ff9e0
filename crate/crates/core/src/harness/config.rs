use super::HarnessError;
use crate::geometry::{Crack, Domain, Point};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrackFamily {
    /// Vertical segment of length `ε` centred at the crack centre.
    Vslit,
    /// Horizontal segment of length `ε`.
    Hslit,
    /// Open square contour of half side `ε/2` with a gap in its top side.
    Splitring,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackSpec {
    pub family: CrackFamily,
    #[serde(default)]
    pub center: [f64; 2],
}

impl CrackSpec {
    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    /// The crack of size `ε` of this family.
    pub fn crack(&self, eps: f64) -> Crack {
        let c = self.center();
        let at = |x: f64, y: f64| Point::new(c.x + x * eps, c.y + y * eps);
        let built = match self.family {
            CrackFamily::None => return Crack::empty(),
            CrackFamily::Vslit => Crack::segment(at(0.0, -0.5), at(0.0, 0.5)),
            CrackFamily::Hslit => Crack::segment(at(-0.5, 0.0), at(0.5, 0.0)),
            CrackFamily::Splitring => Crack::new(vec![at(0.1, 0.5), at(-0.5, 0.5), at(-0.5, -0.5), at(0.5, -0.5), at(0.5, 0.5)]),
        };
        built.expect("family templates are valid polylines for ε > 0")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h0: f64,
    /// Crack-zone size as a fraction of `ε`.
    #[serde(default = "default_ratio")]
    pub crack_h_ratio: f64,
}

fn default_ratio() -> f64 {
    0.125
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_dense")]
    pub dense_threshold: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_dense() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    100.0
}

/// Full run configuration. Every section has a default reproducing the
/// centred vertical slit sweep on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default = "default_crack")]
    pub crack: CrackSpec,
    #[serde(default = "default_mesh")]
    pub mesh: MeshSpec,
    #[serde(default = "default_solver")]
    pub solver: SolverSpec,
    #[serde(default = "default_study")]
    pub study: StudySpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_domain() -> Domain {
    Domain::unit_square()
}

fn default_crack() -> CrackSpec {
    CrackSpec { family: CrackFamily::Vslit, center: [0.0, 0.0] }
}

fn default_mesh() -> MeshSpec {
    MeshSpec { h0: 0.02, crack_h_ratio: default_ratio() }
}

fn default_solver() -> SolverSpec {
    SolverSpec { k: 16, tol: default_tol(), dense_threshold: default_dense() }
}

fn default_study() -> StudySpec {
    StudySpec { epsilons: vec![0.2, 0.1, 0.05, 0.025], lambda: default_lambda() }
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            domain: default_domain(),
            crack: default_crack(),
            mesh: default_mesh(),
            solver: default_solver(),
            study: default_study(),
            seed: 0,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilons: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
}

fn bad(key: &str, why: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{key}: {why}"))
}

impl StudyConfig {
    /// Parses JSON; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." { "config".to_string() } else { path };
            bad(&key, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self, HarnessError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(e) = &o.epsilons {
            self.study.epsilons = e.clone();
        }
        if let Some(l) = o.lambda {
            self.study.lambda = l;
        }
        if let Some(k) = o.k {
            self.solver.k = k;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.domain.validate().map_err(|e| bad("domain", e))?;
        let room = self.domain.distance_to_boundary(self.crack.center());
        if !self.domain.contains(self.crack.center()) {
            return Err(bad("crack.center", "lies outside the domain"));
        }
        let m = &self.mesh;
        if !(m.h0 > 0.0 && m.h0.is_finite()) {
            return Err(bad("mesh.h0", format!("must be positive, got {}", m.h0)));
        }
        if !(m.crack_h_ratio > 0.0 && m.crack_h_ratio <= 0.25) {
            return Err(bad("mesh.crack_h_ratio", format!("must lie in (0, 0.25], got {}", m.crack_h_ratio)));
        }
        if self.solver.k < 2 {
            return Err(bad("solver.k", format!("must be at least 2, got {}", self.solver.k)));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(bad("solver.tol", format!("must lie in (0, 1), got {}", self.solver.tol)));
        }
        if !(self.study.lambda > 0.0 && self.study.lambda.is_finite()) {
            return Err(bad("study.lambda", format!("must be positive, got {}", self.study.lambda)));
        }
        let eps = &self.study.epsilons;
        if eps.is_empty() {
            return Err(bad("study.epsilons", "must not be empty"));
        }
        for (i, &e) in eps.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(bad("study.epsilons", format!("entry {i} must be positive, got {e}")));
            }
            if !(2.0 * e < room) {
                return Err(bad("study.epsilons", format!("entry {i} = {e}: the ball of radius 2ε must stay inside the domain (room {room})")));
            }
            if i > 0 && !(e < eps[i - 1]) {
                return Err(bad("study.epsilons", "must be strictly descending"));
            }
        }
        Ok(())
    }
}

/// Parses `0.2,0.1,0.05`.
pub fn parse_epsilons(s: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| bad("--epsilons", format!("{t:?}: {e}"))))
        .collect()
}
