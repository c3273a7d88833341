//! Run configuration for the batch driver: one serializable struct holding
//! everything a suite run depends on, so reports can embed the resolved
//! configuration and a rerun from the report reproduces the run.
//!
//! Overrides come as dotted paths (`--set minimize.optim.max_iters=200`);
//! they are applied to the JSON tree before the typed parse, so a bad key
//! or a type mismatch surfaces as a configuration error, not a panic.

use serde::{Deserialize, Serialize};

use crate::error::{QhmError, Result};
use crate::opt::{ChartSpec, OptimOptions};
use crate::params::{AlgebraParams, Truncation};
use crate::random::RandomProfile;
use crate::rep::RepGrid;

/// Tolerances for the suite residuals. The working tolerances mirror the
/// defaults the library tests pin; everything is overridable per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Product-accuracy tolerance: associativity, Leibniz, action law.
    pub assoc: f64,
    /// Identities that hold to roundoff (diagonal operators, trace of d_j).
    pub exact: f64,
    /// Equivalence-theorem residual bound.
    pub thm: f64,
    /// Representation-oracle residual bound.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { assoc: 1e-6, exact: 1e-12, thm: 1e-5, oracle: 1e-5 }
    }
}

/// Axioms command: the convergence ladder and the required per-doubling
/// residual contraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxiomsOptions {
    pub nx_ladder: Vec<usize>,
    pub min_rate: f64,
}

impl Default for AxiomsOptions {
    fn default() -> Self {
        AxiomsOptions { nx_ladder: vec![16, 32, 64], min_rate: 64.0 }
    }
}

/// Derivations command. `bracket_alpha` substitutes a foreign alpha into
/// the expected side of the delta-bracket identity only; setting it away
/// from the algebra's alpha is the documented negative control and makes
/// the bracket check fail by O(1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DerivationsOptions {
    pub bracket_alpha: Option<f64>,
}

impl Default for DerivationsOptions {
    fn default() -> Self {
        DerivationsOptions { bracket_alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupOptions {
    /// Number of random pairs (g, h) exercised per identity.
    pub pairs: usize,
}

impl Default for GroupOptions {
    fn default() -> Self {
        GroupOptions { pairs: 5 }
    }
}

/// Equivalence command: seeds per rank, and the falsifier switch that runs
/// the spectral side with the flipped alpha-term sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivalenceOptions {
    pub seeds_q1: Vec<u64>,
    pub seeds_q2: Vec<u64>,
    pub flip_alpha_term: bool,
    pub c_d: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            seeds_q1: vec![101, 102, 103, 104, 105],
            seeds_q2: vec![201, 202, 203],
            flip_alpha_term: false,
            c_d: 1.0,
        }
    }
}

/// Minimize command: chart shape, optimizer options, start amplitude, and
/// the terminal-value target the run is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub chart: ChartSpec,
    pub optim: OptimOptions,
    pub start_scale: f64,
    pub target: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            chart: ChartSpec::default(),
            optim: OptimOptions::default(),
            start_scale: 0.1,
            target: 1e-6,
        }
    }
}

/// Oracle command: sampling grid, number of factor pairs, trial vectors per
/// pair, and the p = 0 restriction used by the interpolation-free check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    pub grid: RepGrid,
    pub pairs: usize,
    pub trials: usize,
    pub p_zero_only: bool,
    /// Tolerance for the p = 0 run (pointwise products, no interpolation).
    pub tol_p_zero: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            grid: RepGrid::default(),
            pairs: 5,
            trials: 3,
            p_zero_only: false,
            tol_p_zero: 1e-10,
        }
    }
}

/// Everything one suite run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: AlgebraParams,
    pub trunc: Truncation,
    /// Band limits of generated inputs; the truncation above is headroom.
    pub profile: RandomProfile,
    pub seed: u64,
    pub tol: Tolerances,
    pub axioms: AxiomsOptions,
    pub derivations: DerivationsOptions,
    pub group: GroupOptions,
    pub equivalence: EquivalenceOptions,
    pub minimize: MinimizeOptions,
    pub oracle: OracleOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: AlgebraParams::default(),
            trunc: Truncation::default(),
            profile: RandomProfile::default(),
            seed: 7,
            tol: Tolerances::default(),
            axioms: AxiomsOptions::default(),
            derivations: DerivationsOptions::default(),
            group: GroupOptions::default(),
            equivalence: EquivalenceOptions::default(),
            minimize: MinimizeOptions::default(),
            oracle: OracleOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.trunc.validate()?;
        self.profile.validate()?;
        for t in [self.tol.assoc, self.tol.exact, self.tol.thm, self.tol.oracle] {
            if !(t.is_finite() && t > 0.0) {
                return Err(QhmError::InvalidParams(format!("tolerances must be positive, got {t}")));
            }
        }
        if self.axioms.nx_ladder.is_empty() {
            return Err(QhmError::InvalidParams("nx ladder must list at least one grid".into()));
        }
        for w in self.axioms.nx_ladder.windows(2) {
            if w[1] != 2 * w[0] {
                return Err(QhmError::InvalidParams(
                    "nx ladder must double at each step".into(),
                ));
            }
        }
        if !(self.axioms.min_rate.is_finite() && self.axioms.min_rate >= 1.0) {
            return Err(QhmError::InvalidParams("convergence rate bound must be >= 1".into()));
        }
        if self.group.pairs == 0 {
            return Err(QhmError::InvalidParams("group suite needs at least one pair".into()));
        }
        if let Some(a) = self.derivations.bracket_alpha {
            if !(a.is_finite() && a != 0.0) {
                return Err(QhmError::InvalidParams("bracket alpha must be finite and nonzero".into()));
            }
        }
        if !(self.equivalence.c_d.is_finite() && self.equivalence.c_d > 0.0) {
            return Err(QhmError::InvalidParams("c_d must be positive".into()));
        }
        if self.equivalence.seeds_q1.is_empty() && self.equivalence.seeds_q2.is_empty() {
            return Err(QhmError::InvalidParams("equivalence suite needs at least one seed".into()));
        }
        self.minimize.chart.validate(&self.trunc)?;
        self.minimize.optim.validate()?;
        if !(self.minimize.start_scale.is_finite() && self.minimize.start_scale >= 0.0) {
            return Err(QhmError::InvalidParams("start scale must be nonnegative".into()));
        }
        if !(self.minimize.target.is_finite() && self.minimize.target > 0.0) {
            return Err(QhmError::InvalidParams("minimize target must be positive".into()));
        }
        self.oracle.grid.validate_extents()?;
        if self.oracle.pairs == 0 || self.oracle.trials == 0 {
            return Err(QhmError::InvalidParams("oracle suite needs pairs and trials".into()));
        }
        if !(self.oracle.tol_p_zero.is_finite() && self.oracle.tol_p_zero > 0.0) {
            return Err(QhmError::InvalidParams("p = 0 oracle tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| QhmError::InvalidParams(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default config, overrides applied, validated.
    pub fn resolve(base: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
        let cfg = match base {
            Some(text) => serde_json::from_str::<RunConfig>(text)
                .map_err(|e| QhmError::InvalidParams(format!("config parse: {e}")))?,
            None => RunConfig::default(),
        };
        let cfg = apply_overrides(&cfg, overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Apply `key.path=value` assignments on the JSON image of the config. The
/// path must name an existing field; the value is parsed as JSON when it is
/// valid JSON and taken as a bare string otherwise.
pub fn apply_overrides(cfg: &RunConfig, sets: &[String]) -> Result<RunConfig> {
    if sets.is_empty() {
        return Ok(cfg.clone());
    }
    let mut tree = serde_json::to_value(cfg)
        .map_err(|e| QhmError::InvalidParams(format!("config serialize: {e}")))?;
    for s in sets {
        let Some((path, raw)) = s.split_once('=') else {
            return Err(QhmError::InvalidParams(format!(
                "override '{s}' is not of the form key.path=value"
            )));
        };
        let value: serde_json::Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(_) => serde_json::Value::String(raw.to_string()),
        };
        let mut node = &mut tree;
        let parts: Vec<&str> = path.split('.').collect();
        for (d, part) in parts.iter().enumerate() {
            let here: &mut serde_json::Value = node;
            let entry = here
                .as_object_mut()
                .ok_or_else(|| {
                    QhmError::InvalidParams(format!(
                        "override path '{path}' descends into a non-object"
                    ))
                })?
                .get_mut(*part)
                .ok_or_else(|| {
                    QhmError::InvalidParams(format!(
                        "override path '{path}': unknown field '{part}'"
                    ))
                })?;
            if d + 1 == parts.len() {
                *entry = value.clone();
                break;
            }
            node = entry;
        }
    }
    serde_json::from_value(tree)
        .map_err(|e| QhmError::InvalidParams(format!("override produced an invalid config: {e}")))
}
