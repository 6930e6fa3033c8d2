//! Experiment configuration (JSON). The schema lives in
//! `schema/config.schema.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sobosvd_core::cases::get_case;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Upper limit on the number of rank vectors a sweep may expand to.
pub const MAX_SWEEP: usize = 4096;

/// Upper limit on the number of grid points (1 GiB of samples).
pub const MAX_POINTS: usize = 1 << 27;

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub ranks: RankSpec,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Case(CaseSpec),
    /// Raw sample file; its `.meta.json` sidecar supplies shape and domain.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RankSpec {
    Explicit(Vec<Vec<usize>>),
    Sweep(SweepSpec),
}

/// `r_i = min(from + i*step, to)` per mode, for as many steps as the longest
/// mode needs. A step of 0 keeps that mode fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub from: PerMode,
    pub to: PerMode,
    #[serde(default = "PerMode::one")]
    pub step: PerMode,
}

/// A single value shared by all modes, or one value per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    All(usize),
    Each(Vec<usize>),
}

impl PerMode {
    fn one() -> Self {
        PerMode::All(1)
    }

    fn expand(&self, d: usize, what: &str) -> Result<Vec<usize>, ConfigError> {
        match self {
            PerMode::All(v) => Ok(vec![*v; d]),
            PerMode::Each(v) if v.len() == d => Ok(v.clone()),
            PerMode::Each(v) => Err(invalid(format!("sweep `{what}` has {} entries for {d} modes", v.len()))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    EckartYoung,
    H1Identity,
    EkIdentity,
    HosvdBound,
    QuasiOpt,
    Sandwich,
    DerivativeBound,
    Diagnostics,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::EckartYoung => "eckart_young",
            Check::H1Identity => "h1_identity",
            Check::EkIdentity => "ek_identity",
            Check::HosvdBound => "hosvd_bound",
            Check::QuasiOpt => "quasi_opt",
            Check::Sandwich => "sandwich",
            Check::DerivativeBound => "derivative_bound",
            Check::Diagnostics => "diagnostics",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of the two-variable `H¹` expansions.
    pub identity_rel: f64,
    /// Relative residual of the per-mode `e_j` expansions.
    pub ek_rel: f64,
    /// Relative residual of `‖u - P^j_r u‖₀²` against the `σ` tail.
    pub eckart_young_rel: f64,
    /// Absolute slack of the `L²` HOSVD, quasi-optimality and derivative bounds.
    pub bound_abs: f64,
    /// Absolute slack of both `H¹` brackets.
    pub sandwich_slack: f64,
    /// Relative error of the derivative transfer.
    pub transfer_rel: f64,
    /// Relative threshold of the numerical rank.
    pub rank_tol: f64,
    pub hooi_max_iters: usize,
    pub hooi_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_rel: 1e-10,
            ek_rel: 1e-10,
            eckart_young_rel: 1e-10,
            bound_abs: 1e-10,
            sandwich_slack: 1e-9,
            transfer_rel: 1e-10,
            rank_tol: 1e-12,
            hooi_max_iters: 50,
            hooi_tol: 1e-12,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("identity_rel", self.identity_rel),
            ("ek_rel", self.ek_rel),
            ("eckart_young_rel", self.eckart_young_rel),
            ("bound_abs", self.bound_abs),
            ("sandwich_slack", self.sandwich_slack),
            ("transfer_rel", self.transfer_rel),
            ("rank_tol", self.rank_tol),
            ("hooi_tol", self.hooi_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!(
                    "tolerance `{name}` must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.hooi_max_iters == 0 {
            return Err(invalid("tolerance `hooi_max_iters` must be at least 1"));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let FunctionSpec::File(p) = &mut cfg.function {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    /// Checks that do not need the sample file. `shape` is the resolved
    /// grid shape.
    pub fn validate(&self, shape: &[usize]) -> Result<Vec<Vec<usize>>, ConfigError> {
        let d = shape.len();
        if d == 0 {
            return Err(invalid("grid must have at least one mode"));
        }
        if let Some(j) = shape.iter().position(|&n| n < 3) {
            return Err(invalid(format!(
                "grid.n[{}] = {} is below the minimum of 3",
                j + 1,
                shape[j]
            )));
        }
        match shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)) {
            Some(p) if p <= MAX_POINTS => {}
            _ => {
                return Err(invalid(format!(
                    "grid {shape:?} exceeds the limit of {MAX_POINTS} points"
                )))
            }
        }
        if self.checks.is_empty() {
            return Err(invalid("checks must not be empty"));
        }
        self.tolerances.validate()?;
        if d < 2 {
            return Err(invalid("decompositions need at least 2 modes"));
        }
        if self.checks.contains(&Check::H1Identity) && d != 2 {
            return Err(invalid(format!("h1_identity needs a 2-way function, got {d} modes")));
        }
        let ranks = self.rank_vectors(d)?;
        if ranks.is_empty() {
            return Err(invalid("no rank vectors given"));
        }
        for r in &ranks {
            if r.len() != d {
                return Err(invalid(format!(
                    "rank vector {r:?} has {} entries for {d} modes",
                    r.len()
                )));
            }
            for (j, (&rj, &nj)) in r.iter().zip(shape).enumerate() {
                if rj > nj {
                    return Err(invalid(format!(
                        "rank {rj} exceeds n = {nj} in mode {} of {r:?}",
                        j + 1
                    )));
                }
            }
        }
        if self.checks.contains(&Check::Diagnostics) && ranks.len() < 3 {
            return Err(invalid("diagnostics need at least 3 rank vectors"));
        }
        Ok(ranks)
    }

    pub fn rank_vectors(&self, d: usize) -> Result<Vec<Vec<usize>>, ConfigError> {
        match &self.ranks {
            RankSpec::Explicit(v) => Ok(v.clone()),
            RankSpec::Sweep(s) => {
                let from = s.from.expand(d, "from")?;
                let to = s.to.expand(d, "to")?;
                let step = s.step.expand(d, "step")?;
                let mut count = 1usize;
                for j in 0..d {
                    if from[j] > to[j] {
                        return Err(invalid(format!(
                            "sweep mode {}: from {} > to {}",
                            j + 1,
                            from[j],
                            to[j]
                        )));
                    }
                    if let Some(q) = (to[j] - from[j]).checked_div(step[j]) {
                        count = count.max(q + 1);
                    }
                }
                if count > MAX_SWEEP {
                    return Err(invalid(format!(
                        "sweep expands to {count} rank vectors, limit is {MAX_SWEEP}"
                    )));
                }
                Ok((0..count)
                    .map(|i| {
                        (0..d)
                            .map(|j| from[j].saturating_add(i.saturating_mul(step[j])).min(to[j]))
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// Shape for a catalog case, which needs `grid.n`.
    pub fn case_shape(&self, case: &CaseSpec) -> Result<Vec<usize>, ConfigError> {
        let c = get_case(&case.name, &case.params).map_err(|e| invalid(e.to_string()))?;
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| invalid(format!("grid.n is required for case {}", c.name())))?;
        if grid.n.len() != c.dim() {
            return Err(invalid(format!(
                "case {} is {}-dimensional but grid.n has {} entries",
                c.name(),
                c.dim(),
                grid.n.len()
            )));
        }
        Ok(grid.n.clone())
    }

    /// Checks in request order, duplicates removed.
    pub fn unique_checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for c in &self.checks {
            if !out.contains(c) {
                out.push(*c);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEP1: &str = r#"{
        "function": {"case": {"name": "SEP1"}},
        "grid": {"n": [9, 9]},
        "ranks": {"explicit": [[1, 1], [2, 2]]},
        "checks": ["h1_identity", "sandwich"],
        "output": "out"
    }"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(SEP1).unwrap();
        assert_eq!(c.tolerances, Tolerances::default());
        let shape = match &c.function {
            FunctionSpec::Case(cs) => c.case_shape(cs).unwrap(),
            FunctionSpec::File(_) => unreachable!(),
        };
        assert_eq!(c.validate(&shape).unwrap(), vec![vec![1, 1], vec![2, 2]]);
    }

    #[test]
    fn sweep_expands_per_mode() {
        let text = SEP1.replace(
            r#"{"explicit": [[1, 1], [2, 2]]}"#,
            r#"{"sweep": {"from": [1, 2], "to": [5, 3], "step": [2, 1]}}"#,
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.rank_vectors(2).unwrap(), vec![vec![1, 2], vec![3, 3], vec![5, 3]]);
        let text = SEP1.replace(
            r#"{"explicit": [[1, 1], [2, 2]]}"#,
            r#"{"sweep": {"from": 1, "to": 3}}"#,
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.rank_vectors(2).unwrap(), vec![vec![1, 1], vec![2, 2], vec![3, 3]]);
    }

    #[test]
    fn rejects_rank_above_n() {
        let text = SEP1.replace("[2, 2]]", "[10, 2]]");
        let c = ExperimentConfig::from_json(&text).unwrap();
        let err = c.validate(&[9, 9]).unwrap_err().to_string();
        assert!(err.contains("exceeds n = 9"), "{err}");
    }

    #[test]
    fn rejects_structural_problems() {
        let c = ExperimentConfig::from_json(SEP1).unwrap();
        assert!(c.validate(&[2, 9]).is_err());
        assert!(c.validate(&[9, 9, 9]).is_err());
        let mut empty = c.clone();
        empty.checks.clear();
        assert!(empty.validate(&[9, 9]).is_err());
        let mut diag = c.clone();
        diag.checks = vec![Check::Diagnostics];
        assert!(diag.validate(&[9, 9]).is_err());
        let mut tol = c;
        tol.tolerances.sandwich_slack = f64::NAN;
        assert!(tol.validate(&[9, 9]).is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_checks() {
        assert!(ExperimentConfig::from_json(&SEP1.replace("\"output\"", "\"outptu\"")).is_err());
        assert!(ExperimentConfig::from_json(&SEP1.replace("sandwich", "sandwhich")).is_err());
    }

    #[test]
    fn file_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.json");
        let text = SEP1.replace(r#"{"case": {"name": "SEP1"}}"#, r#"{"file": "u.bin"}"#);
        std::fs::write(&p, text).unwrap();
        let c = ExperimentConfig::load(&p).unwrap();
        assert_eq!(c.function, FunctionSpec::File(dir.path().join("u.bin")));
        assert_eq!(c.output, dir.path().join("out"));
    }

    #[test]
    fn duplicate_checks_collapse() {
        let mut c = ExperimentConfig::from_json(SEP1).unwrap();
        c.checks = vec![Check::Sandwich, Check::EkIdentity, Check::Sandwich];
        assert_eq!(c.unique_checks(), vec![Check::Sandwich, Check::EkIdentity]);
    }
}
