//! `report.json` and `sigma.csv`. The JSON layout is pinned by
//! `schema/report.schema.json`; bump [`SCHEMA_VERSION`] when it changes.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use sobosvd_core::diagnostics::{LevelFit, RateFit};
use sobosvd_core::sobolev::DerivativeData;
use sobosvd_core::truncation::ErrorReport;

use crate::config::Tolerances;
use crate::io_util::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "mode,k,sigma,dpsi_norm,bound_value";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub function: FunctionInfo,
    pub shape: Vec<usize>,
    pub domain: Vec<[f64; 2]>,
    pub norms: NormsOut,
    pub tolerances: Tolerances,
    pub modes: Vec<ModeOut>,
    pub results: Vec<ResultOut>,
    pub checks: Vec<CheckRecord>,
    pub diagnostics: Option<DiagnosticsOut>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionInfo {
    Case { name: String, params: Vec<f64> },
    File { path: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct NormsOut {
    pub l2: f64,
    pub h1: f64,
    /// `‖u‖_{e_j}` per mode.
    pub ek: Vec<f64>,
}

/// Mode-`j` spectrum. `sigmas` and `dpsi_norms` cover every singular triplet;
/// `gamma_norms` and `bound_values` only the retained ones.
#[derive(Clone, Debug, Serialize)]
pub struct ModeOut {
    /// 1-based.
    pub mode: usize,
    pub numerical_rank: usize,
    pub retained: usize,
    pub sigmas: Vec<f64>,
    pub dpsi_norms: Vec<f64>,
    pub gamma_norms: Vec<f64>,
    pub bound_values: Vec<f64>,
    pub transfer_error: f64,
    pub bound_excess: f64,
}

impl ModeOut {
    pub fn new(dd: &DerivativeData, numerical_rank: usize) -> Self {
        Self {
            mode: dd.mode + 1,
            numerical_rank,
            retained: dd.retained(),
            sigmas: dd.sigmas.clone(),
            dpsi_norms: dd.dpsi_norms.clone(),
            gamma_norms: dd.gamma_norms.clone(),
            bound_values: dd.bound_values.clone(),
            transfer_error: dd.max_transfer_error(),
            bound_excess: dd.max_bound_excess(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultOut {
    pub ranks: Vec<usize>,
    pub measured: MeasuredOut,
    pub formula: FormulaOut,
    pub bounds: BoundsOut,
    pub gammas: Vec<Option<f64>>,
    /// Best `‖u - u_𝐫‖₀` found by HOOI, when `quasi_opt` was requested.
    pub hooi_error: Option<f64>,
    /// `‖u - P^j_{r_j} u‖₀²` per mode, when `eckart_young` was requested.
    pub mode_l2_sq: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasuredOut {
    pub l2: f64,
    pub h1: f64,
    pub ek: Vec<f64>,
    pub projected_h1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormulaOut {
    pub urrep_value: Option<f64>,
    pub tail_error_value: Option<f64>,
    pub ek_tail: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsOut {
    pub hosvd_l2_tail_sum: f64,
    pub quasi_opt_reference: Option<f64>,
    pub norm_lower: f64,
    pub norm_upper: f64,
    pub h1_lower: f64,
    pub h1_upper: f64,
    pub limit_partial_sum: Option<f64>,
}

impl ResultOut {
    pub fn new(rep: &ErrorReport) -> Self {
        let b = &rep.bounds;
        Self {
            ranks: rep.ranks.clone(),
            measured: MeasuredOut {
                l2: rep.measured.l2,
                h1: rep.measured.h1,
                ek: rep.measured.ek.clone(),
                projected_h1: rep.measured.projected_h1,
            },
            formula: FormulaOut {
                urrep_value: rep.formula.urrep_value,
                tail_error_value: rep.formula.tail_error_value,
                ek_tail: rep.formula.ek_tail.clone(),
            },
            bounds: BoundsOut {
                hosvd_l2_tail_sum: b.hosvd_l2_tail_sum,
                quasi_opt_reference: b.quasi_opt_reference,
                norm_lower: b.norm_lower,
                norm_upper: b.norm_upper,
                h1_lower: b.h1_lower,
                h1_upper: b.h1_upper,
                limit_partial_sum: b.limit_partial_sum,
            },
            gammas: rep.gammas.clone(),
            hooi_error: None,
            mode_l2_sq: None,
        }
    }
}

/// One evaluated check. It passes iff `residual ≤ tolerance`. For identities
/// `residual` is the relative mismatch; for bounds it is how far the measured
/// value crosses the bound (negative when the bound holds with room).
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub quantity: Option<String>,
    pub ranks: Option<Vec<usize>>,
    /// 1-based.
    pub mode: Option<usize>,
    pub passed: bool,
    pub measured: Option<f64>,
    pub expected: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFitOut {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: usize,
}

impl From<&RateFit> for RateFitOut {
    fn from(f: &RateFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            used: f.used,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelFitOut {
    pub mode: usize,
    pub cutoffs: Vec<usize>,
    pub values: Vec<f64>,
    pub fit: Option<RateFitOut>,
}

impl LevelFitOut {
    pub fn new(mode: usize, lf: &LevelFit) -> Self {
        Self {
            mode: mode + 1,
            cutoffs: lf.cutoffs.clone(),
            values: lf.values.clone(),
            fit: lf.fit.as_ref().map(RateFitOut::from),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsOut {
    /// Abscissa of the rate fits: `max_j r_j` of each rank vector.
    pub rates_x: Vec<f64>,
    pub h1_errors: Vec<f64>,
    pub l2_errors: Vec<f64>,
    pub h1_rate: Option<RateFitOut>,
    pub l2_rate: Option<RateFitOut>,
    pub h1_partial_sums: Vec<f64>,
    pub convergence_flag: Option<String>,
    pub bernstein: Vec<LevelFitOut>,
    pub notes: Vec<String>,
}

pub fn sigma_csv(derivs: &[DerivativeData]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for dd in derivs {
        for k in 0..dd.retained() {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e}",
                dd.mode + 1,
                k + 1,
                dd.sigmas[k],
                dd.dpsi_norms[k],
                dd.bound_values[k]
            )
            .expect("writing to a String");
        }
    }
    out
}

/// Writes `report.json` and `sigma.csv` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, report: &Report, csv: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_vec_pretty(report).map_err(io::Error::other)?;
    json.push(b'\n');
    write_atomic(&dir.join("report.json"), &json)?;
    write_atomic(&dir.join("sigma.csv"), csv.as_bytes())
}
