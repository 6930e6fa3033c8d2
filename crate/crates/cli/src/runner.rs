//! Executes one experiment config end to end.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sobosvd_core::cases::get_case;
use sobosvd_core::diagnostics::{bernstein_exponent, h1_convergence_flag, rate_fit};
use sobosvd_core::discretization::GridFunction;
use sobosvd_core::sobolev::{norm_ek, norm_h1, norm_l2};
use sobosvd_core::svd::{numerical_rank, DEFAULT_RANK_TOL};
use sobosvd_core::truncation::{analyze_modes, h1_sandwich_with, hooi, truncate_svd, ModeAnalysis};
use thiserror::Error;

use crate::config::{Check, ConfigError, ExperimentConfig, FunctionSpec, Tolerances};
use crate::report::{
    sigma_csv, write_outputs, CheckRecord, DiagnosticsOut, FunctionInfo, LevelFitOut, ModeOut, NormsOut, RateFitOut,
    Report, ResultOut, SCHEMA_VERSION,
};
use crate::samples::{load_samples, SampleError};

/// Identity residuals are relative to `max(measured, RESIDUAL_FLOOR ‖u‖²)`.
/// A residual `u - P u` formed in `f64` carries `O(eps ‖u‖)` noise, so a
/// tail below `1e-12 ‖u‖²` cannot be measured to 1e-10 relative accuracy.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Deepest Bernstein level attempted by the diagnostics (`Γ(2^5)`).
const MAX_BERNSTEIN_LEVEL: u32 = 5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Samples(#[from] SampleError),

    #[error("cannot write outputs to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("computation failed: {0}")]
    Compute(#[from] sobosvd_core::Error),
}

impl RunError {
    /// 2 for config problems, 3 for file problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Samples(_) | RunError::Output { .. } => 3,
            RunError::Compute(_) => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub report: Report,
    pub output_dir: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

/// Loads the function and returns it with the validated rank vectors.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(GridFunction, Vec<Vec<usize>>, FunctionInfo), RunError> {
    match &cfg.function {
        FunctionSpec::Case(cs) => {
            let shape = cfg.case_shape(cs)?;
            let ranks = cfg.validate(&shape)?;
            let case = get_case(&cs.name, &cs.params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let info = FunctionInfo::Case {
                name: case.name().to_string(),
                params: case.params(),
            };
            Ok((case.sample(&shape)?, ranks, info))
        }
        FunctionSpec::File(path) => {
            let want = cfg.grid.as_ref().map(|g| g.n.clone());
            if let Some(n) = &want {
                cfg.validate(n)?;
            }
            let u = load_samples(path, want.as_deref())?;
            let ranks = cfg.validate(u.shape())?;
            let info = FunctionInfo::File {
                path: path.display().to_string(),
            };
            Ok((u, ranks, info))
        }
    }
}

pub fn run(cfg: &ExperimentConfig, out_override: Option<&Path>) -> Result<RunSummary, RunError> {
    let (u, ranks, info) = prepare(cfg)?;
    let (report, csv) = evaluate(&u, &ranks, &cfg.unique_checks(), &cfg.tolerances, info)?;
    let dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.clone());
    write_outputs(&dir, &report, &csv).map_err(|source| RunError::Output {
        path: dir.clone(),
        source,
    })?;
    Ok(RunSummary {
        report,
        output_dir: dir,
    })
}

/// `|formula - measured| / max(|measured|, floor)`.
fn rel_residual(formula: f64, measured: f64, floor: f64) -> f64 {
    (formula - measured).abs() / measured.abs().max(floor).max(f64::MIN_POSITIVE)
}

struct Recorder {
    records: Vec<CheckRecord>,
}

impl Recorder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        check: Check,
        quantity: Option<&str>,
        ranks: Option<&[usize]>,
        mode: Option<usize>,
        measured: f64,
        expected: f64,
        residual: f64,
        tolerance: f64,
    ) {
        self.records.push(CheckRecord {
            name: check.as_str().to_string(),
            quantity: quantity.map(str::to_string),
            ranks: ranks.map(<[usize]>::to_vec),
            mode: mode.map(|j| j + 1),
            passed: residual <= tolerance,
            measured: Some(measured),
            expected: Some(expected),
            residual: Some(residual),
            tolerance: Some(tolerance),
            message: None,
        });
    }
}

/// Runs the requested checks on `u`; returns the report and the `sigma.csv`
/// text.
pub fn evaluate(
    u: &GridFunction,
    ranks: &[Vec<usize>],
    checks: &[Check],
    tol: &Tolerances,
    function: FunctionInfo,
) -> Result<(Report, String), RunError> {
    let d = u.ndim();
    let modes = analyze_modes(u)?;
    let h1_total = norm_h1(u);
    let norms = NormsOut {
        l2: norm_l2(u),
        h1: h1_total,
        ek: (0..d).map(|j| norm_ek(u, j)).collect::<Result<Vec<_>, _>>()?,
    };
    let floor = RESIDUAL_FLOOR * h1_total * h1_total;

    let want = |c: Check| checks.contains(&c);
    let results = ranks
        .par_iter()
        .map(|r| evaluate_ranks(u, &modes, r, want(Check::QuasiOpt), want(Check::EckartYoung), tol))
        .collect::<Result<Vec<_>, RunError>>()?;

    let mut rec = Recorder { records: Vec::new() };
    for &check in checks {
        match check {
            Check::DerivativeBound => {
                for dd in &modes.derivs {
                    let t = dd.max_transfer_error();
                    rec.push(
                        check,
                        Some("transfer"),
                        None,
                        Some(dd.mode),
                        t,
                        0.0,
                        t,
                        tol.transfer_rel,
                    );
                    let b = dd.max_bound_excess();
                    rec.push(check, Some("bound"), None, Some(dd.mode), b, 0.0, b, tol.bound_abs);
                }
            }
            Check::Diagnostics => {}
            _ => {
                for res in &results {
                    per_rank_checks(&mut rec, check, res, &modes, d, floor, tol);
                }
            }
        }
    }

    let diagnostics = if want(Check::Diagnostics) {
        let (diag, ok, msg) = diagnostics(&results, &modes, d);
        rec.records.push(CheckRecord {
            name: Check::Diagnostics.as_str().to_string(),
            quantity: Some("h1_rate".into()),
            ranks: None,
            mode: None,
            passed: ok,
            measured: diag.h1_rate.as_ref().map(|f| f.slope),
            expected: None,
            residual: None,
            tolerance: None,
            message: msg,
        });
        Some(diag)
    } else {
        None
    };

    let passed = rec.records.iter().all(|c| c.passed);
    let modes_out = modes
        .systems
        .iter()
        .zip(&modes.derivs)
        .map(|(s, dd)| ModeOut::new(dd, numerical_rank(s, tol.rank_tol)))
        .collect();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        function,
        shape: u.shape().to_vec(),
        domain: u.axes().iter().map(|a| [a.lower(), a.upper()]).collect(),
        norms,
        tolerances: tol.clone(),
        modes: modes_out,
        results,
        checks: rec.records,
        diagnostics,
        passed,
    };
    Ok((report, sigma_csv(&modes.derivs)))
}

fn evaluate_ranks(
    u: &GridFunction,
    modes: &ModeAnalysis,
    ranks: &[usize],
    quasi_opt: bool,
    eckart_young: bool,
    tol: &Tolerances,
) -> Result<ResultOut, RunError> {
    let mut rep = h1_sandwich_with(u, modes, ranks)?;
    let mut hooi_error = None;
    if quasi_opt {
        let h = hooi(u, &rep.ranks, tol.hooi_max_iters, tol.hooi_tol)?;
        rep.bounds.quasi_opt_reference = Some(u.ndim() as f64 * h.best_error.powi(2));
        hooi_error = Some(h.best_error);
    }
    let mut out = ResultOut::new(&rep);
    out.hooi_error = hooi_error;
    if eckart_young {
        let l2 = modes
            .systems
            .iter()
            .zip(&rep.ranks)
            .map(|(s, &r)| Ok(norm_l2(&u.sub(&truncate_svd(u, s, r)?)?).powi(2)))
            .collect::<Result<Vec<_>, sobosvd_core::Error>>()?;
        out.mode_l2_sq = Some(l2);
    }
    Ok(out)
}

fn per_rank_checks(
    rec: &mut Recorder,
    check: Check,
    res: &ResultOut,
    modes: &ModeAnalysis,
    d: usize,
    floor: f64,
    tol: &Tolerances,
) {
    let r = Some(res.ranks.as_slice());
    let m = &res.measured;
    let b = &res.bounds;
    match check {
        Check::EckartYoung => {
            let measured = res.mode_l2_sq.as_deref().unwrap_or(&[]);
            let l2_floor = RESIDUAL_FLOOR * modes.systems[0].sigmas().iter().map(|s| s * s).sum::<f64>();
            for (j, (&got, s)) in measured.iter().zip(&modes.systems).enumerate() {
                let tail: f64 = s.sigmas()[res.ranks[j]..].iter().map(|x| x * x).sum();
                let resid = rel_residual(tail, got, l2_floor);
                rec.push(
                    check,
                    Some("l2_tail"),
                    r,
                    Some(j),
                    got,
                    tail,
                    resid,
                    tol.eckart_young_rel,
                );
            }
        }
        Check::H1Identity => {
            if let (Some(urrep), Some(tail)) = (res.formula.urrep_value, res.formula.tail_error_value) {
                let got = m.projected_h1.powi(2);
                rec.push(
                    check,
                    Some("urrep"),
                    r,
                    None,
                    got,
                    urrep,
                    rel_residual(urrep, got, floor),
                    tol.identity_rel,
                );
                let got = m.h1.powi(2);
                rec.push(
                    check,
                    Some("tail"),
                    r,
                    None,
                    got,
                    tail,
                    rel_residual(tail, got, floor),
                    tol.identity_rel,
                );
            }
        }
        Check::EkIdentity => {
            for j in 0..d {
                let got = m.ek[j].powi(2);
                let want = res.formula.ek_tail[j];
                rec.push(
                    check,
                    Some("ek_tail"),
                    r,
                    Some(j),
                    got,
                    want,
                    rel_residual(want, got, floor),
                    tol.ek_rel,
                );
            }
        }
        Check::HosvdBound => {
            let got = m.l2.powi(2);
            rec.push(
                check,
                Some("l2_tail_sum"),
                r,
                None,
                got,
                b.hosvd_l2_tail_sum,
                got - b.hosvd_l2_tail_sum,
                tol.bound_abs,
            );
        }
        Check::QuasiOpt => {
            if let Some(q) = b.quasi_opt_reference {
                let got = m.l2.powi(2);
                rec.push(check, Some("d_times_best"), r, None, got, q, got - q, tol.bound_abs);
            }
        }
        Check::Sandwich => {
            let norm = m.projected_h1.powi(2);
            let err = m.h1.powi(2);
            let s = tol.sandwich_slack;
            rec.push(
                check,
                Some("norm_lower"),
                r,
                None,
                norm,
                b.norm_lower,
                b.norm_lower - norm,
                s,
            );
            rec.push(
                check,
                Some("norm_upper"),
                r,
                None,
                norm,
                b.norm_upper,
                norm - b.norm_upper,
                s,
            );
            rec.push(check, Some("h1_lower"), r, None, err, b.h1_lower, b.h1_lower - err, s);
            rec.push(check, Some("h1_upper"), r, None, err, b.h1_upper, err - b.h1_upper, s);
        }
        Check::DerivativeBound | Check::Diagnostics => {}
    }
}

/// Rate fits of the measured errors against `max_j r_j`, the convergence
/// flag of the `‖u_𝐫‖₁²` partial sums and per-mode Bernstein fits. The check
/// fails only when a rate fit is ill-posed (for example, all rank vectors
/// share the same `max_j r_j`).
fn diagnostics(results: &[ResultOut], modes: &ModeAnalysis, d: usize) -> (DiagnosticsOut, bool, Option<String>) {
    let mut notes = Vec::new();
    let pts: Vec<&ResultOut> = results
        .iter()
        .filter(|r| r.ranks.iter().max().copied().unwrap_or(0) > 0)
        .collect();
    let xs: Vec<f64> = pts
        .iter()
        .map(|r| *r.ranks.iter().max().expect("nonempty") as f64)
        .collect();
    let h1: Vec<f64> = pts.iter().map(|r| r.measured.h1).collect();
    let l2: Vec<f64> = pts.iter().map(|r| r.measured.l2).collect();
    // Errors at rounding level are dropped by the fit; when too few remain
    // the rate is reported as unresolved rather than failed.
    let mut failed = false;
    let mut fit = |ys: &[f64], what: &str, notes: &mut Vec<String>| match rate_fit(&xs, ys) {
        Ok(f) => Some(RateFitOut::from(&f)),
        Err(e @ sobosvd_core::Error::TooFewPoints { .. }) => {
            notes.push(format!("{what} rate unresolved: {e} above the fit floor"));
            None
        }
        Err(e) => {
            failed = true;
            notes.push(format!("{what} rate fit: {e}"));
            None
        }
    };
    let h1_rate = fit(&h1, "h1", &mut notes);
    let l2_rate = fit(&l2, "l2", &mut notes);

    let sums: Vec<f64> = results
        .iter()
        .map(|r| match (d, r.formula.urrep_value) {
            (2, Some(v)) => v,
            _ => r.measured.projected_h1.powi(2),
        })
        .collect();
    let convergence_flag = match h1_convergence_flag(&sums) {
        Ok(f) => Some(f.as_str().to_string()),
        Err(e) => {
            notes.push(format!("convergence flag: {e}"));
            None
        }
    };

    let mut bernstein = Vec::new();
    for (s, dd) in modes.systems.iter().zip(&modes.derivs) {
        let rank = numerical_rank(s, DEFAULT_RANK_TOL);
        let level = (usize::BITS - 1 - rank.max(1).leading_zeros()).min(MAX_BERNSTEIN_LEVEL);
        if level < 2 {
            notes.push(format!(
                "bernstein mode {}: numerical rank {rank} is too small for a fit",
                dd.mode + 1
            ));
            continue;
        }
        match bernstein_exponent(s, dd, level) {
            Ok(lf) => bernstein.push(LevelFitOut::new(dd.mode, &lf)),
            Err(e) => notes.push(format!("bernstein mode {}: {e}", dd.mode + 1)),
        }
    }

    let ok = !failed;
    let msg = (!ok).then(|| notes.join("; "));
    (
        DiagnosticsOut {
            rates_x: xs,
            h1_errors: h1,
            l2_errors: l2,
            h1_rate,
            l2_rate,
            h1_partial_sums: sums,
            convergence_flag,
            bernstein,
            notes,
        },
        ok,
        msg,
    )
}
