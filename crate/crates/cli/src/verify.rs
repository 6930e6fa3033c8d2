//! `sobosvd verify`: the identity, bound, oracle and edge-case checks for one
//! catalog case on one grid.

use std::fmt;

use sobosvd_core::cases::{get_case, AnalyticCase};
use sobosvd_core::discretization::GridFunction;
use sobosvd_core::sobolev::{derivative_data, norm_ek, norm_h1, norm_l2};
use sobosvd_core::svd::{hosvd, mode_svd, numerical_rank, DEFAULT_RANK_TOL};
use sobosvd_core::tensor::matricize;
use sobosvd_core::truncation::{
    analyze_modes, ek_identity_with, gamma_constant, h1_identity, h1_sandwich_with, hosvd_project, truncate_svd,
    ModeAnalysis,
};
use sobosvd_core::Result;

use crate::runner::RESIDUAL_FLOOR;

/// Weighted orthonormality of the singular vectors.
pub const ORTHO_TOL: f64 = 1e-12;
/// Relative weighted reconstruction error of the full expansion.
pub const RECON_TOL: f64 = 1e-12;
/// `|Σσ² - ‖u‖₀²| / ‖u‖₀²`.
pub const ENERGY_TOL: f64 = 1e-12;
pub const TRANSFER_TOL: f64 = 1e-10;
pub const BOUND_TOL: f64 = 1e-10;
/// Relative residual of both two-variable `H¹` expansions.
pub const IDENTITY_TOL: f64 = 1e-9;
pub const EK_TOL: f64 = 1e-10;
pub const ECKART_YOUNG_TOL: f64 = 1e-10;
pub const SANDWICH_SLACK: f64 = 1e-9;
/// Relative residual when truncating an input at its own rank.
pub const RECOVERY_TOL: f64 = 1e-10;
/// Oracle `σ_k` must agree to `ORACLE_C h² (1 + ‖ψ_k'‖₀²)` relative: the
/// quadrature error of a second-order rule grows with the square of the
/// mode's frequency.
pub const ORACLE_C: f64 = 1.0;
/// Largest `r` swept by the identity checks.
pub const MAX_SWEEP_RANK: usize = 16;

#[derive(Clone, Debug)]
pub struct VerifyLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for VerifyLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<28} {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub case: String,
    pub shape: Vec<usize>,
    pub lines: Vec<VerifyLine>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

/// Parses `129`, `129,65` or `129x65`. A single size applies to every mode.
pub fn parse_sizes(text: &str, dim: usize) -> std::result::Result<Vec<usize>, String> {
    let parts = text
        .split([',', 'x'])
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad size `{p}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match parts.len() {
        1 => Ok(vec![parts[0]; dim]),
        k if k == dim => Ok(parts),
        k => Err(format!("{k} sizes given for a {dim}-dimensional case")),
    }
}

struct Lines(Vec<VerifyLine>);

impl Lines {
    /// Records `value ≤ tol`.
    fn le(&mut self, name: &str, value: f64, tol: f64) {
        self.0.push(VerifyLine {
            name: name.to_string(),
            passed: value <= tol,
            detail: format!("{value:.3e} <= {tol:.1e}"),
        });
    }

    fn flag(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(VerifyLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor).max(f64::MIN_POSITIVE)
}

pub fn verify(name: &str, params: &[f64], n: &[usize]) -> Result<VerifyOutcome> {
    let case = get_case(name, params)?;
    let u = case.sample(n)?;
    let modes = analyze_modes(&u)?;
    let mut out = Lines(Vec::new());

    decomposition_checks(&mut out, &u, &modes)?;
    if u.ndim() == 2 {
        h1_identity_check(&mut out, &u, &modes)?;
    }
    mode_truncation_checks(&mut out, &u, &modes)?;
    hosvd_checks(&mut out, &u, &modes)?;
    gamma_check(&mut out, &modes)?;
    oracle_check(&mut out, &case, &u, &modes)?;
    recovery_checks(&mut out, &case, &u)?;

    Ok(VerifyOutcome {
        case: case.name().to_string(),
        shape: n.to_vec(),
        lines: out.0,
    })
}

fn decomposition_checks(out: &mut Lines, u: &GridFunction, modes: &ModeAnalysis) -> Result<()> {
    let energy = norm_l2(u).powi(2);
    let (mut ortho, mut recon, mut sums, mut transfer, mut bound) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (j, (s, dd)) in modes.systems.iter().zip(&modes.derivs).enumerate() {
        ortho = ortho.max(s.orthonormality_defect());
        let (m, _) = matricize(u.values(), &[j])?;
        recon = recon.max(s.reconstruction_defect(&m));
        let total: f64 = s.sigmas().iter().map(|x| x * x).sum();
        sums = sums.max(rel(total, energy, f64::MIN_POSITIVE));
        transfer = transfer.max(dd.max_transfer_error());
        bound = bound.max(dd.max_bound_excess());
    }
    out.le("orthonormality", ortho, ORTHO_TOL);
    out.le("reconstruction", recon, RECON_TOL);
    out.le("sigma energy", sums, ENERGY_TOL);
    out.le("derivative transfer", transfer, TRANSFER_TOL);
    out.le("derivative bound", bound, BOUND_TOL);
    Ok(())
}

fn sweep_limit(s: &sobosvd_core::svd::SingularSystem) -> usize {
    numerical_rank(s, DEFAULT_RANK_TOL).min(MAX_SWEEP_RANK)
}

/// Both two-variable expansions against `‖u_r‖₁²` and `‖u - u_r‖₁²`
/// measured on the truncations.
fn h1_identity_check(out: &mut Lines, u: &GridFunction, modes: &ModeAnalysis) -> Result<()> {
    let sys = &modes.systems[0];
    let floor = RESIDUAL_FLOOR * norm_h1(u).powi(2);
    let mut worst = 0.0f64;
    for r in 0..=sweep_limit(sys) {
        let id = h1_identity(sys, &modes.derivs[0], &modes.derivs[1], r)?;
        let ur = truncate_svd(u, sys, r)?;
        worst = worst.max(rel(id.urrep_value, norm_h1(&ur).powi(2), floor));
        worst = worst.max(rel(id.tail_value, norm_h1(&u.sub(&ur)?).powi(2), floor));
    }
    out.le("h1 identity", worst, IDENTITY_TOL);
    Ok(())
}

/// Per-mode `e_j` expansions and the `L²` tail of each one-mode truncation.
fn mode_truncation_checks(out: &mut Lines, u: &GridFunction, modes: &ModeAnalysis) -> Result<()> {
    let h1_floor = RESIDUAL_FLOOR * norm_h1(u).powi(2);
    let l2_floor = RESIDUAL_FLOOR * norm_l2(u).powi(2);
    let (mut ek, mut ey) = (0.0f64, 0.0f64);
    for (j, (s, dd)) in modes.systems.iter().zip(&modes.derivs).enumerate() {
        for r in 0..=sweep_limit(s) {
            let p = truncate_svd(u, s, r)?;
            let rest = u.sub(&p)?;
            let id = ek_identity_with(dd, r)?;
            ek = ek.max(rel(id.norm_value, norm_ek(&p, j)?.powi(2), h1_floor));
            ek = ek.max(rel(id.tail_value, norm_ek(&rest, j)?.powi(2), h1_floor));
            let tail: f64 = s.sigmas()[r..].iter().map(|x| x * x).sum();
            ey = ey.max(rel(tail, norm_l2(&rest).powi(2), l2_floor));
        }
    }
    out.le("ek identity", ek, EK_TOL);
    out.le("eckart-young tail", ey, ECKART_YOUNG_TOL);
    Ok(())
}

fn hosvd_checks(out: &mut Lines, u: &GridFunction, modes: &ModeAnalysis) -> Result<()> {
    let d = u.ndim();
    let mut excess = f64::NEG_INFINITY;
    for code in 0..3usize.pow(d as u32) {
        let ranks: Vec<usize> = (0..d)
            .map(|j| (1usize << ((code / 3usize.pow(j as u32)) % 3)).min(modes.systems[j].len()))
            .collect();
        let rep = h1_sandwich_with(u, modes, &ranks)?;
        let b = rep.l2_bracket();
        excess = excess.max(b.value - b.upper);
    }
    out.le("hosvd l2 bound", excess, BOUND_TOL);

    let mut worst = f64::NEG_INFINITY;
    for r in 1..=3 {
        let ranks: Vec<usize> = modes.systems.iter().map(|s| r.min(s.len())).collect();
        let rep = h1_sandwich_with(u, modes, &ranks)?;
        for b in [rep.norm_bracket(), rep.residual_bracket()] {
            let (lo, hi) = b.gaps();
            worst = worst.max(-lo).max(-hi);
        }
    }
    out.le("h1 sandwich", worst, SANDWICH_SLACK);
    Ok(())
}

fn gamma_check(out: &mut Lines, modes: &ModeAnalysis) -> Result<()> {
    let mut drop = 0.0f64;
    for dd in &modes.derivs {
        let top = dd.retained().min(MAX_SWEEP_RANK);
        let mut prev = 0.0;
        for r in 1..=top {
            let g = gamma_constant(dd, r)?;
            drop = drop.max((prev - g) / prev.max(1.0));
            prev = g;
        }
    }
    out.le("gamma monotone", drop, 1e-12);
    Ok(())
}

/// Leading singular values against the analytic catalog spectrum.
fn oracle_check(out: &mut Lines, case: &AnalyticCase, u: &GridFunction, modes: &ModeAnalysis) -> Result<()> {
    let h = u.axes().iter().map(|a| a.spacing()).fold(0.0, f64::max);
    // worst ratio of the error to its allowance
    let mut worst = 0.0f64;
    for (j, s) in modes.systems.iter().enumerate() {
        let want = case.spectrum(j, numerical_rank(s, DEFAULT_RANK_TOL).min(10))?;
        for (k, (sig, dpsi)) in want.iter().enumerate() {
            let allowed = ORACLE_C * h * h * (1.0 + dpsi * dpsi);
            worst = worst.max(rel(s.sigmas()[k], *sig, f64::MIN_POSITIVE) / allowed);
        }
    }
    out.le("oracle sigmas (err/allowed)", worst, 1.0);
    Ok(())
}

fn recovery_checks(out: &mut Lines, case: &AnalyticCase, u: &GridFunction) -> Result<()> {
    let d = u.ndim();
    let norm = norm_l2(u);

    // a Tucker-rank-2 input is reproduced by its own rank-2 truncation
    let r2: Vec<usize> = u.shape().iter().map(|&n| n.min(2)).collect();
    let v = hosvd_project(u, &r2)?.projected;
    let again = hosvd_project(&v, &r2)?.projected;
    let mut worst = norm_l2(&v.sub(&again)?) / norm_l2(&v).max(f64::MIN_POSITIVE);
    if let Some(r) = case.exact_rank() {
        let ur = hosvd_project(u, &vec![r; d])?.projected;
        worst = worst.max(norm_l2(&u.sub(&ur)?) / norm);
    }
    out.le("rank-r recovery", worst, RECOVERY_TOL);

    let zero_rank = hosvd_project(u, &vec![0; d])?.projected;
    let err0 = norm_l2(&u.sub(&zero_rank)?);
    out.le("r=0 error equals norm", rel(err0, norm, f64::MIN_POSITIVE), 1e-14);

    let z = GridFunction::zeros(u.axes().to_vec());
    let mut sizes = Vec::with_capacity(d);
    for j in 0..d {
        let s = mode_svd(&z, j)?;
        sizes.push(numerical_rank(&s, DEFAULT_RANK_TOL) + derivative_data(&z, &s)?.retained());
    }
    let h = hosvd(&z, DEFAULT_RANK_TOL)?;
    let empty = sizes.iter().all(|&k| k == 0) && h.ranks.iter().all(|&r| r == 0);
    out.flag(
        "zero function spectra",
        empty,
        format!("numerical ranks + retained {sizes:?}, hosvd ranks {:?}", h.ranks),
    );
    Ok(())
}
