//! Truncated SVD/HOSVD projections and the evaluation of their `H¹` error
//! identities and bounds.
//!
//! Every projector is built from weighted-orthonormal singular vectors, so
//! `P^j_r = Ψ_r Ψ_rᵀ W_j` is the `L²`-orthogonal projector onto the span of
//! the first `r` mode-`j` vectors.
//!
//! Because the right factors of a matricization are weighted-orthonormal,
//! the `e_j` norm of `Σ_{k∈K} σ_k ψ_k ⊗ φ_k` is exactly
//! `Σ_{k∈K} σ_k² (1 + ‖Dψ_k‖₀²)` in the discrete model, which is what the
//! identities below evaluate.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::discretization::GridFunction;
use crate::error::{Error, Result};
use crate::sobolev::{derivative_data, norm_ek, norm_h1_sq, norm_l2, DerivativeData};
use crate::svd::{analysis_matrix, mode_svd, to_tensor, SingularSystem};
use crate::tensor::{matricize, mode_product, DenseTensor};

/// `u_r = Σ_{k<r} σ_k ψ_k ⊗ φ_k`. For a one-mode system this is `P^j_r u`.
pub fn truncate_svd(u: &GridFunction, sys: &SingularSystem, r: usize) -> Result<GridFunction> {
    if r > sys.len() {
        return Err(Error::RankExceeds {
            mode: sys.mode().unwrap_or(0),
            rank: r,
            available: sys.len(),
        });
    }
    if r == 0 {
        return Ok(GridFunction::zeros(u.axes().to_vec()));
    }
    let t = to_tensor(sys, &sys.reconstruct(r))?;
    u.with_values(t)
}

/// Values of the `H¹` expansions of a truncated two-variable SVD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H1Identity {
    /// `Σ_{k<r} σ_k² (1 + ‖ψ_k'‖₀² + ‖φ_k'‖₀²)`, equal to `‖u_r‖₁²`.
    pub urrep_value: f64,
    /// The same sum over `k ≥ r`, equal to `‖u - u_r‖₁²`.
    pub tail_value: f64,
}

/// Evaluates both expansions. `left` belongs to `sys`, `right` to
/// `sys.transpose()`.
pub fn h1_identity(
    sys: &SingularSystem,
    left: &DerivativeData,
    right: &DerivativeData,
    r: usize,
) -> Result<H1Identity> {
    let layout = sys.layout().ok_or(Error::Dimension {
        expected: "2".into(),
        actual: 0,
    })?;
    if layout.tensor_shape().len() != 2 {
        return Err(Error::Dimension {
            expected: "2".into(),
            actual: layout.tensor_shape().len(),
        });
    }
    let k = sys.len();
    if left.dpsi_norms.len() != k || right.dpsi_norms.len() != k || left.mode == right.mode {
        return Err(Error::InsufficientRank {
            needed: k,
            available: left.dpsi_norms.len().min(right.dpsi_norms.len()),
        });
    }
    if r > k {
        return Err(Error::RankExceeds {
            mode: left.mode,
            rank: r,
            available: k,
        });
    }
    let term = |i: usize| {
        let s = sys.sigmas()[i];
        s * s * (1.0 + left.dpsi_norms[i].powi(2) + right.dpsi_norms[i].powi(2))
    };
    Ok(H1Identity {
        urrep_value: (0..r).map(term).sum(),
        tail_value: (r..k).map(term).sum(),
    })
}

/// `e_j` expansions of a one-mode truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EkIdentity {
    /// `Σ_{k<r} σ_k² (1 + ‖Dψ_k‖₀²) = ‖P^j_r u‖²_{e_j}`.
    pub norm_value: f64,
    /// `Σ_{k≥r} σ_k² (1 + ‖Dψ_k‖₀²) = ‖u - P^j_r u‖²_{e_j}`.
    pub tail_value: f64,
}

pub fn ek_identity_with(dd: &DerivativeData, r: usize) -> Result<EkIdentity> {
    let k = dd.sigmas.len();
    if r > k {
        return Err(Error::RankExceeds {
            mode: dd.mode,
            rank: r,
            available: k,
        });
    }
    let term = |i: usize| dd.sigmas[i].powi(2) * (1.0 + dd.dpsi_norms[i].powi(2));
    Ok(EkIdentity {
        norm_value: (0..r).map(term).sum(),
        tail_value: (r..k).map(term).sum(),
    })
}

pub fn ek_identity(u: &GridFunction, mode: usize, r: usize) -> Result<EkIdentity> {
    let sys = mode_svd(u, mode)?;
    ek_identity_with(&derivative_data(u, &sys)?, r)
}

/// Truncated HOSVD `u_𝐫` with its Tucker factors and core.
#[derive(Clone, Debug)]
pub struct TuckerApprox {
    /// Requested ranks, clamped to the number of available mode vectors.
    pub ranks: Vec<usize>,
    /// Per-mode weighted-orthonormal factor matrices (`n_j × r_j`).
    pub factors: Vec<DMatrix<f64>>,
    pub core: DenseTensor,
    pub projected: GridFunction,
}

fn check_ranks(u: &GridFunction, ranks: &[usize]) -> Result<()> {
    if ranks.len() != u.ndim() {
        return Err(Error::InvalidRank(format!(
            "{} ranks given for a {}-way tensor",
            ranks.len(),
            u.ndim()
        )));
    }
    for (j, (&r, &n)) in ranks.iter().zip(u.shape()).enumerate() {
        if r > n {
            return Err(Error::RankExceeds {
                mode: j,
                rank: r,
                available: n,
            });
        }
    }
    Ok(())
}

/// Contracts with the given factors: `core ×_j F_j`.
fn expand(core: &DenseTensor, factors: &[DMatrix<f64>]) -> Result<DenseTensor> {
    let mut t = core.clone();
    for (j, f) in factors.iter().enumerate() {
        t = mode_product(&t, f, j)?;
    }
    Ok(t)
}

pub fn hosvd_project_with(u: &GridFunction, systems: &[SingularSystem], ranks: &[usize]) -> Result<TuckerApprox> {
    check_ranks(u, ranks)?;
    if systems.len() != u.ndim() {
        return Err(Error::Dimension {
            expected: format!("{} mode systems", u.ndim()),
            actual: systems.len(),
        });
    }
    let ranks: Vec<usize> = ranks.iter().zip(systems).map(|(&r, s)| r.min(s.len())).collect();
    let factors: Vec<DMatrix<f64>> = systems
        .iter()
        .zip(&ranks)
        .map(|(s, &r)| s.left().columns(0, r).into_owned())
        .collect();
    if ranks.contains(&0) {
        return Ok(TuckerApprox {
            core: DenseTensor::zeros(&ranks),
            ranks,
            factors,
            projected: GridFunction::zeros(u.axes().to_vec()),
        });
    }
    let mut core = u.values().clone();
    for (j, s) in systems.iter().enumerate() {
        core = mode_product(&core, &analysis_matrix(s, ranks[j]), j)?;
    }
    let projected = u.with_values(expand(&core, &factors)?)?;
    Ok(TuckerApprox {
        ranks,
        factors,
        core,
        projected,
    })
}

/// `𝒫_𝐫 u = (⊗_j P^j_{r_j}) u`.
pub fn hosvd_project(u: &GridFunction, ranks: &[usize]) -> Result<TuckerApprox> {
    check_ranks(u, ranks)?;
    let systems = (0..u.ndim())
        .into_par_iter()
        .map(|j| mode_svd(u, j))
        .collect::<Result<Vec<_>>>()?;
    hosvd_project_with(u, &systems, ranks)
}

/// `Σ_j Σ_{k≥r_j} (σ_k^j)²`, the bound on `‖u - u_𝐫‖₀²`.
pub fn hosvd_tail_sum(systems: &[SingularSystem], ranks: &[usize]) -> f64 {
    systems
        .iter()
        .zip(ranks)
        .map(|(s, &r)| s.sigmas().iter().skip(r).map(|x| x * x).sum::<f64>())
        .sum()
}

/// Result of a HOOI run.
#[derive(Clone, Debug)]
pub struct HooiResult {
    /// The best approximation encountered.
    pub approx: TuckerApprox,
    /// `L²` errors: the HOSVD start, then one entry per sweep.
    pub history: Vec<f64>,
    pub best_error: f64,
}

/// Higher-order orthogonal iteration started from the truncated HOSVD.
///
/// Runs on `√W`-scaled samples, where the weighted `L²` geometry becomes
/// Euclidean, and maps the factors back at the end.
pub fn hooi(u: &GridFunction, ranks: &[usize], max_iters: usize, tol: f64) -> Result<HooiResult> {
    let start = hosvd_project(u, ranks)?;
    let ranks = start.ranks.clone();
    let d = u.ndim();
    let all: Vec<usize> = (0..d).collect();
    let sw: Vec<f64> = u.kron_weights(&all).iter().map(|w| w.sqrt()).collect();
    let mode_sw: Vec<Vec<f64>> = u
        .axes()
        .iter()
        .map(|a| a.weights().iter().map(|w| w.sqrt()).collect())
        .collect();

    let scaled_data: Vec<f64> = u.values().data().iter().zip(&sw).map(|(v, s)| v * s).collect();
    let ut = DenseTensor::from_vec(u.shape().to_vec(), scaled_data)?;

    let start_err = weighted_error(u, &start.projected);
    if ranks.contains(&0) {
        return Ok(HooiResult {
            approx: start,
            history: vec![start_err],
            best_error: start_err,
        });
    }

    // orthonormal (Euclidean) factors of the scaled problem
    let mut q: Vec<DMatrix<f64>> = start
        .factors
        .iter()
        .zip(&mode_sw)
        .map(|(f, s)| {
            let mut m = f.clone();
            for (i, mut row) in m.row_iter_mut().enumerate() {
                row *= s[i];
            }
            m
        })
        .collect();

    let mut history = vec![start_err];
    let mut best = (start_err, start);
    for _ in 0..max_iters {
        for j in 0..d {
            let mut y = ut.clone();
            for (i, qi) in q.iter().enumerate() {
                if i != j {
                    y = mode_product(&y, &qi.transpose(), i)?;
                }
            }
            let (yj, _) = matricize(&y, &[j])?;
            q[j] = leading_eigvecs(&(&yj * yj.transpose()), ranks[j]);
        }
        let mut core = ut.clone();
        for (j, qj) in q.iter().enumerate() {
            core = mode_product(&core, &qj.transpose(), j)?;
        }
        let factors: Vec<DMatrix<f64>> = q
            .iter()
            .zip(&mode_sw)
            .map(|(qj, s)| {
                let mut m = qj.clone();
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row /= s[i];
                }
                m
            })
            .collect();
        let projected = u.with_values(expand(&core, &factors)?)?;
        let err = weighted_error(u, &projected);
        let prev = *history.last().expect("nonempty");
        history.push(err);
        if err < best.0 {
            best = (
                err,
                TuckerApprox {
                    ranks: ranks.clone(),
                    factors,
                    core,
                    projected,
                },
            );
        }
        if (prev - err).abs() < tol {
            break;
        }
    }
    Ok(HooiResult {
        approx: best.1,
        history,
        best_error: best.0,
    })
}

fn weighted_error(u: &GridFunction, v: &GridFunction) -> f64 {
    norm_l2(&u.sub(v).expect("same axes"))
}

/// Eigenvectors of the `r` largest eigenvalues of a symmetric matrix.
fn leading_eigvecs(g: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_columns(
        &order[..r]
            .iter()
            .map(|&k| eig.eigenvectors.column(k))
            .collect::<Vec<_>>(),
    )
}

/// `d · ‖u - u_HOOI‖₀²`, an upper bound on `d · inf_{v ∈ 𝒯_𝐫} ‖u - v‖₀²`.
pub fn quasi_opt_reference(u: &GridFunction, ranks: &[usize], max_iters: usize, tol: f64) -> Result<f64> {
    let h = hooi(u, ranks, max_iters, tol)?;
    Ok(u.ndim() as f64 * h.best_error.powi(2))
}

/// `Γ_j(r)`: the largest ratio `‖v‖₁/‖v‖₀` over `span{ψ_1..ψ_r}`, computed as
/// the square root of the top eigenvalue of `I + (⟨Dψ_k, Dψ_l⟩₀)_{k,l<r}`.
pub fn gamma_constant(dd: &DerivativeData, r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidRank("gamma needs r >= 1".into()));
    }
    if r > dd.dpsi.ncols() {
        return Err(Error::InsufficientRank {
            needed: r,
            available: dd.dpsi.ncols(),
        });
    }
    let b = DMatrix::from_fn(r, r, |k, l| dd.dpsi_inner(k, l) + if k == l { 1.0 } else { 0.0 });
    let top = SymmetricEigen::new(b)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(top.max(1.0).sqrt())
}

/// Mode systems and derivative data for every mode of `u`.
#[derive(Clone, Debug)]
pub struct ModeAnalysis {
    pub systems: Vec<SingularSystem>,
    pub derivs: Vec<DerivativeData>,
}

pub fn analyze_modes(u: &GridFunction) -> Result<ModeAnalysis> {
    let pairs = (0..u.ndim())
        .into_par_iter()
        .map(|j| {
            let sys = mode_svd(u, j)?;
            let dd = derivative_data(u, &sys)?;
            Ok((sys, dd))
        })
        .collect::<Result<Vec<_>>>()?;
    let (systems, derivs) = pairs.into_iter().unzip();
    Ok(ModeAnalysis { systems, derivs })
}

/// `lower ≤ value ≤ upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.value + slack && self.value <= self.upper + slack
    }

    /// `(value - lower, upper - value)`.
    pub fn gaps(&self) -> (f64, f64) {
        (self.value - self.lower, self.upper - self.value)
    }
}

#[derive(Clone, Debug)]
pub struct MeasuredNorms {
    /// `‖u - u_𝐫‖₀`.
    pub l2: f64,
    /// `‖u - u_𝐫‖₁`.
    pub h1: f64,
    /// `‖u - P^j_{r_j} u‖_{e_j}` per mode.
    pub ek: Vec<f64>,
    /// `‖u_𝐫‖₁`.
    pub projected_h1: f64,
}

#[derive(Clone, Debug)]
pub struct FormulaValues {
    /// Two-variable expansions of `‖u_𝐫‖₁²` and `‖u - u_𝐫‖₁²`; `None` for
    /// `d ≠ 2`.
    pub urrep_value: Option<f64>,
    pub tail_error_value: Option<f64>,
    /// `Σ_{k≥r_j} (σ_k^j)² (1 + ‖Dψ_k^j‖₀²)` per mode.
    pub ek_tail: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BoundValues {
    pub hosvd_l2_tail_sum: f64,
    pub quasi_opt_reference: Option<f64>,
    /// `(1/d) Σ_j Σ_{k<r_j} (σ_k^j)²`.
    pub norm_lower: f64,
    /// `Σ_j Σ_{k<r_j} (σ_k^j)² (1 + ‖Dψ_k^j‖₀²)`.
    pub norm_upper: f64,
    /// `max_j Σ_{k≥r_j} (σ_k^j)² (1 + ‖Dψ_k^j‖₀²)`.
    pub h1_lower: f64,
    /// `Σ_j Σ_{k≥r_j} (σ_k^j)² (2 + ‖Dψ_k^j‖₀²)`.
    pub h1_upper: f64,
    /// `Σ_j Σ_{k<r_j} (σ_k^j)² (1 + ‖Dψ_k^j‖₀² + Σ_{i≠j} Γ_i(r_i)²)`; `None`
    /// when some rank is zero.
    pub limit_partial_sum: Option<f64>,
}

/// Measured residual norms next to the formula values and bounds.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub ranks: Vec<usize>,
    pub measured: MeasuredNorms,
    pub formula: FormulaValues,
    pub bounds: BoundValues,
    /// `Γ_j(r_j)` per mode; `None` where `r_j = 0`.
    pub gammas: Vec<Option<f64>>,
}

impl ErrorReport {
    /// `‖u_𝐫‖₁²` between its lower and upper forms.
    pub fn norm_bracket(&self) -> Bracket {
        Bracket {
            lower: self.bounds.norm_lower,
            value: self.measured.projected_h1.powi(2),
            upper: self.bounds.norm_upper,
        }
    }

    /// `‖u - u_𝐫‖₁²` between its lower and upper forms.
    pub fn residual_bracket(&self) -> Bracket {
        Bracket {
            lower: self.bounds.h1_lower,
            value: self.measured.h1.powi(2),
            upper: self.bounds.h1_upper,
        }
    }

    /// `0 ≤ ‖u - u_𝐫‖₀² ≤ Σ_j tails`.
    pub fn l2_bracket(&self) -> Bracket {
        Bracket {
            lower: 0.0,
            value: self.measured.l2.powi(2),
            upper: self.bounds.hosvd_l2_tail_sum,
        }
    }
}

pub fn h1_sandwich(u: &GridFunction, ranks: &[usize]) -> Result<ErrorReport> {
    check_ranks(u, ranks)?;
    h1_sandwich_with(u, &analyze_modes(u)?, ranks)
}

pub fn h1_sandwich_with(u: &GridFunction, modes: &ModeAnalysis, ranks: &[usize]) -> Result<ErrorReport> {
    let approx = hosvd_project_with(u, &modes.systems, ranks)?;
    let ranks = approx.ranks.clone();
    let d = u.ndim();
    let residual = u.sub(&approx.projected)?;

    let ek = (0..d)
        .into_par_iter()
        .map(|j| {
            let pj = truncate_svd(u, &modes.systems[j], ranks[j])?;
            norm_ek(&u.sub(&pj)?, j)
        })
        .collect::<Result<Vec<_>>>()?;
    let measured = MeasuredNorms {
        l2: norm_l2(&residual),
        h1: norm_h1_sq(&residual).sqrt(),
        ek,
        projected_h1: norm_h1_sq(&approx.projected).sqrt(),
    };

    let eks = modes
        .derivs
        .iter()
        .zip(&ranks)
        .map(|(dd, &r)| ek_identity_with(dd, r))
        .collect::<Result<Vec<_>>>()?;
    let (urrep_value, tail_error_value) = if d == 2 {
        let m = ranks[0].min(ranks[1]);
        let id = h1_identity(&modes.systems[0], &modes.derivs[0], &modes.derivs[1], m)?;
        (Some(id.urrep_value), Some(id.tail_value))
    } else {
        (None, None)
    };

    let gammas: Vec<Option<f64>> = modes
        .derivs
        .iter()
        .zip(&ranks)
        .map(|(dd, &r)| {
            if r == 0 {
                Ok(None)
            } else {
                gamma_constant(dd, r).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let head_l2: Vec<f64> = modes
        .systems
        .iter()
        .zip(&ranks)
        .map(|(s, &r)| s.sigmas()[..r].iter().map(|x| x * x).sum())
        .collect();
    let tails_l2: Vec<f64> = modes
        .systems
        .iter()
        .zip(&ranks)
        .map(|(s, &r)| s.sigmas()[r..].iter().map(|x| x * x).sum())
        .collect();

    let limit_partial_sum = if gammas.iter().all(Option::is_some) {
        let g2: Vec<f64> = gammas.iter().map(|g| g.expect("checked").powi(2)).collect();
        let total_g2: f64 = g2.iter().sum();
        Some(
            modes
                .derivs
                .iter()
                .zip(&ranks)
                .enumerate()
                .map(|(j, (dd, &r))| {
                    (0..r)
                        .map(|k| dd.sigmas[k].powi(2) * (1.0 + dd.dpsi_norms[k].powi(2) + total_g2 - g2[j]))
                        .sum::<f64>()
                })
                .sum(),
        )
    } else {
        None
    };

    let bounds = BoundValues {
        hosvd_l2_tail_sum: tails_l2.iter().sum(),
        quasi_opt_reference: None,
        norm_lower: head_l2.iter().sum::<f64>() / d as f64,
        norm_upper: eks.iter().map(|e| e.norm_value).sum(),
        h1_lower: eks.iter().map(|e| e.tail_value).fold(0.0, f64::max),
        h1_upper: eks.iter().zip(&tails_l2).map(|(e, t)| e.tail_value + t).sum(),
        limit_partial_sum,
    };
    Ok(ErrorReport {
        ranks,
        measured,
        formula: FormulaValues {
            urrep_value,
            tail_error_value,
            ek_tail: eks.iter().map(|e| e.tail_value).collect(),
        },
        bounds,
        gammas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{make_axis, sample};
    use crate::sobolev::norm_h1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn axes(ns: &[usize]) -> Vec<Arc<crate::discretization::Axis>> {
        ns.iter().map(|&n| Arc::new(make_axis(n, 0.0, 1.0).unwrap())).collect()
    }

    fn grid(ns: &[usize], f: impl Fn(&[f64]) -> f64) -> GridFunction {
        sample(f, &axes(ns)).unwrap()
    }

    fn sinsum(x: &[f64]) -> f64 {
        [1.0, 0.5, 0.25]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64;
                c * (k * PI * x[0]).sin() * (k * PI * x[1]).sin()
            })
            .sum()
    }

    fn random(ns: &[usize], seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = ns.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridFunction::new(axes(ns), DenseTensor::from_vec(ns.to_vec(), data).unwrap()).unwrap()
    }

    #[test]
    fn truncation_edge_cases() {
        let u = grid(&[65, 65], |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let sys = mode_svd(&u, 0).unwrap();
        let u1 = truncate_svd(&u, &sys, 1).unwrap();
        assert!(norm_l2(&u.sub(&u1).unwrap()) <= 1e-10);
        let u0 = truncate_svd(&u, &sys, 0).unwrap();
        assert_eq!(norm_l2(&u0), 0.0);
        assert!(matches!(truncate_svd(&u, &sys, 66), Err(Error::RankExceeds { .. })));
    }

    #[test]
    fn sinsum_tail() {
        let u = grid(&[257, 257], sinsum);
        let sys = mode_svd(&u, 0).unwrap();
        let r = norm_l2(&u.sub(&truncate_svd(&u, &sys, 1).unwrap()).unwrap());
        assert!((r - (0.25f64.powi(2) + 0.125f64.powi(2)).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn h1_identity_matches_measurement() {
        let u = grid(&[129, 129], sinsum);
        let sys = mode_svd(&u, 0).unwrap();
        let left = derivative_data(&u, &sys).unwrap();
        let right = derivative_data(&u, &sys.transpose()).unwrap();
        let id = h1_identity(&sys, &left, &right, 1).unwrap();
        let u1 = truncate_svd(&u, &sys, 1).unwrap();
        let rest = u.sub(&u1).unwrap();
        assert!((id.urrep_value - norm_h1(&u1).powi(2)).abs() <= 1e-10 * id.urrep_value);
        assert!((id.tail_value - norm_h1(&rest).powi(2)).abs() <= 1e-10 * id.tail_value);
        let analytic: f64 = [(0.25, 2.0), (0.125, 3.0)]
            .iter()
            .map(|(s, k)| s * s * (1.0 + 2.0 * k * k * PI * PI))
            .sum();
        assert!((id.tail_value - analytic).abs() < 1e-2 * analytic);
        let full = h1_identity(&sys, &left, &right, sys.len()).unwrap();
        assert!(full.tail_value <= 1e-10);
    }

    #[test]
    fn ek_identity_pythagoras() {
        let u = grid(&[65, 33], |x| (x[0] * x[1]).exp() + (3.0 * x[0]).sin());
        for r in 0..4 {
            let e = ek_identity(&u, 0, r).unwrap();
            let total = norm_ek(&u, 0).unwrap().powi(2);
            assert!((e.norm_value + e.tail_value - total).abs() <= 1e-10 * total);
        }
        let e = ek_identity(&u, 0, 0).unwrap();
        assert_eq!(e.norm_value, 0.0);
    }

    #[test]
    fn hosvd_full_rank_is_identity() {
        let u = random(&[5, 6, 4], 3);
        let t = hosvd_project(&u, &[5, 6, 4]).unwrap();
        assert!(norm_l2(&u.sub(&t.projected).unwrap()) < 1e-12);
        assert!(matches!(
            hosvd_project(&u, &[6, 1, 1]),
            Err(Error::RankExceeds { mode: 0, .. })
        ));
        assert!(matches!(hosvd_project(&u, &[1, 1]), Err(Error::InvalidRank(_))));
    }

    #[test]
    fn hosvd_projection_is_idempotent() {
        let u = random(&[6, 7, 5], 11);
        let t = hosvd_project(&u, &[3, 2, 4]).unwrap();
        let t2 = hosvd_project(&t.projected, &[3, 2, 4]).unwrap();
        let scale = norm_l2(&t.projected);
        assert!(norm_l2(&t.projected.sub(&t2.projected).unwrap()) <= 1e-12 * scale);
    }

    #[test]
    fn hosvd_error_below_tail_sum() {
        let u = random(&[8, 8, 8], 7);
        let modes = analyze_modes(&u).unwrap();
        let ranks = [4, 4, 4];
        let t = hosvd_project_with(&u, &modes.systems, &ranks).unwrap();
        let err2 = norm_l2(&u.sub(&t.projected).unwrap()).powi(2);
        assert!(err2 <= hosvd_tail_sum(&modes.systems, &ranks) + 1e-10);
    }

    #[test]
    fn hooi_is_monotone_and_quasi_optimal() {
        let u = random(&[10, 9, 8], 5);
        let ranks = [2, 2, 2];
        let h = hooi(&u, &ranks, 50, 1e-13).unwrap();
        for w in h.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let hosvd_err = h.history[0];
        assert!(hosvd_err.powi(2) <= 3.0 * h.best_error.powi(2) + 1e-10);
        assert!(h.best_error <= hosvd_err);
    }

    #[test]
    fn hooi_matches_svd_in_two_variables() {
        let u = grid(&[65, 65], sinsum);
        let h = hooi(&u, &[2, 2], 20, 1e-14).unwrap();
        assert!((h.best_error - h.history[0]).abs() < 1e-10);
        assert!((h.best_error - 0.125).abs() < 1e-3);
    }

    #[test]
    fn gamma_for_sine_span() {
        let u = grid(&[1025, 17], sinsum);
        let sys = mode_svd(&u, 0).unwrap();
        let dd = derivative_data(&u, &sys).unwrap();
        let g2 = gamma_constant(&dd, 2).unwrap().powi(2);
        assert!((g2 - (1.0 + 4.0 * PI * PI)).abs() < 1e-2);
        assert!(gamma_constant(&dd, 0).is_err());
        let mut prev = 0.0;
        for r in 1..=sys.len() {
            let g = gamma_constant(&dd, r).unwrap();
            assert!(g >= prev * (1.0 - 1e-12));
            prev = g;
        }
    }

    #[test]
    fn gamma_of_constant_span_is_one() {
        let u = grid(&[33, 9], |x| (PI * x[1]).sin());
        let sys = mode_svd(&u, 0).unwrap();
        let dd = derivative_data(&u, &sys).unwrap();
        assert!((gamma_constant(&dd, 1).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sandwich_on_separable_sum() {
        let u = grid(&[33, 33, 33], |x| {
            let s = |k: f64| (k * PI * x[0]).sin() * (k * PI * x[1]).sin() * (k * PI * x[2]).sin();
            s(1.0) + 0.5 * s(2.0)
        });
        let rep = h1_sandwich(&u, &[1, 1, 1]).unwrap();
        assert!(rep.norm_bracket().holds(1e-9), "{:?}", rep.norm_bracket());
        assert!(rep.residual_bracket().holds(1e-9), "{:?}", rep.residual_bracket());
        assert!(rep.l2_bracket().holds(1e-10));
        assert!(rep.formula.urrep_value.is_none());
        assert!(rep.bounds.limit_partial_sum.unwrap() >= rep.bounds.norm_upper);
        for (m, f) in rep.measured.ek.iter().zip(&rep.formula.ek_tail) {
            assert!((m * m - f).abs() <= 1e-10 * f.max(1e-14));
        }
    }

    #[test]
    fn sandwich_two_variables_uses_identity() {
        let u = grid(&[65, 65], sinsum);
        let rep = h1_sandwich(&u, &[1, 1]).unwrap();
        let tail = rep.formula.tail_error_value.unwrap();
        assert!((tail - rep.measured.h1.powi(2)).abs() <= 1e-10 * tail);
        assert!(rep.residual_bracket().holds(1e-9));
        let zero = h1_sandwich(&u, &[0, 2]).unwrap();
        assert_eq!(zero.gammas[0], None);
        assert!(zero.bounds.limit_partial_sum.is_none());
        assert!((zero.measured.l2 - norm_l2(&u)).abs() < 1e-14);
    }
}
