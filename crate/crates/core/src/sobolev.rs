//! Sobolev norms of grid functions and the transfer of derivatives from a
//! function to its singular vectors.
//!
//! For the mode-`j` singular system of `u` the left vectors satisfy
//! `ψ_k = (1/σ_k) M_j(u) W_c φ_k`. Applying the (linear) differentiation
//! matrix on both sides gives
//!
//! ```text
//! γ_k := (1/σ_k) M_j(∂_j u) W_c φ_k = D_j ψ_k,
//! ```
//!
//! and substituting `φ_k = (1/σ_k) M_j(u)ᵀ W_r ψ_k` recovers the integral form
//! `(1/λ_k) M_j(∂_j u) W_c M_j(u)ᵀ W_r ψ_k`. The two are equal in exact
//! arithmetic; the `1/σ_k` form is the one evaluated here because the
//! `1/λ_k` form loses a further factor `σ_1/σ_k` to rounding.
//!
//! Cauchy–Schwarz in the weighted spaces yields the bound
//! `‖γ_k‖₀ ≤ (1/λ_k) ‖u‖₀ ‖∂_j u‖₀`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::discretization::{inner_l2, partial_derivative, weighted_sum, Axis, GridFunction};
use crate::error::{Error, Result};
use crate::svd::SingularSystem;
use crate::tensor::matricize;

/// `λ_k > RETAIN_REL · λ_1` decides which `k` carry derivative data.
pub const RETAIN_REL: f64 = 1e-14;

/// Largest `d` accepted by [`norm_mix`].
pub const MAX_MIX_DIM: usize = 4;

pub fn norm_l2(f: &GridFunction) -> f64 {
    norm_l2_sq(f).sqrt()
}

pub(crate) fn norm_l2_sq(f: &GridFunction) -> f64 {
    let d = f.values().data();
    weighted_sum(f, |i| d[i] * d[i])
}

/// `‖f‖₀² + ‖∂_k f‖₀²`, square-rooted.
pub fn norm_ek(f: &GridFunction, k: usize) -> Result<f64> {
    let df = partial_derivative(f, k)?;
    Ok((norm_l2_sq(f) + norm_l2_sq(&df)).sqrt())
}

pub fn norm_h1(f: &GridFunction) -> f64 {
    norm_h1_sq(f).sqrt()
}

pub(crate) fn norm_h1_sq(f: &GridFunction) -> f64 {
    let derivs: f64 = (0..f.ndim())
        .into_par_iter()
        .map(|k| norm_l2_sq(&partial_derivative(f, k).expect("mode in range")))
        .sum();
    norm_l2_sq(f) + derivs
}

/// Sum over all `2^d` mode subsets `S` of `‖∂_S f‖₀²`, square-rooted.
pub fn norm_mix(f: &GridFunction) -> Result<f64> {
    let d = f.ndim();
    if d > MAX_MIX_DIM {
        return Err(Error::Dimension {
            expected: format!("<= {MAX_MIX_DIM}"),
            actual: d,
        });
    }
    let total: f64 = (0u32..1 << d)
        .into_par_iter()
        .map(|mask| {
            let mut g = f.clone();
            for k in 0..d {
                if mask & (1 << k) != 0 {
                    g = partial_derivative(&g, k).expect("mode in range");
                }
            }
            norm_l2_sq(&g)
        })
        .sum();
    Ok(total.sqrt())
}

fn system_mode(u: &GridFunction, sys: &SingularSystem) -> Result<usize> {
    let mode = sys.mode().ok_or(Error::Dimension {
        expected: "single-mode matricization".into(),
        actual: u.ndim(),
    })?;
    let layout = sys.layout().expect("mode implies layout");
    if layout.tensor_shape() != u.shape() {
        return Err(Error::ShapeMismatch {
            expected: layout.tensor_shape().to_vec(),
            actual: u.shape().to_vec(),
        });
    }
    Ok(mode)
}

fn transfer(du_mat: &DMatrix<f64>, sys: &SingularSystem, k: usize) -> Result<Vec<f64>> {
    let sigma = sys.sigmas()[k];
    if sigma <= 0.0 {
        return Err(Error::DegenerateMode { k });
    }
    let wc = sys.col_weights();
    let phi = sys.right_vector(k);
    let x: Vec<f64> = phi.iter().zip(wc).map(|(p, w)| p * w / sigma).collect();
    let g = du_mat * nalgebra::DVector::from_vec(x);
    Ok(g.as_slice().to_vec())
}

/// `γ_k` for the singular system `sys` of a one-mode matricization of `u`.
pub fn singular_derivative_operator(u: &GridFunction, sys: &SingularSystem, k: usize) -> Result<Vec<f64>> {
    let mode = system_mode(u, sys)?;
    if k >= sys.len() {
        return Err(Error::InsufficientRank {
            needed: k + 1,
            available: sys.len(),
        });
    }
    let du = partial_derivative(u, mode)?;
    let (m, _) = matricize(du.values(), &[mode])?;
    transfer(&m, sys, k)
}

/// Derivative information of the left singular vectors of one mode.
///
/// `dpsi` holds `D_j ψ_k` for every `k`; `gammas`, `gamma_norms` and
/// `bound_values` cover the retained `k` only.
#[derive(Clone, Debug)]
pub struct DerivativeData {
    pub mode: usize,
    pub sigmas: Vec<f64>,
    pub dpsi: DMatrix<f64>,
    pub dpsi_norms: Vec<f64>,
    pub gammas: DMatrix<f64>,
    pub gamma_norms: Vec<f64>,
    pub bound_values: Vec<f64>,
    pub u_l2: f64,
    pub du_l2: f64,
    weights: Vec<f64>,
}

impl DerivativeData {
    pub fn retained(&self) -> usize {
        self.bound_values.len()
    }

    /// Weighted inner product of `D ψ_k` and `D ψ_l`.
    pub fn dpsi_inner(&self, k: usize, l: usize) -> f64 {
        let n = self.dpsi.nrows();
        let a = &self.dpsi.as_slice()[k * n..(k + 1) * n];
        let b = &self.dpsi.as_slice()[l * n..(l + 1) * n];
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w).sum()
    }

    /// Largest `‖γ_k‖₀ - bound_k` over retained `k` (negative when the
    /// bound holds with room to spare).
    pub fn max_bound_excess(&self) -> f64 {
        self.gamma_norms
            .iter()
            .zip(&self.bound_values)
            .map(|(g, b)| g - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative distance between `γ_k` and `D ψ_k` over retained
    /// `k`, measured in the weighted norm. Falls back to the absolute
    /// distance where `‖D ψ_k‖₀ < 1e-8`.
    pub fn max_transfer_error(&self) -> f64 {
        let n = self.dpsi.nrows();
        (0..self.retained())
            .map(|k| {
                let a = &self.dpsi.as_slice()[k * n..(k + 1) * n];
                let g = &self.gammas.as_slice()[k * n..(k + 1) * n];
                let diff: f64 = a
                    .iter()
                    .zip(g)
                    .zip(&self.weights)
                    .map(|((x, y), w)| (x - y) * (x - y) * w)
                    .sum::<f64>()
                    .sqrt();
                let scale = self.dpsi_norms[k];
                if scale < 1e-8 {
                    diff
                } else {
                    diff / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

fn weighted_norm(axis: &Axis, v: &[f64]) -> f64 {
    axis.inner(v, v).sqrt()
}

/// Fills `γ_k`, `‖D ψ_k‖₀` and the bound `(1/λ_k)‖u‖₀‖∂_j u‖₀`.
pub fn derivative_data(u: &GridFunction, sys: &SingularSystem) -> Result<DerivativeData> {
    let mode = system_mode(u, sys)?;
    let axis = u.axis(mode);
    let n = axis.len();
    let du = partial_derivative(u, mode)?;
    let u_l2 = norm_l2(u);
    let du_l2 = norm_l2(&du);
    let (du_mat, _) = matricize(du.values(), &[mode])?;

    let cols: Vec<Vec<f64>> = (0..sys.len())
        .into_par_iter()
        .map(|k| axis.differentiate(sys.left_vector(k)))
        .collect();
    let dpsi_norms: Vec<f64> = cols.iter().map(|c| weighted_norm(axis, c)).collect();
    let dpsi = DMatrix::from_iterator(n, cols.len(), cols.into_iter().flatten());

    let lam1 = sys.sigmas().first().map_or(0.0, |s| s * s);
    let retained = sys
        .sigmas()
        .iter()
        .take_while(|&&s| lam1 > 0.0 && s * s > RETAIN_REL * lam1)
        .count();
    let gam: Vec<Vec<f64>> = (0..retained)
        .into_par_iter()
        .map(|k| transfer(&du_mat, sys, k))
        .collect::<Result<_>>()?;
    let gamma_norms: Vec<f64> = gam.iter().map(|g| weighted_norm(axis, g)).collect();
    let bound_values: Vec<f64> = sys.sigmas()[..retained]
        .iter()
        .map(|s| u_l2 * du_l2 / (s * s))
        .collect();
    let gammas = DMatrix::from_iterator(n, retained, gam.into_iter().flatten());

    Ok(DerivativeData {
        mode,
        sigmas: sys.sigmas().to_vec(),
        dpsi,
        dpsi_norms,
        gammas,
        gamma_norms,
        bound_values,
        u_l2,
        du_l2,
        weights: axis.weights().to_vec(),
    })
}

/// `‖f - g‖` in the `L²` inner product, for callers holding two grid
/// functions on the same axes.
pub fn distance_l2(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let d = f.sub(g)?;
    Ok(inner_l2(&d, &d)?.sqrt())
}
