//! Catalog of analytic test functions on `[0,1]^d` with closed-form (or
//! independently computable) ground truth.
//!
//! | name      | `u`                                    | source of the oracle          |
//! |-----------|----------------------------------------|-------------------------------|
//! | `SEP1`    | `sin(πx) sin(πy)`                      | elementary integrals          |
//! | `SINSUM`  | `Σ_k c_k sin(kπx) sin(kπy)`            | orthogonality of `sin(kπ·)`   |
//! | `BROWNIAN`| `min(x, y)`                            | Brownian covariance expansion |
//! | `SEP3D`   | `sin(πx) sin(πy) sin(πz)`              | separability                  |
//! | `SUM3D`   | `Σ_{k=1,2} c_k sin(kπx) sin(kπy) sin(kπz)` | orthogonal separable sum  |
//! | `EXPXY`   | `e^{xy}`                               | power-series Gram matrix      |
//!
//! Oracle values refer to the continuous problem. Discretized quantities
//! approach them at `O(n^-2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::discretization::{make_axis, sample, GridFunction};
use crate::error::{Error, Result};

/// Number of series terms used for the `EXPXY` oracle. The Gram eigenvalues
/// beyond the first dozen sit below double precision anyway.
const EXPXY_TERMS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Sep1,
    SinSum(Vec<f64>),
    Brownian,
    Sep3d,
    Sum3d(f64, f64),
    ExpXY,
}

/// One catalog entry.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticCase {
    kind: Kind,
}

/// `(name, description)` for every catalog entry.
pub fn list_cases() -> Vec<(&'static str, &'static str)> {
    vec![
        ("SEP1", "sin(pi x) sin(pi y); rank 1"),
        (
            "SINSUM",
            "sum_k c_k sin(k pi x) sin(k pi y); params c_1..c_m, default 1 0.5 0.25",
        ),
        ("BROWNIAN", "min(x, y); sigma_k = 1/((k-1/2) pi)^2"),
        ("SEP3D", "sin(pi x) sin(pi y) sin(pi z); Tucker rank (1,1,1)"),
        (
            "SUM3D",
            "c1 sin(pi x)sin(pi y)sin(pi z) + c2 sin(2pi x)sin(2pi y)sin(2pi z); params c1 c2, default 1 0.5",
        ),
        ("EXPXY", "exp(x y); oracle from the power-series Gram matrix"),
    ]
}

fn bad(case: &str, reason: impl Into<String>) -> Error {
    Error::InvalidCaseParams {
        case: case.into(),
        reason: reason.into(),
    }
}

/// Looks up a case by (case-insensitive) name. Empty `params` selects the
/// defaults.
pub fn get_case(name: &str, params: &[f64]) -> Result<AnalyticCase> {
    let upper = name.to_ascii_uppercase();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(bad(&upper, "parameters must be finite"));
    }
    let no_params = |kind: Kind| {
        if params.is_empty() {
            Ok(AnalyticCase { kind })
        } else {
            Err(bad(&upper, "takes no parameters"))
        }
    };
    match upper.as_str() {
        "SEP1" => no_params(Kind::Sep1),
        "BROWNIAN" => no_params(Kind::Brownian),
        "SEP3D" => no_params(Kind::Sep3d),
        "EXPXY" => no_params(Kind::ExpXY),
        "SINSUM" => {
            let c = if params.is_empty() {
                vec![1.0, 0.5, 0.25]
            } else {
                params.to_vec()
            };
            if c.len() > 64 {
                return Err(bad(&upper, "at most 64 coefficients"));
            }
            Ok(AnalyticCase { kind: Kind::SinSum(c) })
        }
        "SUM3D" => match params {
            [] => Ok(AnalyticCase {
                kind: Kind::Sum3d(1.0, 0.5),
            }),
            [a, b] => Ok(AnalyticCase {
                kind: Kind::Sum3d(*a, *b),
            }),
            _ => Err(bad(&upper, "expects exactly two coefficients")),
        },
        _ => Err(Error::UnknownCase(name.to_string())),
    }
}

fn sinsum_sorted(c: &[f64]) -> Vec<(f64, f64)> {
    // (|c_k|/2, k) ordered by decreasing magnitude, stable on ties
    let mut v: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .map(|(i, c)| (c.abs() / 2.0, (i + 1) as f64))
        .collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v
}

fn sum3d_sorted(a: f64, b: f64) -> Vec<(f64, f64)> {
    let s = 0.5f64.powf(1.5);
    let mut v = vec![(a.abs() * s, 1.0), (b.abs() * s, 2.0)];
    v.sort_by(|x, y| y.0.total_cmp(&x.0));
    v
}

impl AnalyticCase {
    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Sep1 => "SEP1",
            Kind::SinSum(_) => "SINSUM",
            Kind::Brownian => "BROWNIAN",
            Kind::Sep3d => "SEP3D",
            Kind::Sum3d(..) => "SUM3D",
            Kind::ExpXY => "EXPXY",
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::Sep3d | Kind::Sum3d(..) => 3,
            _ => 2,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            Kind::SinSum(c) => c.clone(),
            Kind::Sum3d(a, b) => vec![*a, *b],
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let s = |k: f64, t: f64| (k * PI * t).sin();
        match &self.kind {
            Kind::Sep1 => s(1.0, x[0]) * s(1.0, x[1]),
            Kind::SinSum(c) => c
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = (i + 1) as f64;
                    c * s(k, x[0]) * s(k, x[1])
                })
                .sum(),
            Kind::Brownian => x[0].min(x[1]),
            Kind::Sep3d => s(1.0, x[0]) * s(1.0, x[1]) * s(1.0, x[2]),
            Kind::Sum3d(a, b) => {
                a * s(1.0, x[0]) * s(1.0, x[1]) * s(1.0, x[2]) + b * s(2.0, x[0]) * s(2.0, x[1]) * s(2.0, x[2])
            }
            Kind::ExpXY => (x[0] * x[1]).exp(),
        }
    }

    /// Samples on the uniform grid of `[0,1]^d` with `n[j]` nodes per axis.
    pub fn sample(&self, n: &[usize]) -> Result<GridFunction> {
        if n.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim().to_string(),
                actual: n.len(),
            });
        }
        let axes = n
            .iter()
            .map(|&m| make_axis(m, 0.0, 1.0).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        sample(|x| self.eval(x), &axes)
    }

    /// Exact Tucker (or SVD) rank, where finite.
    pub fn exact_rank(&self) -> Option<usize> {
        match &self.kind {
            Kind::Sep1 | Kind::Sep3d => Some(1),
            Kind::SinSum(c) => Some(c.iter().filter(|&&c| c != 0.0).count()),
            Kind::Sum3d(a, b) => Some((*a != 0.0) as usize + (*b != 0.0) as usize),
            Kind::Brownian | Kind::ExpXY => None,
        }
    }

    /// The first `count` mode-`mode` singular values with `‖ψ_k'‖₀`, as
    /// `(σ_k, ‖ψ_k'‖₀)`. All cases are symmetric in their variables, so the
    /// mode only matters for range checking. Finite-rank cases return at most
    /// their rank.
    ///
    /// * `SEP1`: `‖sin(π·)‖₀² = 1/2` gives `σ_1 = 1/2`, `ψ_1 = √2 sin(πx)`,
    ///   `‖ψ_1'‖₀ = π`.
    /// * `SINSUM`: the `sin(kπ·)` are orthogonal with norm `1/√2`, hence
    ///   `σ = |c_k|/2` (sorted) with `‖ψ'‖₀ = kπ`.
    /// * `BROWNIAN`: `∫ min(x,y) ψ(y) dy = λ ψ(x)` reduces to
    ///   `-ψ'' = ψ/λ`, `ψ(0) = 0`, `ψ'(1) = 0`, so `ψ_k = √2 sin(a_k x)`,
    ///   `σ_k = 1/a_k²` and `‖ψ_k'‖₀ = a_k` with `a_k = (k-1/2)π`.
    /// * `SEP3D`: each unfolding is `σ = (1/√2)³` with `‖ψ'‖₀ = π`.
    /// * `SUM3D`: orthogonal terms give `σ = |c_k| (1/2)^{3/2}`, `‖ψ'‖₀ = kπ`.
    /// * `EXPXY`: with `f_m(t) = t^m/√m!`, `e^{xy} = Σ_m f_m(x) f_m(y)`. The
    ///   Gram matrix `G_ml = ⟨f_m, f_l⟩ = 1/((m+l+1)√(m! l!))` has eigenpairs
    ///   `(μ_k, v_k)` with `σ_k = μ_k`, `ψ_k = Σ_m a_m f_m`, `a = v_k/√μ_k`,
    ///   and `‖ψ_k'‖₀² = aᵀ G' a` where
    ///   `G'_ml = m l / ((m+l-1)√(m! l!))` (zero if `m` or `l` is zero).
    pub fn spectrum(&self, mode: usize, count: usize) -> Result<Vec<(f64, f64)>> {
        if mode >= self.dim() {
            return Err(Error::ModeOutOfRange { mode, ndim: self.dim() });
        }
        let mut out = match &self.kind {
            Kind::Sep1 => vec![(0.5, PI)],
            Kind::SinSum(c) => sinsum_sorted(c).into_iter().map(|(s, k)| (s, k * PI)).collect(),
            Kind::Brownian => (1..=count)
                .map(|k| {
                    let a = (k as f64 - 0.5) * PI;
                    (1.0 / (a * a), a)
                })
                .collect(),
            Kind::Sep3d => vec![(0.5f64.powf(1.5), PI)],
            Kind::Sum3d(a, b) => sum3d_sorted(*a, *b).into_iter().map(|(s, k)| (s, k * PI)).collect(),
            Kind::ExpXY => expxy_spectrum(),
        };
        out.truncate(count);
        Ok(out)
    }

    /// `‖u‖₀²`.
    pub fn l2_norm_sq(&self) -> f64 {
        match &self.kind {
            Kind::Sep1 => 0.25,
            Kind::SinSum(c) => c.iter().map(|c| c * c / 4.0).sum(),
            Kind::Brownian => 1.0 / 6.0,
            Kind::Sep3d => 0.125,
            Kind::Sum3d(a, b) => (a * a + b * b) / 8.0,
            // ∫∫ e^{2xy} = Σ_m 2^m / (m! (m+1)²)
            Kind::ExpXY => series(|m, fact| 2f64.powi(m as i32) / (fact * ((m + 1) * (m + 1)) as f64)),
        }
    }

    /// `‖u‖₁² = ‖u‖₀² + Σ_j ‖∂_j u‖₀²`.
    pub fn h1_norm_sq(&self) -> f64 {
        let pi2 = PI * PI;
        match &self.kind {
            Kind::Sep1 => (1.0 + 2.0 * pi2) / 4.0,
            Kind::SinSum(c) => c
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = (i + 1) as f64;
                    c * c / 4.0 * (1.0 + 2.0 * k * k * pi2)
                })
                .sum(),
            // ∂_x min(x,y) is the indicator of x < y, whose square integrates to 1/2
            Kind::Brownian => 1.0 / 6.0 + 1.0,
            Kind::Sep3d => (1.0 + 3.0 * pi2) / 8.0,
            Kind::Sum3d(a, b) => a * a / 8.0 * (1.0 + 3.0 * pi2) + b * b / 8.0 * (1.0 + 12.0 * pi2),
            // ∫∫ y² e^{2xy} = Σ_m 2^m / (m! (m+1)(m+3)), twice by symmetry
            Kind::ExpXY => {
                self.l2_norm_sq() + 2.0 * series(|m, fact| 2f64.powi(m as i32) / (fact * ((m + 1) * (m + 3)) as f64))
            }
        }
    }

    /// `Σ_{k>r} σ_k² (1 + ‖ψ_k'‖₀² + ‖φ_k'‖₀²) = ‖u - u_r‖₁²` for the
    /// two-variable cases (the right factors share the left ones' derivative
    /// norms by symmetry). `None` for `d = 3`.
    pub fn h1_tail(&self, r: usize) -> Option<f64> {
        if self.dim() != 2 {
            return None;
        }
        let term = |(s, d): (f64, f64)| s * s * (1.0 + 2.0 * d * d);
        match &self.kind {
            Kind::Brownian => {
                // Σ_k a_k^-4 = 1/6 and Σ_k 2 a_k^-2 = 1 sum to the full norm
                let head: f64 = self.spectrum(0, r).ok()?.into_iter().map(term).sum();
                Some(self.h1_norm_sq() - head)
            }
            _ => {
                let spec = self.spectrum(0, usize::MAX).ok()?;
                Some(spec.into_iter().skip(r).map(term).sum())
            }
        }
    }
}

fn series(term: impl Fn(usize, f64) -> f64) -> f64 {
    let mut fact = 1.0;
    let mut total = 0.0;
    for m in 0..EXPXY_TERMS {
        if m > 0 {
            fact *= m as f64;
        }
        total += term(m, fact);
    }
    total
}

fn expxy_spectrum() -> Vec<(f64, f64)> {
    let k = EXPXY_TERMS;
    let mut sqrt_fact = vec![1.0f64; k];
    for m in 1..k {
        sqrt_fact[m] = sqrt_fact[m - 1] * (m as f64).sqrt();
    }
    let g = DMatrix::from_fn(k, k, |m, l| 1.0 / ((m + l + 1) as f64 * sqrt_fact[m] * sqrt_fact[l]));
    let gd = DMatrix::from_fn(k, k, |m, l| {
        if m == 0 || l == 0 {
            0.0
        } else {
            (m * l) as f64 / ((m + l - 1) as f64 * sqrt_fact[m] * sqrt_fact[l])
        }
    });
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        // eigenvalues below this are rounding noise of the Gram solve
        .filter(|&i| eig.eigenvalues[i] > 1e-15 * eig.eigenvalues.max())
        .map(|i| {
            let mu = eig.eigenvalues[i];
            let a = eig.eigenvectors.column(i) / mu.sqrt();
            let d2 = (a.transpose() * &gd * &a)[(0, 0)];
            (mu, d2.max(0.0).sqrt())
        })
        .collect()
}
