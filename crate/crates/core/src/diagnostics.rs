//! Rate fits for rank sweeps and estimators of the direct (Jackson) and
//! inverse (Bernstein) exponents of the singular-vector hierarchy
//! `S_l = span{ψ_k : k ≤ 2^l}`.

use crate::discretization::GridFunction;
use crate::error::{Error, Result};
use crate::sobolev::{norm_h1, DerivativeData};
use crate::svd::{numerical_rank, SingularSystem, DEFAULT_RANK_TOL};
use crate::truncation::gamma_constant;

/// Values at or below this are left out of log fits.
pub const FIT_FLOOR: f64 = 1e-13;

/// Least-squares line through `(log₂ x, log₂ y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Number of points above [`FIT_FLOOR`] that entered the fit.
    pub used: usize,
}

pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit(format!("{} xs for {} ys", xs.len(), ys.len())));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > FIT_FLOOR && y.is_finite())
        .map(|(&x, &y)| (x, y))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    if pts.iter().any(|&(x, _)| !(x > 0.0 && x.is_finite())) {
        return Err(Error::DegenerateFit("abscissae must be positive".into()));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log2()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        slope,
        intercept,
        r2,
        used: pts.len(),
    })
}

/// Per-level values with their fit; `fit` is `None` when fewer than three
/// levels lie above [`FIT_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFit {
    /// `2^l` for `l = 0..=max_level`.
    pub cutoffs: Vec<usize>,
    pub values: Vec<f64>,
    pub fit: Option<RateFit>,
}

fn level_fit(cutoffs: Vec<usize>, values: Vec<f64>) -> LevelFit {
    let xs: Vec<f64> = cutoffs.iter().map(|&c| c as f64).collect();
    let fit = rate_fit(&xs, &values).ok();
    LevelFit { cutoffs, values, fit }
}

fn cutoffs(max_level: u32) -> Vec<usize> {
    (0..=max_level).map(|l| 1usize << l).collect()
}

/// `Γ(2^l)` for `l = 0..=max_level`; the slope of `log₂ Γ` against `l`
/// estimates the Bernstein exponent.
pub fn bernstein_exponent(sys: &SingularSystem, dd: &DerivativeData, max_level: u32) -> Result<LevelFit> {
    let cut = cutoffs(max_level);
    let need = *cut.last().expect("nonempty");
    let rank = numerical_rank(sys, DEFAULT_RANK_TOL);
    if rank < need {
        return Err(Error::InsufficientRank {
            needed: need,
            available: rank,
        });
    }
    let values = cut.iter().map(|&r| gamma_constant(dd, r)).collect::<Result<Vec<_>>>()?;
    Ok(level_fit(cut, values))
}

/// `max_p ‖p - P_l p‖₀ / ‖p‖₁` for each level, where `P_l` is the weighted
/// projector onto `S_l`. A negative slope estimates the Jackson exponent.
pub fn jackson_exponent(sys: &SingularSystem, probes: &[GridFunction], max_level: u32) -> Result<LevelFit> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    let cut = cutoffs(max_level);
    let need = *cut.last().expect("nonempty");
    if sys.len() < need {
        return Err(Error::InsufficientRank {
            needed: need,
            available: sys.len(),
        });
    }
    let n = sys.left().nrows();
    let w = sys.row_weights();
    let mut values = vec![0.0f64; cut.len()];
    for p in probes {
        if p.ndim() != 1 || p.shape()[0] != n {
            return Err(Error::ShapeMismatch {
                expected: vec![n],
                actual: p.shape().to_vec(),
            });
        }
        let pv = p.values().data();
        let h1 = norm_h1(p);
        if h1 == 0.0 {
            continue;
        }
        // coefficients ⟨p, ψ_k⟩ and running projection error
        let coef: Vec<f64> = (0..need)
            .map(|k| {
                sys.left_vector(k)
                    .iter()
                    .zip(pv)
                    .zip(w)
                    .map(|((a, b), w)| a * b * w)
                    .sum()
            })
            .collect();
        for (l, &c) in cut.iter().enumerate() {
            let mut resid = pv.to_vec();
            for (k, &ck) in coef.iter().enumerate().take(c) {
                for (r, v) in resid.iter_mut().zip(sys.left_vector(k)) {
                    *r -= ck * v;
                }
            }
            let e: f64 = resid.iter().zip(w).map(|(r, w)| r * r * w).sum::<f64>().sqrt();
            values[l] = values[l].max(e / h1);
        }
    }
    Ok(level_fit(cut, values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceFlag {
    Converged,
    Undecided,
    Diverging,
}

impl ConvergenceFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceFlag::Converged => "converged",
            ConvergenceFlag::Undecided => "undecided",
            ConvergenceFlag::Diverging => "diverging",
        }
    }
}

/// Heuristic classification of a non-decreasing sequence of partial sums.
///
/// * converged: the last two increments are below `1e-8` times the last
///   value, or the increments over the trailing half (at least three) are
///   positive and decay faster than `k^-1.25` in a log-log fit;
/// * diverging: increments are non-decreasing over the last four points and
///   the last value exceeds ten times the first;
/// * undecided otherwise.
pub fn h1_convergence_flag(partial_sums: &[f64]) -> Result<ConvergenceFlag> {
    let n = partial_sums.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    if partial_sums.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateFit("non-finite partial sum".into()));
    }
    let inc: Vec<f64> = partial_sums.windows(2).map(|w| w[1] - w[0]).collect();
    let last = partial_sums[n - 1];
    let small = 1e-8 * last.abs();
    if inc[inc.len() - 2..].iter().all(|&d| d.abs() < small) || last == 0.0 && inc.iter().all(|&d| d == 0.0) {
        return Ok(ConvergenceFlag::Converged);
    }

    let half = (inc.len() / 2).max(3);
    if inc.len() >= 3 && half <= inc.len() {
        let start = inc.len() - half;
        let tail = &inc[start..];
        if tail.iter().all(|&d| d > 0.0) {
            let xs: Vec<f64> = (start..inc.len()).map(|i| (i + 1) as f64).collect();
            // increments are compared relative to the last value so the fit floor is scale-free
            let ys: Vec<f64> = tail.iter().map(|d| d / last.abs()).collect();
            if let Ok(fit) = rate_fit(&xs, &ys) {
                if fit.used == tail.len() && fit.slope < -1.25 {
                    return Ok(ConvergenceFlag::Converged);
                }
            }
        }
    }

    let window = &inc[inc.len().saturating_sub(3)..];
    let growing = window.windows(2).all(|w| w[1] >= w[0]);
    if growing && last > 10.0 * partial_sums[0] {
        return Ok(ConvergenceFlag::Diverging);
    }
    Ok(ConvergenceFlag::Undecided)
}
