//! Quadrature-weighted singular value decompositions.
//!
//! A sampled function `u` on a product grid is identified with the integral
//! operator `w ↦ ∫ u(·, y) w(y) dy`. With row weights `W_r` and column
//! weights `W_c` its singular triplets are those of
//! `W_r^{1/2} M W_c^{1/2}`, unscaled afterwards so that the singular vectors
//! are orthonormal in the weighted (discrete `L²`) inner products.
//!
//! The dense SVD is followed by two refinement steps in which the residual
//! quantities `I - UᵀU`, `I - VᵀV` and `UᵀAV` are evaluated with compensated
//! dot products. That pushes the triplets of small singular values down to
//! near their rounding floor, which the derivative-transfer identities in
//! [`crate::sobolev`] depend on.
//!
//! Sign convention: the largest-magnitude entry of every left vector is
//! positive (ties go to the lowest index); right vectors follow.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::discretization::GridFunction;
use crate::error::{Error, Result};
use crate::precision::dot2;
use crate::tensor::{dematricize, matricize, mode_product, DenseTensor, MatShape};

/// Relative size below which refinement neither separates two singular
/// values nor corrects a thin factor outside its span.
const REFINE_FLOOR: f64 = 1e-10;

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Singular values with weighted-orthonormal left and right vectors.
#[derive(Clone, Debug)]
pub struct SingularSystem {
    layout: Option<MatShape>,
    sigmas: Vec<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
}

impl SingularSystem {
    /// Assembles a system from given factors. Columns of `left` and `right`
    /// are expected to be weighted-orthonormal; nothing is recomputed.
    pub fn from_parts(
        sigmas: Vec<f64>,
        left: DMatrix<f64>,
        right: DMatrix<f64>,
        row_weights: Vec<f64>,
        col_weights: Vec<f64>,
    ) -> Result<Self> {
        let k = sigmas.len();
        if left.ncols() != k || right.ncols() != k {
            return Err(Error::ShapeMismatch {
                expected: vec![k, k],
                actual: vec![left.ncols(), right.ncols()],
            });
        }
        validate_weights(&row_weights, left.nrows())?;
        validate_weights(&col_weights, right.nrows())?;
        Ok(Self {
            layout: None,
            sigmas,
            left,
            right,
            row_weights,
            col_weights,
        })
    }

    /// Attaches the matricization the system belongs to.
    pub fn with_layout(mut self, layout: MatShape) -> Result<Self> {
        if layout.rows() != self.left.nrows() || layout.cols() != self.right.nrows() {
            return Err(Error::ShapeMismatch {
                expected: vec![layout.rows(), layout.cols()],
                actual: vec![self.left.nrows(), self.right.nrows()],
            });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Columns are the left singular vectors `ψ_k`.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Columns are the right singular vectors `φ_k`.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn left_vector(&self, k: usize) -> &[f64] {
        let n = self.left.nrows();
        &self.left.as_slice()[k * n..(k + 1) * n]
    }

    pub fn right_vector(&self, k: usize) -> &[f64] {
        let n = self.right.nrows();
        &self.right.as_slice()[k * n..(k + 1) * n]
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    /// Matricization this system was computed from, if any.
    pub fn layout(&self) -> Option<&MatShape> {
        self.layout.as_ref()
    }

    /// The row mode for one-mode unfoldings.
    pub fn mode(&self) -> Option<usize> {
        self.layout.as_ref().and_then(MatShape::single_mode)
    }

    /// Exchanges the roles of left and right vectors (the SVD of the adjoint).
    pub fn transpose(&self) -> SingularSystem {
        SingularSystem {
            layout: self.layout.as_ref().map(MatShape::transposed),
            sigmas: self.sigmas.clone(),
            left: self.right.clone(),
            right: self.left.clone(),
            row_weights: self.col_weights.clone(),
            col_weights: self.row_weights.clone(),
        }
    }

    pub fn numerical_rank(&self, tol_rel: f64) -> usize {
        numerical_rank(self, tol_rel)
    }

    /// `Σ_{k<r} σ_k ψ_k φ_kᵀ` as a matrix (function values).
    pub fn reconstruct(&self, r: usize) -> DMatrix<f64> {
        let r = r.min(self.len());
        let mut scaled = self.left.columns(0, r).into_owned();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.sigmas[k];
        }
        scaled * self.right.columns(0, r).transpose()
    }

    /// Largest entry of `ΨᵀW_rΨ - I` and `ΦᵀW_cΦ - I` in absolute value.
    pub fn orthonormality_defect(&self) -> f64 {
        gram_defect(&self.left, &self.row_weights).max(gram_defect(&self.right, &self.col_weights))
    }

    /// Weighted Frobenius distance between `m` and the full reconstruction,
    /// relative to the weighted norm of `m`.
    pub fn reconstruction_defect(&self, m: &DMatrix<f64>) -> f64 {
        let rec = self.reconstruct(self.len());
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let w = self.row_weights[r] * self.col_weights[c];
                num += w * (m[(r, c)] - rec[(r, c)]).powi(2);
                den += w * m[(r, c)].powi(2);
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

fn gram_defect(vecs: &DMatrix<f64>, w: &[f64]) -> f64 {
    let k = vecs.ncols();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let g: f64 = (0..vecs.nrows()).map(|r| w[r] * vecs[(r, i)] * vecs[(r, j)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

fn validate_weights(w: &[f64], len: usize) -> Result<()> {
    if w.len() != len || w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidWeights);
    }
    Ok(())
}

/// SVD of `diag(√w_row) · m · diag(√w_col)`, unscaled to weighted-orthonormal
/// vectors.
pub fn weighted_svd(m: &DMatrix<f64>, w_row: &[f64], w_col: &[f64]) -> Result<SingularSystem> {
    validate_weights(w_row, m.nrows())?;
    validate_weights(w_col, m.ncols())?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let sr: Vec<f64> = w_row.iter().map(|w| w.sqrt()).collect();
    let sc: Vec<f64> = w_col.iter().map(|w| w.sqrt()).collect();
    let mut a = m.clone();
    for (c, mut col) in a.column_iter_mut().enumerate() {
        for (r, v) in col.iter_mut().enumerate() {
            *v *= sr[r] * sc[c];
        }
    }

    let (mut u, mut s, mut v) = dense_svd(&a)?;
    // the second pass removes the second-order error left by the first
    for _ in 0..2 {
        refine_triplets(&a, &mut u, &mut s, &mut v);
    }
    // refinement can leave rounding-level values slightly negative or out of order
    for (k, sk) in s.iter_mut().enumerate() {
        if *sk < 0.0 {
            *sk = -*sk;
            v.column_mut(k).neg_mut();
        }
    }
    let (u, s, v) = sort_descending(u, s, v);

    let mut left = u;
    for (r, mut row) in left.row_iter_mut().enumerate() {
        row /= sr[r];
    }
    let mut right = v;
    for (r, mut row) in right.row_iter_mut().enumerate() {
        row /= sc[r];
    }
    fix_signs(&mut left, &mut right);

    Ok(SingularSystem {
        layout: None,
        sigmas: s,
        left,
        right,
        row_weights: w_row.to_vec(),
        col_weights: w_col.to_vec(),
    })
}

/// Thin SVD `a = U diag(s) Vᵀ` with `k = min(rows, cols)` columns.
fn dense_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok((DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0)));
    }
    let fa = faer::Mat::<f64>::from_fn(rows, cols, |r, c| a[(r, c)]);
    let svd = fa.thin_svd().map_err(|_| Error::SvdFailed)?;
    let k = rows.min(cols);
    let (fu, fs, fv) = (svd.U(), svd.S(), svd.V());
    let u = DMatrix::from_fn(rows, k, |r, c| fu[(r, c)]);
    let v = DMatrix::from_fn(cols, k, |r, c| fv[(r, c)]);
    let s = (0..k).map(|i| fs[i]).collect();
    Ok((u, s, v))
}

fn sort_descending(u: DMatrix<f64>, s: Vec<f64>, v: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return (u, s, v);
    }
    let u2 = DMatrix::from_columns(&order.iter().map(|&k| u.column(k)).collect::<Vec<_>>());
    let v2 = DMatrix::from_columns(&order.iter().map(|&k| v.column(k)).collect::<Vec<_>>());
    (u2, order.iter().map(|&k| s[k]).collect(), v2)
}

fn fix_signs(left: &mut DMatrix<f64>, right: &mut DMatrix<f64>) {
    for k in 0..left.ncols() {
        let col = left.column(k);
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            left.column_mut(k).neg_mut();
            right.column_mut(k).neg_mut();
        }
    }
}

/// One first-order refinement step for an approximate thin SVD, with the
/// residual terms computed in doubled precision.
///
/// Writing the exact factors as `U(I+F)`, `V(I+G)`, orthogonality gives
/// `F + Fᵀ = I - UᵀU =: R`, `G + Gᵀ = I - VᵀV =: S`, and diagonality of
/// `(I+F)ᵀ UᵀAV (I+G)` gives, for `i ≠ j`, the 2×2 system
/// `-σ_j F_ij + σ_i G_ij = -T_ij - σ_j R_ij`,
/// ` σ_i F_ij - σ_j G_ij = -T_ji - σ_j S_ij` with `T = UᵀAV`.
fn refine_triplets(a: &DMatrix<f64>, u: &mut DMatrix<f64>, s: &mut [f64], v: &mut DMatrix<f64>) {
    let k = s.len();
    if k == 0 {
        return;
    }
    let (m, n) = a.shape();
    let at = a.transpose();

    // Y = A V in double-double, column by column
    let y: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let vj = &v.as_slice()[j * n..(j + 1) * n];
            let mut hi = vec![0.0; m];
            let mut lo = vec![0.0; m];
            for i in 0..m {
                let (h, l) = dot2(&at.as_slice()[i * n..(i + 1) * n], vj);
                hi[i] = h;
                lo[i] = l;
            }
            (hi, lo)
        })
        .collect();
    let ucols: Vec<&[f64]> = (0..k).map(|i| &u.as_slice()[i * m..(i + 1) * m]).collect();
    let vcols: Vec<&[f64]> = (0..k).map(|i| &v.as_slice()[i * n..(i + 1) * n]).collect();

    // column j of T and the upper triangles of the symmetric R, S
    let cols: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let (yh, yl) = &y[j];
            let mut t = vec![0.0; k];
            let mut r = vec![0.0; j + 1];
            let mut sg = vec![0.0; j + 1];
            for i in 0..k {
                let (h, l) = dot2(ucols[i], yh);
                let tail: f64 = ucols[i].iter().zip(yl).map(|(a, b)| a * b).sum();
                t[i] = h + (l + tail);
                if i <= j {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let (h, l) = dot2(ucols[i], ucols[j]);
                    r[i] = (delta - h) - l;
                    let (h, l) = dot2(vcols[i], vcols[j]);
                    sg[i] = (delta - h) - l;
                }
            }
            (t, r, sg)
        })
        .collect();
    let t = |i: usize, j: usize| cols[j].0[i];
    let r = |i: usize, j: usize| if i <= j { cols[j].1[i] } else { cols[i].1[j] };
    let sm = |i: usize, j: usize| if i <= j { cols[j].2[i] } else { cols[i].2[j] };

    let sig: Vec<f64> = (0..k).map(|i| t(i, i) / (1.0 - 0.5 * (r(i, i) + sm(i, i)))).collect();
    let s1 = sig.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    // pairs closer than this would take first-order steps of size ε/gap
    let gap_floor = REFINE_FLOOR * s1;

    let mut f = DMatrix::zeros(k, k);
    let mut g = DMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..k {
            if i == j || (sig[i] - sig[j]).abs() <= gap_floor {
                f[(i, j)] = 0.5 * r(i, j);
                g[(i, j)] = 0.5 * sm(i, j);
                continue;
            }
            let (si, sj) = (sig[i], sig[j]);
            let rhs_a = -t(i, j) - sj * r(i, j);
            let rhs_b = -t(j, i) - sj * sm(i, j);
            let det = sj * sj - si * si;
            f[(i, j)] = (-sj * rhs_a - si * rhs_b) / det;
            g[(i, j)] = (-sj * rhs_b - si * rhs_a) / det;
        }
    }
    let mut du = &*u * &f;
    let mut dv = &*v * &g;
    // thin factors cannot correct themselves outside their own span
    if m > k {
        complement_correction(&mut du, &ucols, &y, &sig, gap_floor, t);
    }
    if n > k {
        let z: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
            .into_par_iter()
            .map(|j| {
                let uj = ucols[j];
                let mut hi = vec![0.0; n];
                let mut lo = vec![0.0; n];
                for i in 0..n {
                    let (h, l) = dot2(&a.as_slice()[i * m..(i + 1) * m], uj);
                    hi[i] = h;
                    lo[i] = l;
                }
                (hi, lo)
            })
            .collect();
        complement_correction(&mut dv, &vcols, &z, &sig, gap_floor, |i, j| t(j, i));
    }
    *u += du;
    *v += dv;
    s.copy_from_slice(&sig);
}

/// Adds `(I - QQᵀ) y_j / σ_j` to column `j` of `dq`, where `y_j` is held as a
/// double-double pair and `proj(i, j)` is `q_iᵀ y_j`. Columns with
/// `σ_j ≤ floor` are left alone: there the quotient is rounding noise.
fn complement_correction(
    dq: &mut DMatrix<f64>,
    qcols: &[&[f64]],
    y: &[(Vec<f64>, Vec<f64>)],
    sig: &[f64],
    floor: f64,
    proj: impl Fn(usize, usize) -> f64,
) {
    for (j, (yh, yl)) in y.iter().enumerate() {
        if sig[j] <= floor {
            continue;
        }
        let mut c: Vec<f64> = yh.iter().zip(yl).map(|(h, l)| h + l).collect();
        for (i, q) in qcols.iter().enumerate() {
            let p = proj(i, j);
            for (ci, qi) in c.iter_mut().zip(q.iter()) {
                *ci -= p * qi;
            }
        }
        // second pass removes what the first left behind through `QᵀQ ≠ I`
        for q in qcols {
            let p: f64 = q.iter().zip(&c).map(|(a, b)| a * b).sum();
            for (ci, qi) in c.iter_mut().zip(q.iter()) {
                *ci -= p * qi;
            }
        }
        for (d, ci) in dq.column_mut(j).iter_mut().zip(&c) {
            *d += ci / sig[j];
        }
    }
}

/// Weighted SVD of the mode-`j` unfolding of `u`.
pub fn mode_svd(u: &GridFunction, mode: usize) -> Result<SingularSystem> {
    if mode >= u.ndim() {
        return Err(Error::ModeOutOfRange { mode, ndim: u.ndim() });
    }
    let (m, layout) = matricize(u.values(), &[mode])?;
    let w_row = u.axis(mode).weights().to_vec();
    let w_col = u.kron_weights(layout.complement());
    let mut sys = weighted_svd(&m, &w_row, &w_col)?;
    sys.layout = Some(layout);
    Ok(sys)
}

/// Number of `σ_k > tol_rel · σ_1` (zero when `σ_1 = 0`).
pub fn numerical_rank(sys: &SingularSystem, tol_rel: f64) -> usize {
    debug_assert!(tol_rel > 0.0 && tol_rel < 1.0);
    match sys.sigmas.first() {
        Some(&s1) if s1 > 0.0 => sys.sigmas.iter().take_while(|&&s| s > tol_rel * s1).count(),
        _ => 0,
    }
}

/// Per-mode singular systems with the coefficient core on the truncated
/// mode frames.
#[derive(Clone, Debug)]
pub struct HosvdSystem {
    pub systems: Vec<SingularSystem>,
    pub ranks: Vec<usize>,
    pub core: DenseTensor,
}

impl HosvdSystem {
    /// `core ×_j Ψ_j` on the axes of `like`.
    pub fn reconstruct(&self, like: &GridFunction) -> Result<GridFunction> {
        if self.ranks.contains(&0) {
            return Ok(GridFunction::zeros(like.axes().to_vec()));
        }
        let mut t = self.core.clone();
        for (j, sys) in self.systems.iter().enumerate() {
            t = mode_product(&t, &sys.left.columns(0, self.ranks[j]).into_owned(), j)?;
        }
        like.with_values(t)
    }

    /// Largest deviation of the mode-`j` Gram of the core unfolding from
    /// `diag(σ_j²)`, relative to `σ_1²`.
    pub fn core_gram_defect(&self, mode: usize) -> Result<f64> {
        let r = self.ranks[mode];
        if r == 0 {
            return Ok(0.0);
        }
        let (c, _) = if self.core.ndim() == 1 {
            (DMatrix::from_column_slice(r, 1, self.core.data()), ())
        } else {
            let (m, _) = matricize(&self.core, &[mode])?;
            (m, ())
        };
        let gram = &c * c.transpose();
        let sig = self.systems[mode].sigmas();
        let scale = sig[0] * sig[0];
        let mut worst: f64 = 0.0;
        for i in 0..r {
            for j in 0..r {
                let target = if i == j { sig[i] * sig[i] } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs() / scale);
            }
        }
        Ok(worst)
    }
}

/// Analysis transform for a truncated mode frame: `Ψ_rᵀ diag(w)`.
pub(crate) fn analysis_matrix(sys: &SingularSystem, r: usize) -> DMatrix<f64> {
    let mut m = sys.left.columns(0, r).transpose();
    for (c, mut col) in m.column_iter_mut().enumerate() {
        col *= sys.row_weights[c];
    }
    m
}

pub fn hosvd(u: &GridFunction, tol_rel: f64) -> Result<HosvdSystem> {
    if u.ndim() < 2 {
        return Err(Error::Dimension {
            expected: ">= 2".into(),
            actual: u.ndim(),
        });
    }
    let systems = (0..u.ndim())
        .into_par_iter()
        .map(|j| mode_svd(u, j))
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<usize> = systems.iter().map(|s| numerical_rank(s, tol_rel)).collect();
    let core = if ranks.contains(&0) {
        DenseTensor::zeros(&ranks)
    } else {
        let mut t = u.values().clone();
        for (j, sys) in systems.iter().enumerate() {
            t = mode_product(&t, &analysis_matrix(sys, ranks[j]), j)?;
        }
        t
    };
    Ok(HosvdSystem { systems, ranks, core })
}

/// Reassembles a tensor from a matrix in the layout of `sys`.
pub(crate) fn to_tensor(sys: &SingularSystem, m: &DMatrix<f64>) -> Result<DenseTensor> {
    let layout = sys.layout.as_ref().ok_or(Error::Dimension {
        expected: "matricized system".into(),
        actual: 0,
    })?;
    dematricize(m, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{make_axis, sample};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(ns: &[usize], f: impl Fn(&[f64]) -> f64) -> GridFunction {
        let axes: Vec<_> = ns.iter().map(|&n| Arc::new(make_axis(n, 0.0, 1.0).unwrap())).collect();
        sample(f, &axes).unwrap()
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let sys = weighted_svd(&DMatrix::zeros(5, 4), &[1.0; 5], &[0.5; 4]).unwrap();
        assert_eq!(sys.len(), 4);
        assert!(sys.sigmas().iter().all(|&s| s == 0.0));
        assert_eq!(numerical_rank(&sys, 1e-8), 0);
    }

    #[test]
    fn rejects_bad_weights_and_entries() {
        let m = DMatrix::from_element(2, 3, 1.0);
        assert_eq!(
            weighted_svd(&m, &[1.0, 0.0], &[1.0; 3]).unwrap_err(),
            Error::InvalidWeights
        );
        assert_eq!(
            weighted_svd(&m, &[1.0, 1.0], &[1.0; 2]).unwrap_err(),
            Error::InvalidWeights
        );
        assert_eq!(
            weighted_svd(&m, &[1.0, -1.0], &[1.0; 3]).unwrap_err(),
            Error::InvalidWeights
        );
        let mut bad = m.clone();
        bad[(1, 1)] = f64::INFINITY;
        assert!(matches!(
            weighted_svd(&bad, &[1.0; 2], &[1.0; 3]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn separable_sine_has_rank_one() {
        let u = grid(&[257, 257], |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let sys = mode_svd(&u, 0).unwrap();
        assert!((sys.sigmas()[0] - 0.5).abs() < 1e-4);
        assert!(sys.sigmas()[1] / sys.sigmas()[0] <= 1e-10);
        assert_eq!(numerical_rank(&sys, 1e-8), 1);
        assert!(sys.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn signs_follow_largest_entry() {
        let u = grid(&[33, 17], |x| {
            -(PI * x[0]).sin() * (2.0 * x[1] + 1.0) + 0.3 * (2.0 * PI * x[0]).sin()
        });
        let sys = mode_svd(&u, 0).unwrap();
        for k in 0..2 {
            let v = sys.left_vector(k);
            let mut best = 0;
            for i in 0..v.len() {
                if v[i].abs() > v[best].abs() {
                    best = i;
                }
            }
            assert!(v[best] > 0.0);
        }
        // signs agree between left and right: reconstruction stays exact
        let (m, _) = matricize(u.values(), &[0]).unwrap();
        assert!(sys.reconstruction_defect(&m) < 1e-12);
    }

    #[test]
    fn transpose_swaps_roles() {
        let u = grid(&[9, 12], |x| (x[0] + 2.0 * x[1]).exp());
        let sys = mode_svd(&u, 0).unwrap();
        let t = sys.transpose();
        assert_eq!(t.mode(), Some(1));
        assert_eq!(t.left(), sys.right());
        assert_eq!(t.row_weights(), sys.col_weights());
    }

    #[test]
    fn constant_direction_gives_constant_vector() {
        let u = grid(&[17, 21], |x| (PI * x[1]).sin() + x[1] * x[1]);
        let sys = mode_svd(&u, 0).unwrap();
        assert_eq!(numerical_rank(&sys, 1e-10), 1);
        let psi = sys.left_vector(0);
        assert!(psi.iter().all(|v| (v - 1.0).abs() < 1e-12), "{psi:?}");
    }

    #[test]
    fn hosvd_of_zero_is_empty() {
        let u = grid(&[5, 6, 7], |_| 0.0);
        let h = hosvd(&u, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(h.ranks, vec![0, 0, 0]);
        assert!(h.core.is_empty());
        let rec = h.reconstruct(&u).unwrap();
        assert_eq!(rec.values().max_abs(), 0.0);
    }

    #[test]
    fn hosvd_needs_two_modes() {
        let u = grid(&[5], |x| x[0]);
        assert!(matches!(hosvd(&u, 1e-12), Err(Error::Dimension { .. })));
    }
}
