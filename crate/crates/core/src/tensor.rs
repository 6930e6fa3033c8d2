//! Dense tensors, matricization and mode products.
//!
//! Storage is colexicographic (first index fastest). Matricizations flatten
//! the row modes `alpha` and the column modes (the complement) in the same
//! colexicographic order, each in ascending mode order. With that single
//! convention a mode-0 unfolding is a plain reinterpretation of the data
//! buffer as a column-major matrix.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Wraps a colexicographic buffer. Rejects a length mismatch and
    /// non-finite entries.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch {
                expected: vec![len],
                actual: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment_colex(shape, &mut idx);
        }
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[colex_offset(&self.shape, idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise `self - other`; shapes must agree.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scaled(&self, c: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Splits the shape around `mode` into (product before, n_mode, product after).
    pub(crate) fn mode_blocks(&self, mode: usize) -> (usize, usize, usize) {
        let before = self.shape[..mode].iter().product();
        let after = self.shape[mode + 1..].iter().product();
        (before, self.shape[mode], after)
    }
}

pub fn colex_offset(shape: &[usize], idx: &[usize]) -> usize {
    let mut off = 0;
    let mut stride = 1;
    for (&i, &n) in idx.iter().zip(shape) {
        debug_assert!(i < n);
        off += i * stride;
        stride *= n;
    }
    off
}

/// Advances `idx` to the next colexicographic multi-index (wraps to zero).
pub fn increment_colex(shape: &[usize], idx: &mut [usize]) {
    for (i, &n) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Row/column split of a tensor's modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatShape {
    shape: Vec<usize>,
    alpha: Vec<usize>,
    complement: Vec<usize>,
}

impl MatShape {
    /// `alpha` must be a nonempty proper subset of `0..shape.len()`; it is
    /// sorted and deduplicated.
    pub fn new(shape: &[usize], alpha: &[usize]) -> Result<Self> {
        let d = shape.len();
        let mut a = alpha.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() || a.len() != alpha.len() || a.len() >= d || a.iter().any(|&m| m >= d) {
            return Err(Error::InvalidSubset {
                alpha: alpha.to_vec(),
                ndim: d,
            });
        }
        let complement = (0..d).filter(|m| !a.contains(m)).collect();
        Ok(Self {
            shape: shape.to_vec(),
            alpha: a,
            complement,
        })
    }

    pub fn tensor_shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.alpha.iter().map(|&m| self.shape[m]).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.complement.iter().map(|&m| self.shape[m]).collect()
    }

    pub fn rows(&self) -> usize {
        self.row_dims().iter().product()
    }

    pub fn cols(&self) -> usize {
        self.col_dims().iter().product()
    }

    /// The same split with rows and columns exchanged.
    pub fn transposed(&self) -> MatShape {
        MatShape {
            shape: self.shape.clone(),
            alpha: self.complement.clone(),
            complement: self.alpha.clone(),
        }
    }

    /// Single row mode, if the split is a one-mode unfolding.
    pub fn single_mode(&self) -> Option<usize> {
        (self.alpha.len() == 1).then(|| self.alpha[0])
    }

    /// Per-mode (is_row, stride) in the flattened row/column index.
    fn strides(&self) -> Vec<(bool, usize)> {
        let mut out = vec![(false, 0); self.shape.len()];
        let mut s = 1;
        for &m in &self.alpha {
            out[m] = (true, s);
            s *= self.shape[m];
        }
        s = 1;
        for &m in &self.complement {
            out[m] = (false, s);
            s *= self.shape[m];
        }
        out
    }
}

pub fn matricize(t: &DenseTensor, alpha: &[usize]) -> Result<(DMatrix<f64>, MatShape)> {
    let ms = MatShape::new(t.shape(), alpha)?;
    let (rows, cols) = (ms.rows(), ms.cols());
    if ms.alpha == [0] {
        return Ok((DMatrix::from_column_slice(rows, cols, t.data()), ms));
    }
    let strides = ms.strides();
    let mut m = DMatrix::zeros(rows, cols);
    let mut idx = vec![0usize; t.ndim()];
    for &v in t.data() {
        let (mut r, mut c) = (0, 0);
        for (&i, &(is_row, s)) in idx.iter().zip(&strides) {
            if is_row {
                r += i * s;
            } else {
                c += i * s;
            }
        }
        m[(r, c)] = v;
        increment_colex(t.shape(), &mut idx);
    }
    Ok((m, ms))
}

pub fn dematricize(m: &DMatrix<f64>, ms: &MatShape) -> Result<DenseTensor> {
    if m.nrows() != ms.rows() || m.ncols() != ms.cols() {
        return Err(Error::ShapeMismatch {
            expected: vec![ms.rows(), ms.cols()],
            actual: vec![m.nrows(), m.ncols()],
        });
    }
    if ms.alpha == [0] {
        return DenseTensor::from_vec(ms.shape.clone(), m.as_slice().to_vec());
    }
    let strides = ms.strides();
    Ok(DenseTensor::from_fn(&ms.shape, |idx| {
        let (mut r, mut c) = (0, 0);
        for (&i, &(is_row, s)) in idx.iter().zip(&strides) {
            if is_row {
                r += i * s;
            } else {
                c += i * s;
            }
        }
        m[(r, c)]
    }))
}

/// Contracts `mode` of `t` with the columns of `m`: the result has
/// `m.nrows()` in slot `mode`.
pub fn mode_product(t: &DenseTensor, m: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
    if mode >= t.ndim() {
        return Err(Error::ModeOutOfRange { mode, ndim: t.ndim() });
    }
    let (before, n, after) = t.mode_blocks(mode);
    if m.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: vec![m.nrows(), n],
            actual: vec![m.nrows(), m.ncols()],
        });
    }
    let rows = m.nrows();
    let mut shape = t.shape().to_vec();
    shape[mode] = rows;
    let mut out = vec![0.0; before * rows * after];
    if before == 1 {
        // mode 0 (or trailing unit modes): one GEMM over the whole buffer
        let src = DMatrixView::from_slice(t.data(), n, after);
        let mut dst = DMatrixViewMut::from_slice(&mut out, rows, after);
        dst.gemm(1.0, m, &src, 0.0);
    } else {
        let mt = m.transpose();
        for b in 0..after {
            let src = DMatrixView::from_slice(&t.data()[b * before * n..(b + 1) * before * n], before, n);
            let mut dst =
                DMatrixViewMut::from_slice(&mut out[b * before * rows..(b + 1) * before * rows], before, rows);
            dst.gemm(1.0, &src, &mt, 0.0);
        }
    }
    Ok(DenseTensor { shape, data: out })
}
