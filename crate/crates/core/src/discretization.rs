//! Discrete model of `L²(Ω_j)` per axis and of functions on tensor grids.
//!
//! Every axis uses the single scheme [`Scheme::UniformTrapezoidFd2`]: a
//! uniform grid, composite trapezoid weights, second-order central
//! differences inside and the 3-point one-sided second-order stencil at both
//! endpoints. No boundary conditions are imposed.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{increment_colex, DenseTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    UniformTrapezoidFd2,
}

/// Nodes, quadrature weights and differentiation matrix of one dimension.
#[derive(Clone, Debug)]
pub struct Axis {
    lower: f64,
    upper: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diff: DMatrix<f64>,
    // nonzeros of each diff row: (column, coefficient)
    stencil: Vec<[(usize, f64); 3]>,
    scheme: Scheme,
}

impl PartialEq for Axis {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
            && self.upper == other.upper
            && self.nodes.len() == other.nodes.len()
            && self.scheme == other.scheme
    }
}

pub fn make_axis(n: usize, lower: f64, upper: f64) -> Result<Axis> {
    if n < 3 {
        return Err(Error::InvalidAxis(format!("need at least 3 nodes, got {n}")));
    }
    if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
        return Err(Error::InvalidAxis(format!("empty interval [{lower}, {upper}]")));
    }
    if !(upper - lower).is_finite() {
        return Err(Error::InvalidAxis(format!("interval [{lower}, {upper}] is too wide")));
    }
    let h = (upper - lower) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| lower + i as f64 * h).collect();
    nodes[n - 1] = upper;
    let mut weights = vec![h; n];
    weights[0] = h / 2.0;
    weights[n - 1] = h / 2.0;

    let c = 1.0 / (2.0 * h);
    let mut stencil = Vec::with_capacity(n);
    stencil.push([(0, -3.0 * c), (1, 4.0 * c), (2, -c)]);
    for i in 1..n - 1 {
        stencil.push([(i - 1, -c), (i, 0.0), (i + 1, c)]);
    }
    stencil.push([(n - 3, c), (n - 2, -4.0 * c), (n - 1, 3.0 * c)]);
    let mut diff = DMatrix::zeros(n, n);
    for (i, row) in stencil.iter().enumerate() {
        for &(j, v) in row {
            diff[(i, j)] = v;
        }
    }
    Ok(Axis {
        lower,
        upper,
        nodes,
        weights,
        diff,
        stencil,
        scheme: Scheme::UniformTrapezoidFd2,
    })
}

impl Axis {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.len() - 1) as f64
    }

    /// `diff_matrix · v`, using only the stencil nonzeros.
    pub fn differentiate(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.len());
        self.stencil
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * v[j]).sum())
            .collect()
    }

    /// Weighted inner product of two vectors on this axis.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub(crate) fn stencil(&self) -> &[[(usize, f64); 3]] {
        &self.stencil
    }
}

/// Samples of a function on a tensor grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    axes: Vec<Arc<Axis>>,
    values: DenseTensor,
}

impl GridFunction {
    pub fn new(axes: Vec<Arc<Axis>>, values: DenseTensor) -> Result<Self> {
        let expected: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        if expected != values.shape() {
            return Err(Error::ShapeMismatch {
                expected,
                actual: values.shape().to_vec(),
            });
        }
        if values.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(Self { axes, values })
    }

    pub fn zeros(axes: Vec<Arc<Axis>>) -> Self {
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        Self {
            axes,
            values: DenseTensor::zeros(&shape),
        }
    }

    pub fn axes(&self) -> &[Arc<Axis>] {
        &self.axes
    }

    pub fn axis(&self, mode: usize) -> &Axis {
        &self.axes[mode]
    }

    pub fn values(&self) -> &DenseTensor {
        &self.values
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    /// Same axes, new values.
    pub fn with_values(&self, values: DenseTensor) -> Result<GridFunction> {
        GridFunction::new(self.axes.clone(), values)
    }

    pub fn same_axes(&self, other: &GridFunction) -> bool {
        self.axes.len() == other.axes.len() && self.axes.iter().zip(&other.axes).all(|(a, b)| a == b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_axes(other) {
            return Err(Error::AxisMismatch);
        }
        Ok(GridFunction {
            axes: self.axes.clone(),
            values: self.values.sub(&other.values)?,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_axes(other) {
            return Err(Error::AxisMismatch);
        }
        Ok(GridFunction {
            axes: self.axes.clone(),
            values: self.values.add(&other.values)?,
        })
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            axes: self.axes.clone(),
            values: self.values.scaled(c),
        }
    }

    /// Kronecker product of the quadrature weights of `modes`, first mode
    /// fastest (the column ordering of a matricization).
    pub fn kron_weights(&self, modes: &[usize]) -> Vec<f64> {
        let mut out = vec![1.0];
        for &m in modes {
            let w = self.axes[m].weights();
            let mut next = Vec::with_capacity(out.len() * w.len());
            for &wj in w {
                next.extend(out.iter().map(|&o| o * wj));
            }
            out = next;
        }
        out
    }
}

pub fn sample<F>(f: F, axes: &[Arc<Axis>]) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> f64,
{
    if axes.is_empty() {
        return Err(Error::InvalidAxis("no axes given".into()));
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let len: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let mut x = vec![0.0; shape.len()];
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        for (m, &i) in idx.iter().enumerate() {
            x[m] = axes[m].nodes()[i];
        }
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::Sampling {
                index: idx.clone(),
                value: v,
            });
        }
        data.push(v);
        increment_colex(&shape, &mut idx);
    }
    Ok(GridFunction {
        axes: axes.to_vec(),
        values: DenseTensor::from_vec(shape, data)?,
    })
}

/// Quadrature inner product `Σ f g Π_j w_j`.
pub fn inner_l2(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.same_axes(g) {
        return Err(Error::AxisMismatch);
    }
    Ok(weighted_sum(f, |i| f.values.data()[i] * g.values.data()[i]))
}

/// `Σ_i term(i) · W_i` over the flat colexicographic index.
pub(crate) fn weighted_sum(f: &GridFunction, term: impl Fn(usize) -> f64) -> f64 {
    let w0 = f.axes[0].weights();
    let n0 = w0.len();
    // outer weights are constant along the first mode
    let outer = f.kron_weights(&(1..f.ndim()).collect::<Vec<_>>());
    let mut total = 0.0;
    for (b, &wb) in outer.iter().enumerate() {
        let mut s = 0.0;
        for (a, &wa) in w0.iter().enumerate() {
            s += wa * term(a + n0 * b);
        }
        total += wb * s;
    }
    total
}

/// Applies the mode-`j` differentiation matrix along mode `j`.
pub fn partial_derivative(f: &GridFunction, mode: usize) -> Result<GridFunction> {
    if mode >= f.ndim() {
        return Err(Error::ModeOutOfRange { mode, ndim: f.ndim() });
    }
    let values = differentiate_tensor(&f.values, f.axis(mode), mode);
    Ok(GridFunction {
        axes: f.axes.clone(),
        values,
    })
}

pub(crate) fn differentiate_tensor(t: &DenseTensor, axis: &Axis, mode: usize) -> DenseTensor {
    let (before, n, after) = t.mode_blocks(mode);
    debug_assert_eq!(n, axis.len());
    let src = t.data();
    let mut out = vec![0.0; src.len()];
    for b in 0..after {
        let base = b * before * n;
        for (i, row) in axis.stencil().iter().enumerate() {
            let dst = &mut out[base + i * before..base + (i + 1) * before];
            for &(j, c) in row {
                if c == 0.0 {
                    continue;
                }
                let s = &src[base + j * before..base + (j + 1) * before];
                for (o, &v) in dst.iter_mut().zip(s) {
                    *o += c * v;
                }
            }
        }
    }
    DenseTensor::from_vec(t.shape().to_vec(), out).expect("derivative of finite data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn axes(ns: &[usize]) -> Vec<Arc<Axis>> {
        ns.iter().map(|&n| Arc::new(make_axis(n, 0.0, 1.0).unwrap())).collect()
    }

    #[test]
    fn three_node_trapezoid_weights() {
        let a = make_axis(3, 0.0, 1.0).unwrap();
        assert_eq!(a.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(a.nodes(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for (n, lo, hi) in [(5, 0.0, 1.0), (101, -2.0, 3.5), (7, 1e3, 1e3 + 0.1)] {
            let a = make_axis(n, lo, hi).unwrap();
            let s: f64 = a.weights().iter().sum();
            assert!(((s - (hi - lo)) / (hi - lo)).abs() < 1e-14, "{s}");
            assert!(a.weights().iter().all(|&w| w > 0.0));
            assert_eq!(a.nodes()[0], lo);
            assert_eq!(a.nodes()[n - 1], hi);
            assert!(a.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(matches!(make_axis(2, 0.0, 1.0), Err(Error::InvalidAxis(_))));
        assert!(matches!(make_axis(5, 1.0, 1.0), Err(Error::InvalidAxis(_))));
        assert!(matches!(make_axis(5, 2.0, 1.0), Err(Error::InvalidAxis(_))));
        assert!(make_axis(5, 0.0, f64::NAN).is_err());
        assert!(make_axis(5, -1e308, 1e308).is_err());
    }

    #[test]
    fn diff_matrix_exact_on_quadratics() {
        let a = make_axis(101, 0.0, 1.0).unwrap();
        let f: Vec<f64> = a.nodes().iter().map(|x| x * x).collect();
        let dense = a.diff_matrix() * nalgebra::DVector::from_column_slice(&f);
        let sparse = a.differentiate(&f);
        for (i, &x) in a.nodes().iter().enumerate() {
            assert!((dense[i] - 2.0 * x).abs() <= 1e-12, "node {i}");
            assert!((sparse[i] - dense[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampling_examples() {
        let g = sample(|x| x[0] * x[1], &axes(&[3, 3])).unwrap();
        assert_eq!(g.values().get(&[2, 2]), 1.0);
        assert_eq!(g.values().get(&[0, 2]), 0.0);
        assert_eq!(g.values().get(&[1, 2]), 0.5);

        let ones = sample(|_| 1.0, &axes(&[4, 3, 5])).unwrap();
        assert!(ones.values().data().iter().all(|&v| v == 1.0));

        let s = sample(|x| (PI * x[0]).sin() * (PI * x[1]).sin(), &axes(&[65, 65])).unwrap();
        assert!((s.values().get(&[32, 32]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_reports_offending_index() {
        let err = sample(|x| if x[0] > 0.7 { f64::NAN } else { 0.0 }, &axes(&[5])).unwrap_err();
        assert!(matches!(err, Error::Sampling { ref index, .. } if index == &vec![3]));
        assert!(sample(|_| 0.0, &[]).is_err());
    }

    #[test]
    fn inner_products() {
        let one = sample(|_| 1.0, &axes(&[9, 17])).unwrap();
        assert!((inner_l2(&one, &one).unwrap() - 1.0).abs() < 1e-14);

        let ax = axes(&[513]);
        let s1 = sample(|x| (PI * x[0]).sin(), &ax).unwrap();
        let s2 = sample(|x| (2.0 * PI * x[0]).sin(), &ax).unwrap();
        assert!((inner_l2(&s1, &s1).unwrap() - 0.5).abs() < 1e-5);
        assert!(inner_l2(&s1, &s2).unwrap().abs() < 1e-5);

        let other = sample(|_| 1.0, &axes(&[9, 9])).unwrap();
        assert_eq!(inner_l2(&one, &other), Err(Error::AxisMismatch));
    }

    #[test]
    fn trapezoid_exact_on_linear_products() {
        let ax = axes(&[7, 11]);
        let f = sample(|x| 2.0 * x[0] - 1.0, &ax).unwrap();
        let g = sample(|x| 3.0 + x[1], &ax).unwrap();
        // ∫∫ (2x-1)(3+y) = 0
        assert!(inner_l2(&f, &g).unwrap().abs() < 1e-12);
        let h = sample(|x| x[0] + x[1], &ax).unwrap();
        let one = sample(|_| 1.0, &ax).unwrap();
        assert!((inner_l2(&h, &one).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_derivatives() {
        let ax = axes(&[9, 13]);
        let f = sample(|x| x[0], &ax).unwrap();
        let d0 = partial_derivative(&f, 0).unwrap();
        let d1 = partial_derivative(&f, 1).unwrap();
        assert!(d0.values().data().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(d1.values().data().iter().all(|v| v.abs() < 1e-12));
        assert!(partial_derivative(&f, 2).is_err());

        let ax = axes(&[201]);
        let s = sample(|x| (PI * x[0]).sin(), &ax).unwrap();
        let ds = partial_derivative(&s, 0).unwrap();
        for (i, &x) in ax[0].nodes().iter().enumerate() {
            assert!((ds.values().data()[i] - PI * (PI * x).cos()).abs() <= 1e-3);
        }
    }

    #[test]
    fn derivative_along_middle_mode_matches_dense_matrix() {
        let ax = axes(&[4, 6, 5]);
        let f = sample(|x| (x[0] + 1.0) * (3.0 * x[1]).sin() * x[2].exp(), &ax).unwrap();
        let d = partial_derivative(&f, 1).unwrap();
        let dense = crate::tensor::mode_product(f.values(), ax[1].diff_matrix(), 1).unwrap();
        let diff = d.values().sub(&dense).unwrap();
        assert!(diff.max_abs() < 1e-12);
    }
}
