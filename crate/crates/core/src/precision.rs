//! Error-free transformations and compensated dot products.
//!
//! `dot2` returns the dot product as an unevaluated sum `hi + lo` that is as
//! accurate as if it had been computed in twice the working precision
//! (Ogita, Rump & Oishi).
//!
//! Products are split with Veltkamp/Dekker rather than `f64::mul_add`: without
//! a compile-time FMA target feature `mul_add` becomes a libm call, which was
//! measured at ~50x the cost of the split. Inputs must stay below ~1e300 in
//! magnitude for the split not to overflow.

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    // Veltkamp splitting constant 2^27 + 1
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, al * bl - (((p - ah * bh) - al * bh) - ah * bl))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

pub(crate) fn dot2(x: &[f64], y: &[f64]) -> (f64, f64) {
    debug_assert_eq!(x.len(), y.len());
    let mut p = 0.0;
    let mut s = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let (h, r) = two_prod(a, b);
        let (q, e) = two_sum(p, h);
        p = q;
        s += e + r;
    }
    if p.abs() >= s.abs() {
        fast_two_sum(p, s)
    } else {
        fast_two_sum(s, p)
    }
}
