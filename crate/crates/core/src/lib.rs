//! Quadrature-weighted SVD and HOSVD of sampled multivariate functions, with
//! the `H¹` error identities and bounds of `L²`-truncated decompositions.

pub mod cases;
pub mod diagnostics;
pub mod discretization;
pub mod error;
mod precision;
pub mod sobolev;
pub mod svd;
pub mod tensor;
pub mod truncation;

pub use error::{Error, Result};
