//! Raw sample files: little-endian `f64` values in colexicographic order
//! (first index fastest) plus a `<file>.meta.json` sidecar holding the shape
//! and the per-axis interval.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sobosvd_core::discretization::{make_axis, GridFunction};
use sobosvd_core::tensor::DenseTensor;
use thiserror::Error;

use crate::io_util::write_atomic;

/// Contents of the `.meta.json` sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMeta {
    pub shape: Vec<usize>,
    /// `[lower, upper]` per axis.
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed sidecar: {0}")]
    Meta(String),

    #[error("sample size mismatch: expected {expected_bytes} bytes, found {actual_bytes}")]
    SizeMismatch { expected_bytes: u64, actual_bytes: u64 },

    #[error("shape mismatch: sidecar says {found:?}, caller expects {expected:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("non-finite sample at flat offset {offset}")]
    NonFinite { offset: usize },

    #[error(transparent)]
    Core(#[from] sobosvd_core::Error),
}

impl SampleMeta {
    pub fn from_json(bytes: &[u8]) -> Result<Self, SampleError> {
        let meta: SampleMeta = serde_json::from_slice(bytes).map_err(|e| SampleError::Meta(e.to_string()))?;
        meta.validate()?;
        Ok(meta)
    }

    /// Checks the sidecar for internal consistency.
    pub fn validate(&self) -> Result<(), SampleError> {
        if self.shape.is_empty() {
            return Err(SampleError::Meta("shape must have at least one axis".into()));
        }
        if self.domain.len() != self.shape.len() {
            return Err(SampleError::Meta(format!(
                "domain lists {} intervals for {} axes",
                self.domain.len(),
                self.shape.len()
            )));
        }
        for (j, (&n, &[lo, hi])) in self.shape.iter().zip(&self.domain).enumerate() {
            if n < 3 {
                return Err(SampleError::Meta(format!(
                    "axis {} has {n} nodes, need at least 3",
                    j + 1
                )));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi && (hi - lo).is_finite()) {
                return Err(SampleError::Meta(format!(
                    "axis {} has an empty interval [{lo}, {hi}]",
                    j + 1
                )));
            }
        }
        self.expected_bytes()?;
        Ok(())
    }

    /// Byte length of the matching sample file.
    pub fn expected_bytes(&self) -> Result<u64, SampleError> {
        self.shape
            .iter()
            .try_fold(8u64, |acc, &n| acc.checked_mul(n as u64))
            .ok_or_else(|| SampleError::Meta(format!("shape {:?} overflows the addressable size", self.shape)))
    }
}

/// Path of the sidecar belonging to `path`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Decodes a raw sample buffer against its sidecar.
pub fn decode_samples(bytes: &[u8], meta: &SampleMeta) -> Result<GridFunction, SampleError> {
    meta.validate()?;
    let expected = meta.expected_bytes()?;
    if bytes.len() as u64 != expected {
        return Err(SampleError::SizeMismatch {
            expected_bytes: expected,
            actual_bytes: bytes.len() as u64,
        });
    }
    let mut data = Vec::with_capacity(bytes.len() / 8);
    for (offset, chunk) in bytes.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunks of 8"));
        if !v.is_finite() {
            return Err(SampleError::NonFinite { offset });
        }
        data.push(v);
    }
    let axes = meta
        .shape
        .iter()
        .zip(&meta.domain)
        .map(|(&n, &[lo, hi])| make_axis(n, lo, hi).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridFunction::new(
        axes,
        DenseTensor::from_vec(meta.shape.clone(), data)?,
    )?)
}

/// Reads `path` and its sidecar. With `shape` given, the sidecar must agree.
pub fn load_samples(path: &Path, shape: Option<&[usize]>) -> Result<GridFunction, SampleError> {
    let mpath = meta_path(path);
    let meta_bytes = fs::read(&mpath).map_err(|source| SampleError::Io { path: mpath, source })?;
    let meta = SampleMeta::from_json(&meta_bytes)?;
    if let Some(s) = shape {
        if s != meta.shape.as_slice() {
            return Err(SampleError::ShapeMismatch {
                expected: s.to_vec(),
                found: meta.shape,
            });
        }
    }
    let actual = fs::metadata(path)
        .map_err(|source| SampleError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .len();
    let expected = meta.expected_bytes()?;
    if actual != expected {
        return Err(SampleError::SizeMismatch {
            expected_bytes: expected,
            actual_bytes: actual,
        });
    }
    let bytes = fs::read(path).map_err(|source| SampleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_samples(&bytes, &meta)
}

/// Raw little-endian encoding of the tensor values.
pub fn encode_samples(u: &GridFunction) -> Vec<u8> {
    u.values().data().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn meta_of(u: &GridFunction) -> SampleMeta {
    SampleMeta {
        shape: u.shape().to_vec(),
        domain: u.axes().iter().map(|a| [a.lower(), a.upper()]).collect(),
    }
}

/// Writes `path` and its sidecar, each through a temporary file.
pub fn save_samples(path: &Path, u: &GridFunction) -> Result<(), SampleError> {
    let meta = serde_json::to_vec_pretty(&meta_of(u)).map_err(|e| SampleError::Meta(e.to_string()))?;
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| SampleError::Io { path: p, source }
    };
    write_atomic(path, &encode_samples(u)).map_err(io_err(path))?;
    let mpath = meta_path(path);
    write_atomic(&mpath, &meta).map_err(io_err(&mpath))?;
    Ok(())
}
