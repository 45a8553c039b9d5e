//! Combining a semantic vector with a temporal vector.
//!
//! | kind | fused vector | dim |
//! |------|--------------|-----|
//! | `VS`  | `x + y` | `d_s` |
//! | `RE`  | `x - y` | `d_s` |
//! | `EWI` | `x * y` (element-wise) | `d_s` |
//! | `FS`  | `[x, y]` | `d_s + d_t` |
//!
//! `x` is always the semantic (text) vector and `y` the temporal one. Fused
//! vectors are not normalized; relevance is their raw inner product.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionKind {
    /// Vector summation.
    Vs,
    /// Relative embedding, semantic minus temporal.
    Re,
    /// Element-wise interaction.
    Ewi,
    /// Feature stacking (concatenation).
    Fs,
}

impl FusionKind {
    pub const ALL: [FusionKind; 4] = [Self::Vs, Self::Re, Self::Ewi, Self::Fs];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vs => "vs",
            Self::Re => "re",
            Self::Ewi => "ewi",
            Self::Fs => "fs",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Self::Vs => 0,
            Self::Re => 1,
            Self::Ewi => 2,
            Self::Fs => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn fused_dim(self, semantic_dim: usize, temporal_dim: usize) -> Result<usize> {
        match self {
            Self::Fs => Ok(semantic_dim + temporal_dim),
            _ if semantic_dim == temporal_dim => Ok(semantic_dim),
            _ => Err(Error::DimMismatch(format!(
                "{self} needs equal dims, got semantic {semantic_dim} and temporal {temporal_dim}"
            ))),
        }
    }
}

impl fmt::Display for FusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for FusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vs" => Ok(Self::Vs),
            "re" => Ok(Self::Re),
            "ewi" => Ok(Self::Ewi),
            "fs" => Ok(Self::Fs),
            other => Err(Error::InvalidArgument(format!("unknown fusion kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    values: Vec<f32>,
    kind: FusionKind,
}

impl FusedVector {
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn kind(&self) -> FusionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

pub fn fuse(semantic: &[f32], temporal: &[f32], kind: FusionKind) -> Result<FusedVector> {
    if semantic.iter().chain(temporal).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fusion input"));
    }
    kind.fused_dim(semantic.len(), temporal.len())?;
    let values: Vec<f32> = match kind {
        FusionKind::Vs => semantic.iter().zip(temporal).map(|(x, y)| x + y).collect(),
        FusionKind::Re => semantic.iter().zip(temporal).map(|(x, y)| x - y).collect(),
        FusionKind::Ewi => semantic.iter().zip(temporal).map(|(x, y)| x * y).collect(),
        FusionKind::Fs => semantic.iter().chain(temporal).copied().collect(),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fused vector"));
    }
    Ok(FusedVector { values, kind })
}

/// Inner product accumulated in f64.
#[inline]
pub fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Inner product accumulated in f64, rounded to f32.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    dot_f64(a, b) as f32
}

pub fn score(query: &FusedVector, passage: &FusedVector) -> Result<f32> {
    if query.kind != passage.kind || query.dim() != passage.dim() {
        return Err(Error::DimMismatch(format!(
            "query {}:{} vs passage {}:{}",
            query.kind,
            query.dim(),
            passage.kind,
            passage.dim()
        )));
    }
    Ok(dot(&query.values, &passage.values))
}

/// f64 fusion used by the trainer; dimensions are checked by the caller.
pub(crate) fn fuse_f64(semantic: &[f64], temporal: &[f64], kind: FusionKind, out: &mut Vec<f64>) {
    out.clear();
    match kind {
        FusionKind::Vs => out.extend(semantic.iter().zip(temporal).map(|(x, y)| x + y)),
        FusionKind::Re => out.extend(semantic.iter().zip(temporal).map(|(x, y)| x - y)),
        FusionKind::Ewi => out.extend(semantic.iter().zip(temporal).map(|(x, y)| x * y)),
        FusionKind::Fs => out.extend(semantic.iter().chain(temporal)),
    }
}

/// Accumulates `weight * d<upstream, fuse(x, y)>/dy` into `grad_temporal`,
/// where `upstream` is the gradient with respect to the fused vector.
pub(crate) fn backprop_temporal(
    kind: FusionKind,
    upstream: &[f64],
    semantic: &[f64],
    weight: f64,
    grad_temporal: &mut [f64],
) {
    match kind {
        FusionKind::Vs => {
            for (g, u) in grad_temporal.iter_mut().zip(upstream) {
                *g += weight * u;
            }
        }
        FusionKind::Re => {
            for (g, u) in grad_temporal.iter_mut().zip(upstream) {
                *g -= weight * u;
            }
        }
        FusionKind::Ewi => {
            for ((g, u), x) in grad_temporal.iter_mut().zip(upstream).zip(semantic) {
                *g += weight * u * x;
            }
        }
        FusionKind::Fs => {
            let tail = &upstream[semantic.len()..];
            for (g, u) in grad_temporal.iter_mut().zip(tail) {
                *g += weight * u;
            }
        }
    }
}
