//! Discrete lines `l -> ([alpha_k * l + tau_k]_{N_k})_k`, `l in [L]`, through
//! the data cube and the offset pattern used to decode frequencies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::SlopeVector;
use crate::shape::CubeShape;
use crate::source::SignalSource;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineParams {
    pub alpha: SlopeVector,
    pub tau: Vec<usize>,
}

impl LineParams {
    pub fn new(alpha: SlopeVector, tau: Vec<usize>, shape: &CubeShape) -> Result<Self> {
        shape.check_index(&tau)?;
        if alpha.len() != shape.ndim() {
            return Err(Error::InvalidSlope {
                alpha: alpha.into_inner(),
                shape: shape.to_string(),
            });
        }
        Ok(LineParams { alpha, tau })
    }

    pub fn with_tau(&self, tau: Vec<usize>) -> Self {
        LineParams {
            alpha: self.alpha.clone(),
            tau,
        }
    }
}

/// Calls `f` with each index of the line in order without allocating.
///
/// Indices advance by adding `alpha` and wrapping once per dimension, which
/// gives the same sequence as multiply-and-reduce.
pub fn for_each_index(params: &LineParams, shape: &CubeShape, mut f: impl FnMut(&[usize])) {
    let dims = shape.dims();
    let mut current = params.tau.clone();
    for _ in 0..shape.line_len() {
        f(&current);
        for ((c, &a), &n) in current.iter_mut().zip(params.alpha.iter()).zip(dims) {
            *c += a;
            if *c >= n {
                *c -= n;
            }
        }
    }
}

/// All `L` indices of the line, in order.
pub fn line_indices(params: &LineParams, shape: &CubeShape) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(shape.line_len());
    for_each_index(params, shape, |n| out.push(n.to_vec()));
    out
}

/// `s[l] = x(line_indices[l])`; reads exactly `L` samples from `source`.
pub fn extract_line(source: &dyn SignalSource, params: &LineParams) -> Vec<Complex64> {
    let shape = source.shape();
    let mut out = Vec::with_capacity(shape.line_len());
    for_each_index(params, shape, |n| out.push(source.sample(n)));
    out
}

/// `tau` followed by `tau` with coordinate `i` stepped by one, for each `i`.
pub fn decoding_offsets(tau: &[usize], shape: &CubeShape) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(tau.len() + 1);
    out.push(tau.to_vec());
    for (i, &n) in shape.dims().iter().enumerate() {
        let mut shifted = tau.to_vec();
        shifted[i] = (shifted[i] + 1) % n;
        out.push(shifted);
    }
    out
}
