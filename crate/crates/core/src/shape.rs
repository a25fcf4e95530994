use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numtheory::lcm_all;

/// Extents `[N_0, .., N_{D-1}]` of a data cube together with the derived
/// sample count `N` and line length `L = lcm(N_0, .., N_{D-1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeShape {
    dims: Vec<usize>,
    n_total: usize,
    line_len: usize,
}

impl CubeShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one dimension is required".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero extent in {dims:?}")));
        }
        let n_total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::Overflow("sample count"))?;
        let line_len = lcm_all(&dims)?;
        Ok(CubeShape {
            dims,
            n_total,
            line_len,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of grid points `N`.
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Line length `L`.
    pub fn line_len(&self) -> usize {
        self.line_len
    }

    /// `L / N_k`, the factor that puts dimension `k` on the common `[L]` scale.
    pub fn stride(&self, k: usize) -> usize {
        self.line_len / self.dims[k]
    }

    /// Number of frequencies sharing one line-DFT bin, `N / L`.
    pub fn fiber_size(&self) -> usize {
        self.n_total / self.line_len
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        index.len() == self.dims.len() && index.iter().zip(&self.dims).all(|(&i, &n)| i < n)
    }

    pub fn check_index(&self, index: &[usize]) -> Result<()> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.to_string(),
            })
        }
    }

    /// Row-major flat offset (last dimension fastest).
    pub fn ravel(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &n) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % n;
            flat /= n;
        }
        out
    }

    /// All grid points in row-major order.
    pub fn grid(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n_total).map(move |flat| self.unravel(flat))
    }

    /// `sum_k m_k * n_k / N_k` expressed in units of `1/L`, reduced mod `L`.
    pub fn phase_turns(&self, m: &[usize], n: &[usize]) -> usize {
        let l = self.line_len as u128;
        let mut acc: u128 = 0;
        for k in 0..self.dims.len() {
            let w = self.stride(k) as u128 * m[k] as u128 % l;
            acc = (acc + w * n[k] as u128) % l;
        }
        acc as usize
    }
}

impl fmt::Display for CubeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for CubeShape {
    type Err = Error;

    /// Parses `NxM[xP...]`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .split(['x', 'X'])
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidShape(format!("cannot parse {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CubeShape::new(dims)
    }
}

impl Serialize for CubeShape {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.dims.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CubeShape {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Dims(Vec<usize>),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Dims(dims) => CubeShape::new(dims),
            Repr::Text(text) => text.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}
