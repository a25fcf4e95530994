//! Length-`L` DFTs for arbitrary `L`.
//!
//! The forward transform carries the `1/L` factor so that a unit tone lands
//! as a unit bin; the inverse carries none, making the pair an identity.
//! Plans are cached per length and shared across threads.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::ops::{Deref, DerefMut};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Bins `s_hat[m]`, `m in [L]`, of one line DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D(pub Vec<Complex64>);

impl Spectrum1D {
    pub fn zeros(len: usize) -> Self {
        Spectrum1D(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for Spectrum1D {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for Spectrum1D {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        DftPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
    }

    pub fn forward(&self, samples: &[Complex64]) -> Spectrum1D {
        let mut buf = samples.to_vec();
        self.forward_in_place(&mut buf);
        Spectrum1D(buf)
    }

    pub fn inverse(&self, bins: &[Complex64]) -> Vec<Complex64> {
        let mut buf = bins.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }
}

/// Shared plan for length `len`, created on first use.
pub fn plan(len: usize) -> Arc<DftPlan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<DftPlan>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(Default::default);
    let mut guard = plans.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    guard.entry(len).or_insert_with(|| Arc::new(DftPlan::new(len))).clone()
}

/// `s_hat[m] = (1/L) sum_l s[l] exp(-j 2 pi l m / L)`.
pub fn dft_forward(samples: &[Complex64]) -> Spectrum1D {
    plan(samples.len()).forward(samples)
}

/// `s[l] = sum_m s_hat[m] exp(j 2 pi l m / L)`.
pub fn dft_inverse(bins: &[Complex64]) -> Vec<Complex64> {
    plan(bins.len()).inverse(bins)
}

/// Table of `exp(j 2 pi t / L)` for `t in [L]`.
///
/// Lengths above [`UnitRoots::MAX_TABLE`] fall back to evaluating the
/// exponential on demand.
#[derive(Debug, Clone)]
pub struct UnitRoots {
    len: usize,
    table: Option<Vec<Complex64>>,
}

impl UnitRoots {
    pub const MAX_TABLE: usize = 1 << 22;

    pub fn new(len: usize) -> Self {
        let table = (len <= Self::MAX_TABLE).then(|| (0..len).map(|t| Self::evaluate(t, len)).collect::<Vec<_>>());
        UnitRoots { len, table }
    }

    fn evaluate(t: usize, len: usize) -> Complex64 {
        // fold into [0, 1/2] turns before calling trig to keep the argument small
        let (t, neg) = if 2 * t > len { (len - t, true) } else { (t, false) };
        let (s, c) = (TAU * t as f64 / len as f64).sin_cos();
        Complex64::new(c, if neg { -s } else { s })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `exp(j 2 pi t / L)` for `t` already reduced into `[L]`.
    #[inline]
    pub fn get(&self, t: usize) -> Complex64 {
        match &self.table {
            Some(table) => table[t],
            None => Self::evaluate(t, self.len),
        }
    }
}
