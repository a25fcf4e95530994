//! Sample oracles: everything the recovery algorithms read goes through
//! [`SignalSource`], which makes sample counting exact.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::shape::CubeShape;
use crate::spectrum::SparseSpectrum;
use crate::transform::UnitRoots;

/// Pure map from a grid index `n` to the signal value `x(n)`.
pub trait SignalSource: Send + Sync {
    fn shape(&self) -> &CubeShape;

    /// `n` must be a valid index of [`SignalSource::shape`].
    fn sample(&self, n: &[usize]) -> Complex64;
}

impl<S: SignalSource + ?Sized> SignalSource for &S {
    fn shape(&self) -> &CubeShape {
        (**self).shape()
    }

    fn sample(&self, n: &[usize]) -> Complex64 {
        (**self).sample(n)
    }
}

/// Lazily evaluated mixture `x(n) = sum a exp(j 2 pi sum_k n_k m_k / N_k)`.
///
/// Each sinusoid is stored as its per-dimension phase weight on the common
/// `[L]` scale, so evaluating one term is an integer dot product followed by
/// a table lookup of the exact root of unity.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    shape: CubeShape,
    spectrum: SparseSpectrum,
    amps: Vec<Complex64>,
    weights: Vec<u64>,
    roots: UnitRoots,
    wide: bool,
}

impl SyntheticSource {
    pub fn new(spectrum: SparseSpectrum) -> Self {
        let shape = spectrum.shape().clone();
        let d = shape.ndim();
        let l = shape.line_len() as u64;
        let mut amps = Vec::with_capacity(spectrum.len());
        let mut weights = Vec::with_capacity(spectrum.len() * d);
        for (freq, amp) in spectrum.iter() {
            amps.push(amp);
            for (k, &m) in freq.iter().enumerate() {
                weights.push((shape.stride(k) as u128 * m as u128 % l as u128) as u64);
            }
        }
        let wide = (d as u128) * (l as u128) * (l as u128) >= u64::MAX as u128;
        SyntheticSource {
            roots: UnitRoots::new(shape.line_len()),
            shape,
            spectrum,
            amps,
            weights,
            wide,
        }
    }

    pub fn spectrum(&self) -> &SparseSpectrum {
        &self.spectrum
    }

    #[inline]
    fn turns(&self, w: &[u64], n: &[usize]) -> usize {
        let l = self.shape.line_len() as u64;
        if self.wide {
            let acc = w
                .iter()
                .zip(n)
                .fold(0u128, |acc, (&w, &n)| (acc + w as u128 * n as u128) % l as u128);
            return acc as usize;
        }
        let acc: u64 = w.iter().zip(n).map(|(&w, &n)| w * n as u64).sum();
        if l.is_power_of_two() {
            (acc & (l - 1)) as usize
        } else {
            (acc % l) as usize
        }
    }
}

impl SignalSource for SyntheticSource {
    fn shape(&self) -> &CubeShape {
        &self.shape
    }

    fn sample(&self, n: &[usize]) -> Complex64 {
        let d = self.shape.ndim();
        let mut acc = Complex64::new(0.0, 0.0);
        for (amp, w) in self.amps.iter().zip(self.weights.chunks_exact(d)) {
            acc += amp * self.roots.get(self.turns(w, n));
        }
        acc
    }
}

/// A fully materialized cube in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCube {
    shape: CubeShape,
    data: Vec<Complex64>,
}

impl DenseCube {
    pub fn new(shape: CubeShape, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.n_total() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {shape}", shape.n_total()),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(DenseCube { shape, data })
    }

    pub fn zeros(shape: CubeShape) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); shape.n_total()];
        DenseCube { shape, data }
    }

    /// Evaluates `source` on every grid point.
    pub fn from_source(source: &dyn SignalSource) -> Self {
        let shape = source.shape().clone();
        let data = shape.grid().map(|n| source.sample(&n)).collect();
        DenseCube { shape, data }
    }

    pub fn shape(&self) -> &CubeShape {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, n: &[usize]) -> Complex64 {
        self.data[self.shape.ravel(n)]
    }
}

impl SignalSource for DenseCube {
    fn shape(&self) -> &CubeShape {
        &self.shape
    }

    fn sample(&self, n: &[usize]) -> Complex64 {
        self.get(n)
    }
}

/// Wraps a source and counts every sample read through it.
pub struct CountingSource<S> {
    inner: S,
    count: AtomicU64,
}

impl<S: SignalSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        CountingSource {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn samples_read(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: SignalSource> SignalSource for CountingSource<S> {
    fn shape(&self) -> &CubeShape {
        self.inner.shape()
    }

    fn sample(&self, n: &[usize]) -> Complex64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.sample(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spectrum(dims: &[usize], entries: &[(&[usize], Complex64)]) -> SparseSpectrum {
        let shape = CubeShape::new(dims.to_vec()).unwrap();
        SparseSpectrum::from_entries(shape, entries.iter().map(|(m, a)| (m.to_vec(), *a))).unwrap()
    }

    #[test]
    fn synthetic_examples() {
        let dc = SyntheticSource::new(spectrum(&[4, 4], &[(&[0, 0], c(1.0, 0.0))]));
        assert!((dc.sample(&[2, 3]) - c(1.0, 0.0)).norm() < 1e-15);

        let step = SyntheticSource::new(spectrum(&[4, 4], &[(&[1, 0], c(1.0, 0.0))]));
        assert!((step.sample(&[1, 0]) - c(0.0, 1.0)).norm() < 1e-15);

        let tone = SyntheticSource::new(spectrum(&[8, 8], &[(&[2, 3], c(0.0, 2.0))]));
        let want = c(0.0, 2.0) * Complex64::from_polar(1.0, 5.0 * PI / 4.0);
        assert!((tone.sample(&[1, 1]) - want).norm() < 1e-15);
    }

    #[test]
    fn dense_lookup() {
        let shape = CubeShape::new(vec![2, 2]).unwrap();
        let cube = DenseCube::new(shape.clone(), vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert_eq!(cube.sample(&[1, 0]), c(3.0, 0.0));
        assert_eq!(cube.sample(&[0, 1]), c(2.0, 0.0));
        assert!(matches!(
            DenseCube::new(shape, vec![c(1.0, 0.0)]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn counting_wrapper_counts() {
        let src = SyntheticSource::new(spectrum(&[4, 4], &[(&[1, 1], c(1.0, 0.0))]));
        let counted = CountingSource::new(&src);
        for n in counted.shape().clone().grid() {
            assert_eq!(counted.sample(&n), src.sample(&n));
        }
        assert_eq!(counted.samples_read(), 16);
    }
}
