//! Per-bin decoding of line spectra.
//!
//! A bin shared by the `D + 1` offset lines holds `a * exp(j 2 pi m.tau_i / N)`
//! when exactly one sinusoid projects onto it. Equal magnitudes across the
//! lines flag such bins; the phase step between the base line and the line
//! shifted along dimension `k` yields `m_k`, and the base value undoes the
//! offset phase to give `a`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lines::{decoding_offsets, LineParams};
use crate::numtheory::bin_of_frequency;
use crate::shape::CubeShape;
use crate::spectrum::{FreqIndex, Sinusoid, SparseSpectrum};
use crate::transform::{dft_inverse, Spectrum1D, UnitRoots};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderTolerances {
    /// Relative spread allowed between the `D + 1` magnitudes of a bin.
    pub mag_tol: f64,
    /// Relative mismatch allowed when re-predicting a decoded bin.
    pub verify_tol: f64,
    /// Largest distance of a decoded index from the integer grid.
    pub round_tol: f64,
    /// Recovered amplitudes at or below this magnitude are dropped.
    pub amp_prune_tol: f64,
    /// Empty-bin threshold, relative to the recovered `sum |a|`.
    pub energy_floor: f64,
    /// Lower bound on the empty-bin threshold.
    pub energy_floor_abs: f64,
}

impl Default for DecoderTolerances {
    fn default() -> Self {
        DecoderTolerances {
            mag_tol: 1e-6,
            verify_tol: 1e-6,
            round_tol: 0.05,
            amp_prune_tol: 1e-9,
            energy_floor: 1e-9,
            energy_floor_abs: 1e-12,
        }
    }
}

impl DecoderTolerances {
    /// Magnitude below which a bin counts as empty, given `sum |a|` of what
    /// has been recovered so far.
    pub fn floor(&self, recovered_l1: f64) -> f64 {
        (self.energy_floor * recovered_l1).max(self.energy_floor_abs)
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("mag_tol", self.mag_tol),
            ("verify_tol", self.verify_tol),
            ("round_tol", self.round_tol),
            ("amp_prune_tol", self.amp_prune_tol),
            ("energy_floor", self.energy_floor),
            ("energy_floor_abs", self.energy_floor_abs),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.round_tol >= 0.5 {
            return Err(format!("round_tol must be below 0.5, got {}", self.round_tol));
        }
        Ok(())
    }
}

/// The same bin read from each of the `D + 1` offset lines.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGroup {
    pub bin: usize,
    pub values: Vec<Complex64>,
}

impl BinGroup {
    pub fn gather(spectra: &[Spectrum1D], bin: usize) -> Self {
        BinGroup {
            bin,
            values: spectra.iter().map(|s| s[bin]).collect(),
        }
    }
}

pub fn is_one_sparse(group: &BinGroup, mag_tol: f64, energy_floor: f64) -> bool {
    let Some(first) = group.values.first() else {
        return false;
    };
    if first.norm() <= energy_floor {
        return false;
    }
    let (lo, hi) = group
        .values
        .iter()
        .map(|v| v.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    hi - lo <= mag_tol * hi
}

#[inline]
pub(crate) fn unit_root(turns: usize, len: usize) -> Complex64 {
    let (s, c) = (TAU * turns as f64 / len as f64).sin_cos();
    Complex64::new(c, s)
}

/// Decodes the sinusoid behind a 1-sparse bin, or `None` when the phases do
/// not land on the grid or the decoded sinusoid fails to reproduce every
/// value of the group.
pub fn decode_bin(group: &BinGroup, tau: &[usize], shape: &CubeShape, tol: &DecoderTolerances) -> Option<Sinusoid> {
    let d = shape.ndim();
    if group.values.len() != d + 1 {
        return None;
    }
    let base = group.values[0];
    if base.norm() == 0.0 {
        return None;
    }
    let mut freq = Vec::with_capacity(d);
    for (k, &n) in shape.dims().iter().enumerate() {
        let step = (group.values[k + 1] * base.conj()).arg();
        let x = step * n as f64 / TAU;
        let r = x.round();
        if (x - r).abs() > tol.round_tol {
            return None;
        }
        freq.push((r as i64).rem_euclid(n as i64) as usize);
    }
    let len = shape.line_len();
    let amp = base * unit_root(shape.phase_turns(&freq, tau), len).conj();

    for (offset, &seen) in decoding_offsets(tau, shape).iter().zip(&group.values) {
        let predicted = amp * unit_root(shape.phase_turns(&freq, offset), len);
        if (predicted - seen).norm() > tol.verify_tol * base.norm() {
            return None;
        }
    }
    Some(Sinusoid {
        amp,
        freq: FreqIndex::new(freq),
    })
}

/// Projects `recovered` onto the bins of the line DFT with slope `alpha` and
/// offset `tau`.
pub fn construct_recovered_spectrum(
    recovered: &SparseSpectrum,
    alpha: &[usize],
    tau: &[usize],
    shape: &CubeShape,
) -> Spectrum1D {
    let len = shape.line_len();
    let mut out = Spectrum1D::zeros(len);
    for (freq, amp) in recovered.iter() {
        let bin = bin_of_frequency(freq, alpha, shape);
        out[bin] += amp * unit_root(shape.phase_turns(freq, tau), len);
    }
    out
}

/// Same as [`construct_recovered_spectrum`] with a shared root table.
pub(crate) fn construct_with_roots(
    recovered: &SparseSpectrum,
    alpha: &[usize],
    tau: &[usize],
    shape: &CubeShape,
    roots: &UnitRoots,
    out: &mut [Complex64],
) {
    for (freq, amp) in recovered.iter() {
        let bin = bin_of_frequency(freq, alpha, shape);
        out[bin] += amp * roots.get(shape.phase_turns(freq, tau));
    }
}

/// `line - IDFT(construct_recovered_spectrum(..))`: the samples the line
/// would hold without the already recovered sinusoids.
pub fn subtract_recovered(
    line: &[Complex64],
    recovered: &SparseSpectrum,
    params: &LineParams,
    shape: &CubeShape,
) -> Vec<Complex64> {
    let constructed = construct_recovered_spectrum(recovered, &params.alpha, &params.tau, shape);
    let rebuilt = dft_inverse(&constructed);
    line.iter().zip(&rebuilt).map(|(s, r)| s - r).collect()
}
