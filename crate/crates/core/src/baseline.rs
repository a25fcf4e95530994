//! Column/row comparison algorithm for square power-of-two 2-D grids.
//!
//! Each iteration takes a pair of adjacent columns, then a pair of adjacent
//! rows. A bin of a column DFT is 1-sparse only when its spectral row holds a
//! single frequency, so frequency patterns in which every occupied row and
//! column holds two or more entries can never be peeled.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{construct_with_roots, is_one_sparse, BinGroup, DecoderTolerances};
use crate::driver::{FpsSftConfig, IterationLog, RecoveryReport, Termination};
use crate::error::{Error, Result};
use crate::lines::{extract_line, LineParams};
use crate::numtheory::SlopeVector;
use crate::shape::CubeShape;
use crate::source::{CountingSource, SignalSource};
use crate::spectrum::{FreqIndex, Sinusoid, SparseSpectrum};
use crate::transform::{plan, DftPlan, Spectrum1D, UnitRoots};

pub fn check_baseline_shape(shape: &CubeShape) -> Result<()> {
    match shape.dims() {
        [a, b] if a == b && a.is_power_of_two() => Ok(()),
        _ => Err(Error::Unsupported(format!(
            "column/row baseline needs a square power-of-two 2-D grid, got {shape}"
        ))),
    }
}

struct AxisStep {
    occupied_bins: usize,
    one_sparse_bins: usize,
    rejected: usize,
    accepted: Vec<Sinusoid>,
    residual_peak: f64,
    residual_energy: f64,
    raw_energy: f64,
}

struct Baseline<'a> {
    source: CountingSource<&'a dyn SignalSource>,
    shape: CubeShape,
    tol: DecoderTolerances,
    roots: UnitRoots,
    plan: std::sync::Arc<DftPlan>,
    recovered: SparseSpectrum,
}

impl Baseline<'_> {
    /// Lines along `axis` at `tau` and at `tau` moved by one across it.
    fn step(&mut self, axis: usize, tau: &[usize]) -> AxisStep {
        let n = self.shape.dims()[0];
        let other = 1 - axis;
        let mut alpha = vec![0, 0];
        alpha[axis] = 1;
        let alpha = SlopeVector::new(alpha, &self.shape).expect("axis slopes are admissible");
        let mut shifted = tau.to_vec();
        shifted[other] = (shifted[other] + 1) % n;
        let offsets = [tau.to_vec(), shifted];

        let mut raw_energy = 0.0;
        let mut spectra: Vec<Spectrum1D> = Vec::with_capacity(2);
        for offset in &offsets {
            let params = LineParams {
                alpha: alpha.clone(),
                tau: offset.clone(),
            };
            let line = extract_line(&self.source, &params);
            raw_energy += line.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            let mut spectrum = self.plan.forward(&line);
            let mut constructed = vec![Complex64::new(0.0, 0.0); n];
            construct_with_roots(
                &self.recovered,
                &alpha,
                offset,
                &self.shape,
                &self.roots,
                &mut constructed,
            );
            for (s, c) in spectrum.iter_mut().zip(&constructed) {
                *s -= c;
            }
            spectra.push(spectrum);
        }

        let floor = self.tol.floor(self.recovered.l1_norm());
        let mut out = AxisStep {
            occupied_bins: 0,
            one_sparse_bins: 0,
            rejected: 0,
            accepted: Vec::new(),
            residual_peak: 0.0,
            residual_energy: 0.0,
            raw_energy,
        };
        for bin in 0..n {
            let group = BinGroup::gather(&spectra, bin);
            if group.values[0].norm() <= floor {
                continue;
            }
            out.occupied_bins += 1;
            if !is_one_sparse(&group, self.tol.mag_tol, floor) {
                continue;
            }
            out.one_sparse_bins += 1;
            match self.decode(&group, axis, &offsets) {
                Some(s) => out.accepted.push(s),
                None => out.rejected += 1,
            }
        }

        for s in &out.accepted {
            self.recovered
                .accumulate(s.freq.clone(), s.amp, self.tol.amp_prune_tol)
                .expect("decoded frequencies lie on the grid");
            let bin = s.freq[axis];
            for (spectrum, offset) in spectra.iter_mut().zip(&offsets) {
                spectrum[bin] -= s.amp * self.roots.get(self.shape.phase_turns(&s.freq, offset));
            }
        }
        for spectrum in &spectra {
            for v in spectrum.iter() {
                out.residual_energy += v.norm_sqr();
                out.residual_peak = out.residual_peak.max(v.norm());
            }
        }
        out
    }

    /// The bin gives the frequency along `axis`; the phase step between the
    /// two lines gives the other coordinate.
    fn decode(&self, group: &BinGroup, axis: usize, offsets: &[Vec<usize>; 2]) -> Option<Sinusoid> {
        let n = self.shape.dims()[0];
        let [v0, v1] = [group.values[0], group.values[1]];
        let x = (v1 * v0.conj()).arg() * n as f64 / std::f64::consts::TAU;
        let r = x.round();
        if (x - r).abs() > self.tol.round_tol {
            return None;
        }
        let mut freq = vec![0; 2];
        freq[axis] = group.bin;
        freq[1 - axis] = (r as i64).rem_euclid(n as i64) as usize;
        let amp = v0 * self.roots.get(self.shape.phase_turns(&freq, &offsets[0])).conj();
        for (offset, &seen) in offsets.iter().zip(&group.values) {
            let predicted = amp * self.roots.get(self.shape.phase_turns(&freq, offset));
            if (predicted - seen).norm() > self.tol.verify_tol * v0.norm() {
                return None;
            }
        }
        Some(Sinusoid {
            amp,
            freq: FreqIndex::new(freq),
        })
    }
}

/// Runs the column/row algorithm. One iteration is a column step followed
/// by a row step and reads `4 N_0` samples.
pub fn baseline_sft(source: &dyn SignalSource, config: &FpsSftConfig) -> Result<RecoveryReport> {
    config.validate()?;
    let shape = source.shape().clone();
    check_baseline_shape(&shape)?;
    let started = Instant::now();
    let n = shape.dims()[0];
    let t_max = config.resolved_max_iterations(&shape);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut run = Baseline {
        source: CountingSource::new(source),
        tol: config.tolerances,
        roots: UnitRoots::new(n),
        plan: plan(n),
        recovered: SparseSpectrum::new(shape.clone()),
        shape: shape.clone(),
    };

    let mut log = Vec::new();
    let mut stall = 0;
    let terminated_by = loop {
        let iter_started = Instant::now();
        let tau = vec![rng.gen_range(0..n), rng.gen_range(0..n)];
        let columns = run.step(0, &tau);
        let rows = run.step(1, &tau);

        let floor = run.tol.floor(run.recovered.l1_norm());
        let clean = rows.residual_peak <= floor || rows.residual_energy <= config.residual_stop * rows.raw_energy;
        let mut accepted = columns.accepted;
        accepted.extend(rows.accepted);
        if accepted.is_empty() {
            stall += 1;
        } else {
            stall = 0;
        }
        log.push(IterationLog {
            iteration: log.len() + 1,
            alpha: vec![1, 0],
            tau,
            occupied_bins: columns.occupied_bins + rows.occupied_bins,
            one_sparse_bins: columns.one_sparse_bins + rows.one_sparse_bins,
            rejected: columns.rejected + rows.rejected,
            accepted,
            recovered_total: run.recovered.len(),
            residual_energy: rows.residual_energy,
            wall_us: iter_started.elapsed().as_micros() as u64,
        });
        if clean {
            break Termination::ResidualClean;
        }
        if stall >= config.stall_limit {
            break Termination::Stall;
        }
        if log.len() >= t_max {
            break Termination::MaxIterations;
        }
    };

    Ok(RecoveryReport {
        algorithm: "baseline".into(),
        iterations_run: log.len(),
        samples_used: run.source.samples_read(),
        samples_per_iteration: 4 * n as u64,
        terminated_by,
        recovered: run.recovered,
        log,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        shape,
    })
}
