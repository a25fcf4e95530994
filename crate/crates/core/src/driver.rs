//! The iterative recovery loop.
//!
//! Every iteration draws a fresh admissible slope and a uniform offset,
//! reads `D + 1` lines sharing the slope, removes the projection of what has
//! already been recovered from each line spectrum, and decodes every bin
//! that is left 1-sparse.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{
    construct_with_roots, decode_bin, is_one_sparse, subtract_recovered, BinGroup, DecoderTolerances,
};
use crate::error::{Error, Result};
use crate::lines::{decoding_offsets, extract_line, LineParams};
use crate::numtheory::{bin_of_frequency, sample_slope};
use crate::shape::CubeShape;
use crate::source::{CountingSource, SignalSource};
use crate::spectrum::{Sinusoid, SparseSpectrum};
use crate::transform::{plan, DftPlan, Spectrum1D, UnitRoots};

/// Floor applied to the default iteration budget so that small cubes, where
/// `N / ((D + 1) L)` is 1 or 2, still get enough random slopes.
pub const MIN_DEFAULT_ITERATIONS: usize = 32;

/// How the projection of the recovered set is removed from a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtractionPath {
    /// Subtract the constructed bins from the line DFT directly.
    #[default]
    Frequency,
    /// Rebuild the line samples by IDFT, subtract them, then transform.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpsSftConfig {
    /// `None` selects `max(N / ((D + 1) L), MIN_DEFAULT_ITERATIONS)`.
    pub max_iterations: Option<usize>,
    pub stall_limit: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub tolerances: DecoderTolerances,
    pub residual_stop: f64,
    pub subtraction: SubtractionPath,
}

impl Default for FpsSftConfig {
    fn default() -> Self {
        FpsSftConfig {
            max_iterations: None,
            stall_limit: 3,
            seed: 0,
            tolerances: DecoderTolerances::default(),
            residual_stop: 1e-9,
            subtraction: SubtractionPath::Frequency,
        }
    }
}

impl FpsSftConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, t_max: usize) -> Self {
        self.max_iterations = Some(t_max);
        self
    }

    pub fn with_stall_limit(mut self, stall_limit: usize) -> Self {
        self.stall_limit = stall_limit;
        self
    }

    pub fn resolved_max_iterations(&self, shape: &CubeShape) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let per_iteration = (shape.ndim() + 1) * shape.line_len();
            (shape.n_total() / per_iteration).max(MIN_DEFAULT_ITERATIONS)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == Some(0) {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.stall_limit == 0 {
            return Err(Error::Config("stall_limit must be at least 1".into()));
        }
        if !(self.residual_stop > 0.0 && self.residual_stop.is_finite()) {
            return Err(Error::Config("residual_stop must be positive".into()));
        }
        self.tolerances.validate().map_err(Error::Config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualClean,
    Stall,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub alpha: Vec<usize>,
    pub tau: Vec<usize>,
    /// Bins whose base value exceeded the empty-bin floor.
    pub occupied_bins: usize,
    /// Bins that passed the magnitude test.
    pub one_sparse_bins: usize,
    /// 1-sparse bins whose decoding was rejected.
    pub rejected: usize,
    pub accepted: Vec<Sinusoid>,
    pub recovered_total: usize,
    pub residual_energy: f64,
    pub wall_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub algorithm: String,
    pub shape: CubeShape,
    pub iterations_run: usize,
    pub samples_used: u64,
    /// Samples one iteration reads.
    pub samples_per_iteration: u64,
    pub terminated_by: Termination,
    pub recovered: SparseSpectrum,
    pub log: Vec<IterationLog>,
    pub wall_ms: f64,
}

impl RecoveryReport {
    pub fn percent_samples(&self) -> f64 {
        100.0 * self.samples_used as f64 / self.shape.n_total() as f64
    }
}

/// One recovery run, advanced an iteration at a time.
pub struct FpsSft<'s> {
    source: CountingSource<&'s dyn SignalSource>,
    shape: CubeShape,
    config: FpsSftConfig,
    t_max: usize,
    rng: ChaCha8Rng,
    roots: UnitRoots,
    plan: std::sync::Arc<DftPlan>,
    recovered: SparseSpectrum,
    log: Vec<IterationLog>,
    stall: usize,
    terminated: Option<Termination>,
    started: Instant,
}

impl<'s> FpsSft<'s> {
    pub fn new(source: &'s dyn SignalSource, config: FpsSftConfig) -> Result<Self> {
        config.validate()?;
        let shape = source.shape().clone();
        let line_len = shape.line_len();
        Ok(FpsSft {
            t_max: config.resolved_max_iterations(&shape),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            roots: UnitRoots::new(line_len),
            plan: plan(line_len),
            recovered: SparseSpectrum::new(shape.clone()),
            source: CountingSource::new(source),
            shape,
            config,
            log: Vec::new(),
            stall: 0,
            terminated: None,
            started: Instant::now(),
        })
    }

    pub fn recovered(&self) -> &SparseSpectrum {
        &self.recovered
    }

    pub fn terminated(&self) -> Option<Termination> {
        self.terminated
    }

    pub fn iterations_run(&self) -> usize {
        self.log.len()
    }

    pub fn samples_used(&self) -> u64 {
        self.source.samples_read()
    }

    fn line_spectrum(&self, params: &LineParams) -> (Spectrum1D, f64) {
        let line = extract_line(&self.source, params);
        let raw_energy = line.iter().map(|v| v.norm_sqr()).sum::<f64>() / line.len() as f64;
        (self.residual_of(&line, params, self.config.subtraction), raw_energy)
    }

    fn residual_of(&self, line: &[Complex64], params: &LineParams, path: SubtractionPath) -> Spectrum1D {
        match path {
            SubtractionPath::Frequency => {
                let mut spectrum = self.plan.forward(line);
                construct_and_subtract(&self.recovered, params, &self.shape, &self.roots, &mut spectrum);
                spectrum
            }
            SubtractionPath::Time => {
                let residual = subtract_recovered(line, &self.recovered, params, &self.shape);
                self.plan.forward(&residual)
            }
        }
    }

    /// Line DFT along `params` minus the projection of the current recovered
    /// set, computed along `path`. Samples read here are not counted.
    pub fn residual_spectrum(&self, params: &LineParams, path: SubtractionPath) -> Spectrum1D {
        let line = extract_line(*self.source.inner(), params);
        self.residual_of(&line, params, path)
    }

    /// Runs one iteration. Returns `None` once the run has terminated.
    pub fn step(&mut self) -> Option<&IterationLog> {
        if self.terminated.is_some() {
            return None;
        }
        let started = Instant::now();
        let tol = self.config.tolerances;
        let alpha = sample_slope(&self.shape, &mut self.rng);
        let tau: Vec<usize> = self.shape.dims().iter().map(|&n| self.rng.gen_range(0..n)).collect();
        let offsets = decoding_offsets(&tau, &self.shape);
        let base = LineParams {
            alpha: alpha.clone(),
            tau: tau.clone(),
        };

        let mut spectra = Vec::with_capacity(offsets.len());
        let mut raw_energy = 0.0;
        for offset in &offsets {
            let (spectrum, energy) = self.line_spectrum(&base.with_tau(offset.clone()));
            spectra.push(spectrum);
            raw_energy += energy;
        }

        let floor = tol.floor(self.recovered.l1_norm());
        let mut occupied_bins = 0;
        let mut one_sparse_bins = 0;
        let mut rejected = 0;
        let mut accepted = Vec::new();
        let mut group = BinGroup {
            bin: 0,
            values: Vec::with_capacity(spectra.len()),
        };
        for bin in 0..self.shape.line_len() {
            if spectra[0][bin].norm() <= floor {
                continue;
            }
            group.bin = bin;
            group.values.clear();
            group.values.extend(spectra.iter().map(|s| s[bin]));
            occupied_bins += 1;
            if !is_one_sparse(&group, tol.mag_tol, floor) {
                continue;
            }
            one_sparse_bins += 1;
            match decode_bin(&group, &tau, &self.shape, &tol) {
                Some(sinusoid) => accepted.push(sinusoid),
                None => rejected += 1,
            }
        }

        for sinusoid in &accepted {
            self.recovered
                .accumulate(sinusoid.freq.clone(), sinusoid.amp, tol.amp_prune_tol)
                .expect("decoded frequencies lie on the grid");
            let bin = bin_of_frequency(&sinusoid.freq, &alpha, &self.shape);
            for (spectrum, offset) in spectra.iter_mut().zip(&offsets) {
                spectrum[bin] -= sinusoid.amp * self.roots.get(self.shape.phase_turns(&sinusoid.freq, offset));
            }
        }

        let floor_after = tol.floor(self.recovered.l1_norm());
        let mut residual_energy = 0.0;
        let mut residual_peak: f64 = 0.0;
        for spectrum in &spectra {
            for v in spectrum.iter() {
                residual_energy += v.norm_sqr();
                residual_peak = residual_peak.max(v.norm());
            }
        }
        let clean = residual_peak <= floor_after || residual_energy <= self.config.residual_stop * raw_energy;

        if accepted.is_empty() {
            self.stall += 1;
        } else {
            self.stall = 0;
        }

        self.log.push(IterationLog {
            iteration: self.log.len() + 1,
            alpha: alpha.into_inner(),
            tau,
            occupied_bins,
            one_sparse_bins,
            rejected,
            accepted,
            recovered_total: self.recovered.len(),
            residual_energy,
            wall_us: started.elapsed().as_micros() as u64,
        });

        self.terminated = if clean {
            Some(Termination::ResidualClean)
        } else if self.stall >= self.config.stall_limit {
            Some(Termination::Stall)
        } else if self.log.len() >= self.t_max {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        self.log.last()
    }

    pub fn finish(self) -> RecoveryReport {
        let samples_per_iteration = ((self.shape.ndim() + 1) * self.shape.line_len()) as u64;
        RecoveryReport {
            algorithm: "fps".into(),
            iterations_run: self.log.len(),
            samples_used: self.source.samples_read(),
            samples_per_iteration,
            terminated_by: self.terminated.unwrap_or(Termination::MaxIterations),
            recovered: self.recovered,
            log: self.log,
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
            shape: self.shape,
        }
    }
}

fn construct_and_subtract(
    recovered: &SparseSpectrum,
    params: &LineParams,
    shape: &CubeShape,
    roots: &UnitRoots,
    spectrum: &mut [Complex64],
) {
    let mut constructed = vec![Complex64::new(0.0, 0.0); spectrum.len()];
    construct_with_roots(recovered, &params.alpha, &params.tau, shape, roots, &mut constructed);
    for (s, c) in spectrum.iter_mut().zip(&constructed) {
        *s -= c;
    }
}

/// Runs the recovery loop to termination.
pub fn fps_sft(source: &dyn SignalSource, config: &FpsSftConfig) -> Result<RecoveryReport> {
    fps_sft_observed(source, config, |_, _| {})
}

/// Like [`fps_sft`], calling `observer` with each iteration's log and the
/// recovered set after that iteration.
pub fn fps_sft_observed(
    source: &dyn SignalSource,
    config: &FpsSftConfig,
    mut observer: impl FnMut(&IterationLog, &SparseSpectrum),
) -> Result<RecoveryReport> {
    let mut run = FpsSft::new(source, config.clone())?;
    while run.step().is_some() {
        let log = run.log.last().expect("step pushed a log entry");
        observer(log, &run.recovered);
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SyntheticSource;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spectrum(dims: &[usize], entries: &[([usize; 2], Complex64)]) -> SparseSpectrum {
        SparseSpectrum::from_entries(CubeShape::new(dims.to_vec()).unwrap(), entries.iter().cloned()).unwrap()
    }

    #[test]
    fn dc_only_takes_one_iteration() {
        let truth = spectrum(&[8, 8], &[([0, 0], c(3.0, 0.0))]);
        let src = SyntheticSource::new(truth.clone());
        let report = fps_sft(&src, &FpsSftConfig::default()).unwrap();
        assert_eq!(report.iterations_run, 1);
        assert_eq!(report.terminated_by, Termination::ResidualClean);
        assert!(report.recovered.matches(&truth, 1e-12));
        assert_eq!(report.samples_used, 3 * 8);
    }

    #[test]
    fn zero_signal_is_clean_immediately() {
        let truth = SparseSpectrum::new(CubeShape::new(vec![4, 6]).unwrap());
        let report = fps_sft(&SyntheticSource::new(truth), &FpsSftConfig::default()).unwrap();
        assert_eq!(report.iterations_run, 1);
        assert!(report.recovered.is_empty());
        assert_eq!(report.terminated_by, Termination::ResidualClean);
    }

    #[test]
    fn rectangle_deadlock_is_resolved() {
        let truth = spectrum(
            &[8, 8],
            &[
                ([2, 2], c(1.0, 0.0)),
                ([2, 5], c(1.0, 0.0)),
                ([5, 2], c(1.0, 0.0)),
                ([5, 5], c(1.0, 0.0)),
            ],
        );
        let src = SyntheticSource::new(truth.clone());
        let report = fps_sft(&src, &FpsSftConfig::default().with_seed(1)).unwrap();
        assert!(report.recovered.matches(&truth, 1e-9));
    }

    #[test]
    fn parallelogram_of_half_periods_defeats_every_slope() {
        // Offsets (4,0), (0,4) and (4,4) each vanish under a different class
        // of admissible slopes, so every line pairs the four up.
        let s = CubeShape::new(vec![8, 8]).unwrap();
        let freqs = [[1, 2], [5, 2], [1, 6], [5, 6]];
        for alpha in crate::numtheory::enumerate_slopes(&s) {
            let bins: Vec<usize> = freqs.iter().map(|m| bin_of_frequency(m, &alpha, &s)).collect();
            for b in &bins {
                assert!(bins.iter().filter(|&x| x == b).count() >= 2, "{alpha:?}");
            }
        }
        let truth = spectrum(&[8, 8], &freqs.map(|m| (m, c(1.0, 0.0))));
        let report = fps_sft(&SyntheticSource::new(truth), &FpsSftConfig::default()).unwrap();
        assert!(report.recovered.is_empty());
        assert_eq!(report.terminated_by, Termination::Stall);
    }

    #[test]
    fn paths_agree_and_runs_are_deterministic() {
        let truth = spectrum(
            &[12, 8],
            &[
                ([1, 2], c(1.0, 0.4)),
                ([11, 7], c(-0.3, 1.0)),
                ([4, 4], c(0.7, -0.7)),
                ([6, 1], c(0.0, 2.0)),
                ([9, 5], c(1.1, 0.0)),
            ],
        );
        let src = SyntheticSource::new(truth.clone());
        let freq = FpsSftConfig::default().with_seed(77);
        let time = FpsSftConfig {
            subtraction: SubtractionPath::Time,
            ..freq.clone()
        };
        let a = fps_sft(&src, &freq).unwrap();
        let b = fps_sft(&src, &time).unwrap();
        let again = fps_sft(&src, &freq).unwrap();
        assert_eq!(a.iterations_run, b.iterations_run);
        assert_eq!(a.recovered.len(), b.recovered.len());
        assert_eq!(a.recovered, again.recovered);
        assert_eq!(a.iterations_run, again.iterations_run);
        assert!(a.recovered.matches(&truth, 1e-9));
    }

    #[test]
    fn default_budget() {
        let cfg = FpsSftConfig::default();
        assert_eq!(
            cfg.resolved_max_iterations(&CubeShape::new(vec![256, 256]).unwrap()),
            85
        );
        assert_eq!(
            cfg.resolved_max_iterations(&CubeShape::new(vec![8, 8]).unwrap()),
            MIN_DEFAULT_ITERATIONS
        );
        assert_eq!(
            cfg.clone()
                .with_max_iterations(5)
                .resolved_max_iterations(&CubeShape::new(vec![8, 8]).unwrap()),
            5
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let src = SyntheticSource::new(SparseSpectrum::new(CubeShape::new(vec![4]).unwrap()));
        assert!(fps_sft(&src, &FpsSftConfig::default().with_max_iterations(0)).is_err());
        assert!(fps_sft(&src, &FpsSftConfig::default().with_stall_limit(0)).is_err());
    }

    #[test]
    fn config_reads_flat_toml() {
        let cfg: FpsSftConfig =
            toml::from_str("max_iterations = 40\nseed = 9\nmag_tol = 1e-5\nsubtraction = \"time\"\n").unwrap();
        assert_eq!(cfg.max_iterations, Some(40));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tolerances.mag_tol, 1e-5);
        assert_eq!(cfg.tolerances.verify_tol, 1e-6);
        assert_eq!(cfg.subtraction, SubtractionPath::Time);
    }
}
