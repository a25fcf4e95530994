//! Ground truth and experiments: the dense multidimensional DFT, random
//! sparse spectra, and Monte Carlo sweeps over sparsity levels.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::baseline_sft;
use crate::driver::{fps_sft, FpsSftConfig, RecoveryReport, Termination};
use crate::error::{Error, Result};
use crate::shape::CubeShape;
use crate::source::{DenseCube, SyntheticSource};
use crate::spectrum::SparseSpectrum;
use crate::transform::plan;

/// Largest cube [`dense_dft`] accepts by default.
pub const DENSE_DFT_LIMIT: usize = 1 << 22;

/// Amplitude tolerance, relative to the true amplitude, for a trial to count
/// as perfect recovery.
pub const SUCCESS_REL_TOL: f64 = 1e-8;

/// `X(m) = (1/N) sum_n x(n) exp(-j 2 pi sum_k m_k n_k / N_k)`.
pub fn dense_dft(cube: &DenseCube) -> Result<DenseCube> {
    dense_dft_with_limit(cube, DENSE_DFT_LIMIT)
}

pub fn dense_dft_with_limit(cube: &DenseCube, limit: usize) -> Result<DenseCube> {
    let shape = cube.shape().clone();
    if shape.n_total() > limit {
        return Err(Error::TooLarge {
            n: shape.n_total(),
            limit,
        });
    }
    let mut data = cube.data().to_vec();
    let dims = shape.dims();
    let mut buf = Vec::new();
    for (axis, &len) in dims.iter().enumerate() {
        let stride: usize = dims[axis + 1..].iter().product();
        let outer = shape.n_total() / (len * stride);
        let fft = plan(len);
        buf.resize(len, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let start = o * len * stride + s;
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = data[start + i * stride];
                }
                // Each axis pass carries its own 1/N_k factor.
                fft.forward_in_place(&mut buf);
                for (i, b) in buf.iter().enumerate() {
                    data[start + i * stride] = *b;
                }
            }
        }
    }
    DenseCube::new(shape, data)
}

/// Entries of a dense spectrum with magnitude above `threshold`.
pub fn support_of(cube: &DenseCube, threshold: f64) -> SparseSpectrum {
    let shape = cube.shape().clone();
    let mut out = SparseSpectrum::new(shape.clone());
    for (flat, &v) in cube.data().iter().enumerate() {
        if v.norm() > threshold {
            out.insert(shape.unravel(flat), v).expect("index from the grid");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Placement {
    Uniform,
    /// Square blocks of 9 (3x3) or 25 (5x5) frequencies on a 2-D grid.
    Clustered(usize),
}

impl Placement {
    /// `k` rounded to the nearest positive multiple of the cluster size.
    pub fn round_k(self, k: usize) -> usize {
        match self {
            Placement::Uniform => k,
            Placement::Clustered(size) => ((k + size / 2) / size).max(1) * size,
        }
    }

    fn block_side(self) -> Option<usize> {
        match self {
            Placement::Uniform => None,
            Placement::Clustered(9) => Some(3),
            Placement::Clustered(25) => Some(5),
            Placement::Clustered(_) => None,
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Uniform => f.write_str("uniform"),
            Placement::Clustered(size) => write!(f, "clustered{size}"),
        }
    }
}

impl TryFrom<String> for Placement {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Placement> for String {
    fn from(p: Placement) -> String {
        p.to_string()
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "clustered9" => Ok(Placement::Clustered(9)),
            "clustered25" => Ok(Placement::Clustered(25)),
            _ => Err(Error::Config(format!(
                "unknown placement {s:?}; expected uniform, clustered9 or clustered25"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeModel {
    /// Fixed magnitude, phase uniform on `[0, 2 pi)`.
    RandomPhase { magnitude: f64 },
    /// Every sinusoid gets the same amplitude.
    Constant { re: f64, im: f64 },
}

impl Default for AmplitudeModel {
    fn default() -> Self {
        AmplitudeModel::RandomPhase { magnitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub shape: CubeShape,
    pub k: usize,
    pub placement: Placement,
    #[serde(default)]
    pub amplitudes: AmplitudeModel,
    pub seed: u64,
}

/// Redraws allowed per cluster before giving up.
const CLUSTER_RETRIES: usize = 1000;

impl GeneratorSpec {
    pub fn new(shape: CubeShape, k: usize, placement: Placement, seed: u64) -> Self {
        GeneratorSpec {
            shape,
            k,
            placement,
            amplitudes: AmplitudeModel::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > self.shape.n_total() {
            return Err(Error::Config(format!(
                "K = {} exceeds the {} points of {}",
                self.k,
                self.shape.n_total(),
                self.shape
            )));
        }
        if let Placement::Clustered(size) = self.placement {
            let side = self
                .placement
                .block_side()
                .ok_or_else(|| Error::Config(format!("cluster size must be 9 or 25, got {size}")))?;
            if self.shape.ndim() != 2 {
                return Err(Error::Config("clustered placement needs a 2-D grid".into()));
            }
            if self.shape.dims().iter().any(|&n| n < side) {
                return Err(Error::Config(format!(
                    "a {side}x{side} cluster does not fit in {}",
                    self.shape
                )));
            }
            if !self.k.is_multiple_of(size) {
                return Err(Error::Config(format!("K = {} is not a multiple of {size}", self.k)));
            }
        }
        if let AmplitudeModel::RandomPhase { magnitude } = self.amplitudes {
            if !(magnitude > 0.0 && magnitude.is_finite()) {
                return Err(Error::Config("amplitude magnitude must be positive".into()));
            }
        }
        Ok(())
    }
}

fn uniform_support(shape: &CubeShape, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    sample(rng, shape.n_total(), k)
        .into_iter()
        .map(|flat| shape.unravel(flat))
        .collect()
}

/// Block centers drawn by the clustered generator.
type Center = [usize; 2];

fn clustered_support(
    shape: &CubeShape,
    k: usize,
    side: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<usize>>, Vec<Center>)> {
    let clusters = k / (side * side);
    let [n0, n1] = [shape.dims()[0], shape.dims()[1]];
    let half = side / 2;
    let mut taken = vec![false; shape.n_total()];
    let mut out = Vec::with_capacity(k);
    let mut centers = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        let mut placed = false;
        for _ in 0..CLUSTER_RETRIES {
            let (c0, c1) = (rng.gen_range(0..n0), rng.gen_range(0..n1));
            let block: Vec<[usize; 2]> = (0..side)
                .flat_map(|i| (0..side).map(move |j| [(c0 + n0 + i - half) % n0, (c1 + n1 + j - half) % n1]))
                .collect();
            if block.iter().any(|&[a, b]| taken[a * n1 + b]) {
                continue;
            }
            for &[a, b] in &block {
                taken[a * n1 + b] = true;
                out.push(vec![a, b]);
            }
            centers.push([c0, c1]);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::InfeasiblePlacement {
                k,
                attempts: CLUSTER_RETRIES,
            });
        }
    }
    Ok((out, centers))
}

/// Draws a random sparse spectrum and the lazy source that realizes it.
pub fn generate(spec: &GeneratorSpec) -> Result<(SparseSpectrum, SyntheticSource)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let support = match spec.placement.block_side() {
        None => uniform_support(&spec.shape, spec.k, &mut rng),
        Some(side) => clustered_support(&spec.shape, spec.k, side, &mut rng)?.0,
    };
    let mut truth = SparseSpectrum::new(spec.shape.clone());
    for freq in support {
        let amp = match spec.amplitudes {
            AmplitudeModel::RandomPhase { magnitude } => {
                Complex64::from_polar(magnitude, rng.gen_range(0.0..std::f64::consts::TAU))
            }
            AmplitudeModel::Constant { re, im } => Complex64::new(re, im),
        };
        truth.insert(freq, amp)?;
    }
    let source = SyntheticSource::new(truth.clone());
    Ok((truth, source))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fps,
    Baseline,
}

impl Algorithm {
    pub fn run(self, source: &SyntheticSource, config: &FpsSftConfig) -> Result<RecoveryReport> {
        match self {
            Algorithm::Fps => fps_sft(source, config),
            Algorithm::Baseline => baseline_sft(source, config),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fps => "fps",
            Algorithm::Baseline => "baseline",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fps" => Ok(Algorithm::Fps),
            "baseline" => Ok(Algorithm::Baseline),
            _ => Err(Error::Config(format!(
                "unknown algorithm {s:?}; expected fps or baseline"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub success: bool,
    pub samples_used: u64,
    pub percent_samples: f64,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub wall_ms: f64,
}

/// splitmix64 finalizer, used to derive independent per-trial seeds.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generates one instance from `seed` and runs `algo` on it. The generator
/// and the algorithm draw from separate streams derived from `seed`.
pub fn run_trial(
    algo: Algorithm,
    shape: &CubeShape,
    k: usize,
    placement: Placement,
    seed: u64,
    config: &FpsSftConfig,
) -> Result<TrialResult> {
    let spec = GeneratorSpec::new(shape.clone(), k, placement, mix_seed(seed));
    let (truth, source) = generate(&spec)?;
    let config = config.clone().with_seed(mix_seed(seed ^ 0x5851_f42d_4c95_7f2d));
    let started = Instant::now();
    let report = algo.run(&source, &config)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(TrialResult {
        seed,
        success: report.recovered.matches(&truth, SUCCESS_REL_TOL),
        samples_used: report.samples_used,
        percent_samples: report.percent_samples(),
        iterations: report.iterations_run,
        terminated_by: report.terminated_by,
        wall_ms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub algorithms: Vec<Algorithm>,
    pub shapes: Vec<CubeShape>,
    pub ks: Vec<usize>,
    pub placements: Vec<Placement>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub config: FpsSftConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algo: Algorithm,
    pub shape: CubeShape,
    pub k: usize,
    pub placement: Placement,
    pub trials: usize,
    pub p_success: f64,
    /// Mean over successful trials; `None` when no trial succeeded.
    pub mean_percent_samples: Option<f64>,
    pub mean_iters: f64,
    pub mean_wall_ms: f64,
    pub results: Vec<TrialResult>,
}

impl SweepRow {
    pub fn from_results(
        algo: Algorithm,
        shape: CubeShape,
        k: usize,
        placement: Placement,
        results: Vec<TrialResult>,
    ) -> Self {
        let trials = results.len();
        let n = trials.max(1) as f64;
        let wins: Vec<&TrialResult> = results.iter().filter(|r| r.success).collect();
        let mean_percent_samples =
            (!wins.is_empty()).then(|| wins.iter().map(|r| r.percent_samples).sum::<f64>() / wins.len() as f64);
        SweepRow {
            algo,
            shape,
            k,
            placement,
            trials,
            p_success: wins.len() as f64 / n,
            mean_percent_samples,
            mean_iters: results.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            mean_wall_ms: results.iter().map(|r| r.wall_ms).sum::<f64>() / n,
            results,
        }
    }
}

/// Runs `trials` independent instances per cell. For clustered placements
/// each requested K is rounded to a whole number of clusters, and the row
/// records the K actually used.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.config.validate()?;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &algo in &spec.algorithms {
        for shape in &spec.shapes {
            for &placement in &spec.placements {
                for &k in &spec.ks {
                    let k = placement.round_k(k);
                    cell += 1;
                    let base = mix_seed(spec.seed ^ mix_seed(cell));
                    let results = (0..spec.trials as u64)
                        .into_par_iter()
                        .map(|t| run_trial(algo, shape, k, placement, base.wrapping_add(t), &spec.config))
                        .collect::<Result<Vec<_>>>()?;
                    rows.push(SweepRow::from_results(algo, shape.clone(), k, placement, results));
                }
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = [
    "algo",
    "N0",
    "N1",
    "K",
    "placement",
    "trials",
    "p_success",
    "mean_percent_samples",
    "mean_iters",
    "mean_wall_ms",
];

/// Writes one line per row. `N1` is empty for 1-D shapes; extents past the
/// second are not represented.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("csv output failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        let dims = row.shape.dims();
        w.write_record([
            row.algo.to_string(),
            dims[0].to_string(),
            dims.get(1).map(ToString::to_string).unwrap_or_default(),
            row.k.to_string(),
            row.placement.to_string(),
            row.trials.to_string(),
            format!("{:.4}", row.p_success),
            row.mean_percent_samples.map(|p| format!("{p:.4}")).unwrap_or_default(),
            format!("{:.3}", row.mean_iters),
            format!("{:.3}", row.mean_wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SignalSource;
    use std::collections::HashSet;
    use std::f64::consts::TAU;

    fn shape(dims: &[usize]) -> CubeShape {
        CubeShape::new(dims.to_vec()).unwrap()
    }

    /// Direct sum over every grid point.
    fn brute_dft(cube: &DenseCube) -> Vec<Complex64> {
        let s = cube.shape();
        let n = s.n_total() as f64;
        s.grid()
            .map(|m| {
                s.grid()
                    .map(|p| {
                        let phase: f64 = m
                            .iter()
                            .zip(&p)
                            .zip(s.dims())
                            .map(|((&m, &p), &len)| (m * p) as f64 / len as f64)
                            .sum();
                        cube.get(&p) * Complex64::from_polar(1.0, -TAU * phase)
                    })
                    .sum::<Complex64>()
                    / n
            })
            .collect()
    }

    #[test]
    fn dense_dft_examples() {
        let truth = SparseSpectrum::from_entries(shape(&[8, 8]), [([2, 3], Complex64::new(0.0, 2.0))]).unwrap();
        let cube = DenseCube::from_source(&SyntheticSource::new(truth));
        let x = dense_dft(&cube).unwrap();
        for m in x.shape().grid() {
            let want = if m == [2, 3] {
                Complex64::new(0.0, 2.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((x.get(&m) - want).norm() <= 1e-12, "{m:?}");
        }

        let ones = DenseCube::new(shape(&[4, 4]), vec![Complex64::new(1.0, 0.0); 16]).unwrap();
        let x = dense_dft(&ones).unwrap();
        assert!((x.get(&[0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(x.data()[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn dense_dft_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dims in [vec![5], vec![4, 6], vec![3, 2, 4], vec![6, 9]] {
            let s = shape(&dims);
            let data = (0..s.n_total())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let cube = DenseCube::new(s, data).unwrap();
            let fast = dense_dft(&cube).unwrap();
            for (a, b) in fast.data().iter().zip(brute_dft(&cube)) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_dft_size_guard() {
        let cube = DenseCube::zeros(shape(&[8, 8]));
        assert!(matches!(
            dense_dft_with_limit(&cube, 32),
            Err(Error::TooLarge { n: 64, limit: 32 })
        ));
    }

    #[test]
    fn synthetic_source_inverts_to_its_spectrum() {
        for seed in 0..5 {
            let spec = GeneratorSpec::new(shape(&[12, 8]), 7, Placement::Uniform, seed);
            let (truth, source) = generate(&spec).unwrap();
            let x = dense_dft(&DenseCube::from_source(&source)).unwrap();
            assert!(support_of(&x, 1e-10).matches(&truth, 1e-10));
        }
    }

    #[test]
    fn generator_examples() {
        let (t, _) = generate(&GeneratorSpec::new(shape(&[8, 8]), 1, Placement::Uniform, 0)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.iter().all(|(_, a)| (a.norm() - 1.0).abs() < 1e-15));

        let (t, _) = generate(&GeneratorSpec::new(shape(&[4, 4]), 16, Placement::Uniform, 0)).unwrap();
        assert_eq!(t.len(), 16);
    }

    #[test]
    fn clusters_are_disjoint_square_blocks() {
        for (size, side) in [(9usize, 3usize), (25, 5)] {
            for seed in 0..20u64 {
                let s = shape(&[64, 64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (support, centers) = clustered_support(&s, 2 * size, side, &mut rng).unwrap();
                assert_eq!(centers.len(), 2);
                let half = side as i64 / 2;
                let mut expected = HashSet::new();
                for c in &centers {
                    for di in -half..=half {
                        for dj in -half..=half {
                            let p = vec![
                                (c[0] as i64 + di).rem_euclid(64) as usize,
                                (c[1] as i64 + dj).rem_euclid(64) as usize,
                            ];
                            assert!(expected.insert(p), "blocks overlap");
                        }
                    }
                }
                let got: HashSet<Vec<usize>> = support.into_iter().collect();
                assert_eq!(got, expected);
                assert_eq!(got.len(), 2 * size);
            }
        }
    }

    #[test]
    fn clusters_wrap_around_the_torus() {
        let s = shape(&[4, 4]);
        let (t, _) = generate(&GeneratorSpec::new(s, 9, Placement::Clustered(9), 1)).unwrap();
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn invalid_generator_specs() {
        let s = shape(&[8, 8]);
        for (k, p) in [
            (65, Placement::Uniform),
            (10, Placement::Clustered(9)),
            (9, Placement::Clustered(4)),
        ] {
            assert!(matches!(
                generate(&GeneratorSpec::new(s.clone(), k, p, 0)),
                Err(Error::Config(_))
            ));
        }
        assert!(generate(&GeneratorSpec::new(shape(&[4, 4, 4]), 9, Placement::Clustered(9), 0)).is_err());
        // seven 3x3 blocks cannot tile a 6x6 torus
        assert!(matches!(
            generate(&GeneratorSpec::new(shape(&[6, 6]), 63, Placement::Clustered(9), 0)),
            Err(Error::Config(_)) | Err(Error::InfeasiblePlacement { .. })
        ));
        assert!(matches!(
            generate(&GeneratorSpec::new(shape(&[6, 6]), 36, Placement::Clustered(9), 5)),
            Ok(_) | Err(Error::InfeasiblePlacement { .. })
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(shape(&[16, 16]), 18, Placement::Clustered(9), 42);
        let (a, sa) = generate(&spec).unwrap();
        let (b, sb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa.sample(&[3, 5]), sb.sample(&[3, 5]));
    }

    #[test]
    fn cluster_rounding() {
        assert_eq!(Placement::Uniform.round_k(130), 130);
        assert_eq!(Placement::Clustered(9).round_k(128), 126);
        assert_eq!(Placement::Clustered(9).round_k(131), 135);
        assert_eq!(Placement::Clustered(25).round_k(3), 25);
        assert_eq!(Placement::Clustered(25).round_k(1280), 1275);
    }

    #[test]
    fn sweep_spec_reads_toml() {
        let spec: SweepSpec = toml::from_str(
            r#"
            algorithms = ["fps", "baseline"]
            shapes = ["32x32", [16, 12]]
            ks = [8, 16]
            placements = ["uniform", "clustered9"]
            trials = 5
            seed = 3
            [config]
            max_iterations = 20
            "#,
        )
        .unwrap();
        assert_eq!(spec.shapes[1].dims(), &[16, 12]);
        assert_eq!(spec.placements[1], Placement::Clustered(9));
        assert_eq!(spec.config.max_iterations, Some(20));
        assert_eq!(spec.config.stall_limit, 3);
    }

    #[test]
    fn placement_and_algorithm_names() {
        for p in ["uniform", "clustered9", "clustered25"] {
            assert_eq!(p.parse::<Placement>().unwrap().to_string(), p);
        }
        assert!("clustered4".parse::<Placement>().is_err());
        assert_eq!("baseline".parse::<Algorithm>().unwrap(), Algorithm::Baseline);
        assert!("fft".parse::<Algorithm>().is_err());
    }

    #[test]
    fn small_sweep_and_csv() {
        let spec = SweepSpec {
            algorithms: vec![Algorithm::Fps],
            shapes: vec![shape(&[16, 16])],
            ks: vec![4, 9],
            placements: vec![Placement::Uniform, Placement::Clustered(9)],
            trials: 4,
            seed: 1,
            config: FpsSftConfig::default(),
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        let ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
        // K = 4 becomes one 3x3 cluster
        assert_eq!(ks, vec![4, 9, 9, 9]);

        let spec = SweepSpec { ks: vec![9], ..spec };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        let timeless = |rows: Vec<SweepRow>| -> Vec<SweepRow> {
            rows.into_iter()
                .map(|mut r| {
                    r.mean_wall_ms = 0.0;
                    r.results.iter_mut().for_each(|t| t.wall_ms = 0.0);
                    r
                })
                .collect()
        };
        assert_eq!(timeless(rows.clone()), timeless(run_sweep(&spec).unwrap()));

        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "algo,N0,N1,K,placement,trials,p_success,mean_percent_samples,mean_iters,mean_wall_ms"
        );
        assert!(lines.next().unwrap().starts_with("fps,16,16,9,uniform,4,"));
        assert!(lines.next().unwrap().starts_with("fps,16,16,9,clustered9,4,"));
    }
}
