use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use fps_sft::imaging::{head_phantom, reconstruct_sparse_image, sparsify, threshold_for_fraction};
use fps_sft::oracle::{generate, mix_seed, run_sweep, write_sweep_csv, Algorithm, GeneratorSpec, Placement, SweepSpec};
use fps_sft::pgm::{read_pgm, write_pgm};
use fps_sft::{selftest, CubeShape, Error, FpsSftConfig, Result, SparseSpectrum, SyntheticSource};

pub const VERSION: &str = env!("FPS_SFT_VERSION");

/// Relative amplitude tolerance for calling a recovery perfect.
const MATCH_TOL: f64 = 1e-8;
/// Largest pixel error for calling an image reconstruction perfect.
const PIXEL_TOL: f64 = 1e-6;

/// Width, height, speckle and seed of the built-in test image.
const PHANTOM: (usize, usize, f64, u64) = (576, 512, 0.03, 3);

#[derive(Debug, Parser)]
#[command(name = "fps-sft", version = VERSION, about = "Sparse multidimensional Fourier transform over random discrete lines")]
pub struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover a sparse spectrum from a file or a random instance.
    Recover(RecoverArgs),
    /// Monte Carlo recovery rates over sparsity levels; writes CSV and JSON.
    Sweep(SweepArgs),
    /// Reconstruct a pixel-sparse image from its spectrum.
    Image(ImageArgs),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct AlgoArgs {
    /// Recovery algorithm: fps or baseline.
    #[arg(long, default_value = "fps")]
    algo: Algorithm,
    /// RNG seed.
    #[arg(long, env = "FPS_SFT_SEED")]
    seed: Option<u64>,
    /// Iteration cap.
    #[arg(long)]
    tmax: Option<usize>,
    /// Stop after this many iterations without a new sinusoid.
    #[arg(long)]
    stall: Option<usize>,
    /// TOML file with algorithm settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    /// Spectrum file to recover; otherwise a random instance is drawn.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Grid shape, e.g. 256x256.
    #[arg(long)]
    shape: Option<CubeShape>,
    /// Number of sinusoids in a random instance.
    #[arg(long)]
    k: Option<usize>,
    /// uniform, clustered9 or clustered25.
    #[arg(long, default_value = "uniform")]
    placement: Placement,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Output directory.
    #[arg(long, default_value = "fps-sft-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML sweep description; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated algorithms to compare.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    /// Comma-separated grid shapes.
    #[arg(long, value_delimiter = ',')]
    shape: Vec<CubeShape>,
    /// Comma-separated sparsity levels.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Comma-separated support placements.
    #[arg(long, value_delimiter = ',')]
    placement: Vec<Placement>,
    /// Trials per sparsity level.
    #[arg(long)]
    trials: Option<usize>,
    /// RNG seed.
    #[arg(long, env = "FPS_SFT_SEED")]
    seed: Option<u64>,
    /// Iteration cap.
    #[arg(long)]
    tmax: Option<usize>,
    /// Stop after this many iterations without a new sinusoid.
    #[arg(long)]
    stall: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "fps-sft-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ImageArgs {
    /// PGM image (P2 or P5).
    #[arg(long, required_unless_present = "phantom")]
    input: Option<PathBuf>,
    /// Use the built-in 576x512 head phantom instead of an input file.
    #[arg(long, conflicts_with = "input")]
    phantom: bool,
    /// Pixels below this intensity are zeroed.
    #[arg(long, conflicts_with = "sparsity")]
    threshold: Option<f64>,
    /// Keep this fraction of the brightest pixels instead of a threshold.
    #[arg(long)]
    sparsity: Option<f64>,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Output directory.
    #[arg(long, default_value = "fps-sft-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, env = "FPS_SFT_SEED", default_value_t = 1)]
    seed: u64,
}

/// Process outcome: exit 0 for perfect results and 2 otherwise.
pub enum Outcome {
    Perfect,
    Imperfect,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: &'static str,
    version: &'static str,
    seed: u64,
    config: serde_json::Value,
    outputs: Vec<String>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    write_file(path, text + "\n")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn correctly_recovered(recovered: &SparseSpectrum, truth: &SparseSpectrum) -> usize {
    truth
        .iter()
        .filter(|(f, a)| recovered.get(f).is_some_and(|b| (b - a).norm() <= MATCH_TOL * a.norm()))
        .count()
}

impl AlgoArgs {
    /// Flags over file over defaults.
    fn resolve(&self) -> Result<FpsSftConfig> {
        let mut config = match &self.config {
            Some(path) => parse_toml::<FpsSftConfig>(path)?,
            None => FpsSftConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(t) = self.tmax {
            config.max_iterations = Some(t);
        }
        if let Some(s) = self.stall {
            config.stall_limit = s;
        }
        config.validate()?;
        Ok(config)
    }
}

struct Manifest {
    subcommand: &'static str,
    started: u128,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Manifest {
    fn start(subcommand: &'static str, out: &Path) -> Result<Self> {
        create_dir(out)?;
        Ok(Manifest {
            subcommand,
            started: unix_ms(),
            out: out.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(self, seed: u64, config: serde_json::Value) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            version: VERSION,
            seed,
            config,
            outputs: self.outputs,
            started_unix_ms: self.started,
            finished_unix_ms: unix_ms(),
        };
        write_json(&self.out.join("manifest.json"), &manifest)
    }
}

fn recover(args: RecoverArgs) -> Result<Outcome> {
    let config = args.algo.resolve()?;
    let seed = config.seed;
    let mut generator = None;
    let truth = match (&args.input, &args.shape, args.k) {
        (Some(path), shape, _) => {
            let truth = SparseSpectrum::parse_text(&read_text(path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if let Some(shape) = shape {
                if shape != truth.shape() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("--shape {shape}"),
                        actual: format!("{} in {}", truth.shape(), path.display()),
                    });
                }
            }
            truth
        }
        (None, Some(shape), Some(k)) => {
            let spec = GeneratorSpec::new(shape.clone(), k, args.placement, mix_seed(seed));
            let (truth, _) = generate(&spec)?;
            generator = Some(spec);
            truth
        }
        _ => {
            return Err(Error::Config(
                "recover needs --input FILE, or --shape and --k for a random instance".into(),
            ))
        }
    };

    let mut manifest = Manifest::start("recover", &args.out)?;
    let source = SyntheticSource::new(truth.clone());
    let report = args.algo.algo.run(&source, &config)?;
    let perfect = report.recovered.matches(&truth, MATCH_TOL);

    write_file(&manifest.path("truth.txt"), truth.to_text())?;
    write_file(&manifest.path("recovered.txt"), report.recovered.to_text())?;
    write_json(&manifest.path("report.json"), &report)?;
    println!(
        "{}: recovered {} of {} sinusoids in {} iterations using {} samples ({:.2}% of {}), {:?}",
        args.algo.algo,
        correctly_recovered(&report.recovered, &truth),
        truth.len(),
        report.iterations_run,
        report.samples_used,
        report.percent_samples(),
        truth.shape(),
        report.terminated_by,
    );
    manifest.finish(
        seed,
        json!({
            "algo": args.algo.algo,
            "input": args.input,
            "generator": generator,
            "fps": config,
        }),
    )?;
    Ok(if perfect { Outcome::Perfect } else { Outcome::Imperfect })
}

fn sweep(args: SweepArgs) -> Result<Outcome> {
    let mut spec = match &args.config {
        Some(path) => parse_toml::<SweepSpec>(path)?,
        None => SweepSpec {
            algorithms: vec![Algorithm::Fps],
            shapes: Vec::new(),
            ks: Vec::new(),
            placements: vec![Placement::Uniform],
            trials: 10,
            seed: 0,
            config: FpsSftConfig::default(),
        },
    };
    if !args.algo.is_empty() {
        spec.algorithms = args.algo;
    }
    if !args.shape.is_empty() {
        spec.shapes = args.shape;
    }
    if !args.k.is_empty() {
        spec.ks = args.k;
    }
    if !args.placement.is_empty() {
        spec.placements = args.placement;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.tmax {
        spec.config.max_iterations = Some(t);
    }
    if let Some(s) = args.stall {
        spec.config.stall_limit = s;
    }
    if spec.shapes.is_empty() || spec.ks.is_empty() || spec.trials == 0 {
        return Err(Error::Config(
            "a sweep needs at least one shape, one K and one trial".into(),
        ));
    }

    let mut manifest = Manifest::start("sweep", &args.out)?;
    let rows = run_sweep(&spec)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    write_file(&manifest.path("sweep.csv"), &csv)?;
    write_json(&manifest.path("sweep.json"), &rows)?;
    print!("{}", String::from_utf8_lossy(&csv));
    manifest.finish(spec.seed, serde_json::to_value(&spec).expect("sweep spec serializes"))?;
    Ok(Outcome::Perfect)
}

fn image(args: ImageArgs) -> Result<Outcome> {
    let config = args.algo.resolve()?;
    let img = match &args.input {
        Some(path) => read_pgm(path)?,
        None => {
            let (w, h, speckle, seed) = PHANTOM;
            head_phantom(w, h, speckle, seed)
        }
    };
    let threshold = match (args.threshold, args.sparsity) {
        (Some(t), _) => t,
        (None, Some(f)) if f > 0.0 && f <= 1.0 => threshold_for_fraction(&img, f),
        (None, Some(f)) => return Err(Error::Config(format!("--sparsity must be in (0, 1], got {f}"))),
        (None, None) => 0.0,
    };
    let sparse = sparsify(&img, threshold);
    if sparse.nonzero_count() == 0 {
        return Err(Error::Config(format!("threshold {threshold} leaves no pixels")));
    }
    if args.algo.algo != Algorithm::Fps {
        return Err(Error::Unsupported(
            "image reconstruction runs the fps algorithm only".into(),
        ));
    }

    let mut manifest = Manifest::start("image", &args.out)?;
    let rec = reconstruct_sparse_image(&sparse, &config)?;
    write_pgm(&sparse, u16::MAX, manifest.path("sparsified.pgm"))?;
    write_pgm(&rec.image, u16::MAX, manifest.path("reconstructed.pgm"))?;
    write_json(&manifest.path("metrics.json"), &rec.metrics)?;
    let m = &rec.metrics;
    println!(
        "{}x{} image, K = {} ({:.2}% nonzero): max pixel error {:.2e} after {} iterations using {:.1}% of the spectrum, {:?}",
        m.width,
        m.height,
        m.k,
        100.0 * m.sparsity,
        m.max_abs_error,
        m.iterations,
        m.percent_samples,
        m.terminated_by,
    );
    manifest.finish(
        config.seed,
        json!({
            "input": args.input,
            "phantom": args.input.is_none(),
            "threshold": threshold,
            "sparsity": args.sparsity,
            "fps": config,
        }),
    )?;
    Ok(if m.max_abs_error <= PIXEL_TOL {
        Outcome::Perfect
    } else {
        Outcome::Imperfect
    })
}

fn run_selftest(args: SelftestArgs) -> Result<Outcome> {
    let mut all = true;
    for outcome in selftest::run_all(args.seed) {
        all &= outcome.passed;
        println!(
            "{} {:<32} {:>7.2}s  {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.seconds,
            outcome.detail
        );
    }
    Ok(if all { Outcome::Perfect } else { Outcome::Imperfect })
}

pub fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads {n}: {e}")))?;
    }
    match cli.command {
        Command::Recover(args) => recover(args),
        Command::Sweep(args) => sweep(args),
        Command::Image(args) => image(args),
        Command::Selftest(args) => run_selftest(args),
    }
}
