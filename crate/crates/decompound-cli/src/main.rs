//! Command-line front end: simulate samples, run the density estimator,
//! certify kernels, cross-check the FFT pipeline against the quadrature
//! oracle, and drive the Monte Carlo experiments.
//!
//! Exit codes: 0 success; 1 validation error; 2 numerical failure (grid too
//! coarse, quadrature non-convergence); 3 zero-fallback estimate; 4 a check
//! or experiment gate failed.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use decompound::experiments::{
    bias_check, figure2_bimodality_rate, figure_model, figure_params, figure_sample,
    is_bimodal, mise_rate_sweep, normality_check, run_figure, variance_check, BandwidthRule,
    ExperimentConfig, FigurePreset, DEFAULT_BASE_SEED,
};
use decompound::inversion::{estimate_density, FftGrid};
use decompound::kernel::{check_kernel, Kernel};
use decompound::model::{
    CompoundPoissonModel, JumpDensitySpec, MixtureComponent, NormalMixture, Sample,
};
use decompound::oracle::{direct_inversion, QuadratureSpec};
use decompound::stream::RandomStream;
use decompound::tolerances::ORACLE_EQUIVALENCE_MAX_ABS;
use decompound::Error;

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 1;
const EXIT_NUMERICAL: i32 = 2;
const EXIT_ZERO_FALLBACK: i32 = 3;
const EXIT_GATE_FAILED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "decompound",
    about = "Nonparametric jump-size density estimation for compound Poisson data",
    version
)]
struct Cli {
    /// RNG seed (overrides config file and preset)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for replicate pools
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw compound Poisson observations until n are nonzero and write them
    /// as CSV
    Simulate(SimulateArgs),
    /// Estimate the jump density from a sample CSV via the FFT pipeline
    Estimate(EstimateArgs),
    /// Numerically certify a kernel
    CheckKernel(CheckKernelArgs),
    /// Compare the FFT pipeline against the direct-quadrature oracle
    OracleCompare(OracleCompareArgs),
    /// Run a named experiment preset
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JumpKind {
    Normal,
    Mixture,
}

#[derive(Args)]
struct SimulateArgs {
    /// Poisson intensity λ
    #[arg(long)]
    lambda: Option<f64>,

    /// Jump density family
    #[arg(long, value_enum)]
    jump: Option<JumpKind>,

    /// Mixture component means (comma separated)
    #[arg(long, value_delimiter = ',')]
    mixture_means: Option<Vec<f64>>,

    /// Mixture component variances
    #[arg(long, value_delimiter = ',')]
    mixture_variances: Option<Vec<f64>>,

    /// Mixture weights (must sum to 1)
    #[arg(long, value_delimiter = ',')]
    mixture_weights: Option<Vec<f64>>,

    /// Number of nonzero observations to collect
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sample CSV produced by `simulate`
    #[arg(long)]
    sample: Option<PathBuf>,

    /// Poisson intensity λ (assumed known)
    #[arg(long)]
    lambda: Option<f64>,

    /// Explicit bandwidth (exclusive with --c/--gamma)
    #[arg(long)]
    h: Option<f64>,

    /// Bandwidth rule coefficient: h = c·n^{-gamma}
    #[arg(long)]
    c: Option<f64>,

    /// Bandwidth rule exponent
    #[arg(long)]
    gamma: Option<f64>,

    /// FFT size (power of two)
    #[arg(long)]
    n_fft: Option<usize>,

    /// Frequency spacing η
    #[arg(long)]
    eta: Option<f64>,

    /// Truncation exponent α: clamp the estimate at ±n^α
    #[arg(long)]
    truncation_alpha: Option<f64>,

    /// Add an f_true column from a built-in jump density
    #[arg(long, value_enum)]
    truth: Option<JumpKind>,
}

#[derive(Args)]
struct CheckKernelArgs {
    /// Kernel name (built-in: wand)
    kernel: String,

    /// Smoothness order β for the absolute-moment check
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FigureName {
    Figure1,
    Figure2,
}

impl From<FigureName> for FigurePreset {
    fn from(f: FigureName) -> Self {
        match f {
            FigureName::Figure1 => FigurePreset::Figure1,
            FigureName::Figure2 => FigurePreset::Figure2,
        }
    }
}

#[derive(Args)]
struct OracleCompareArgs {
    /// Reference configuration to compare on
    #[arg(value_enum)]
    preset: FigureName,

    /// Probe points (defaults to -3..3 in integer steps)
    #[arg(long, value_delimiter = ',')]
    probe_x: Option<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentName {
    Figure1,
    Figure2,
    Mise,
    Variance,
    Bias,
    Normality,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    preset: ExperimentName,

    /// Override the preset replicate count
    #[arg(long)]
    replicates: Option<usize>,

    /// Override the preset sample sizes (comma separated)
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(EXIT_VALIDATION);
            }
            print!("{e}");
            std::process::exit(EXIT_OK);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::GridTooCoarse { .. } = e {
                eprintln!("suggestion: double --n-fft and halve --eta, then retry");
            }
            std::process::exit(exit_code_for(&e));
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::GridTooCoarse { .. }
        | Error::QuadratureNonConvergence { .. }
        | Error::ZeroPath { .. }
        | Error::DegenerateModel { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Flat `key = value` file; `#` starts a comment.
fn load_config(path: &Path) -> Result<HashMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            message: format!("line {}: expected `key = value`", i + 1),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Resolution order: command-line flag, then config file, then `preset`.
fn pick<T: FromStr + Copy>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    preset: Option<T>,
) -> Result<Option<T>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Some(raw) = file.get(key) {
        let parsed = raw.parse().map_err(|_| {
            Error::InvalidInput(format!("config key `{key}`: cannot parse `{raw}`"))
        })?;
        return Ok(Some(parsed));
    }
    Ok(preset)
}

fn require<T>(v: Option<T>, what: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::InvalidInput(format!("{what} is required")))
}

fn run(cli: Cli) -> Result<i32, Error> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let seed = pick(cli.seed, &file, "seed", Some(DEFAULT_BASE_SEED))?.unwrap();
    let jobs = pick(cli.jobs, &file, "jobs", None)?;
    let out = cli
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));

    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &file, seed, out),
        Command::Estimate(args) => cmd_estimate(args, &file, out),
        Command::CheckKernel(args) => cmd_check_kernel(args),
        Command::OracleCompare(args) => cmd_oracle_compare(args, seed),
        Command::Experiment(args) => cmd_experiment(args, &file, seed, jobs, out),
    }
}

fn build_jump(
    kind: JumpKind,
    means: Option<Vec<f64>>,
    variances: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
) -> Result<JumpDensitySpec, Error> {
    match kind {
        JumpKind::Normal => Ok(JumpDensitySpec::StandardNormal),
        JumpKind::Mixture => {
            // defaults: the built-in bimodal reference mixture
            let means = means.unwrap_or_else(|| vec![0.0, 1.5]);
            let variances = variances.unwrap_or_else(|| vec![1.0, 1.0 / 9.0]);
            let weights = weights.unwrap_or_else(|| vec![0.75, 0.25]);
            if means.len() != variances.len() || means.len() != weights.len() {
                return Err(Error::invalid(
                    "mixture means, variances and weights must have equal length",
                ));
            }
            let components = means
                .into_iter()
                .zip(variances)
                .zip(weights)
                .map(|((mean, variance), weight)| MixtureComponent {
                    mean,
                    variance,
                    weight,
                })
                .collect();
            Ok(JumpDensitySpec::NormalMixture(NormalMixture::new(
                components,
            )?))
        }
    }
}

fn cmd_simulate(
    args: SimulateArgs,
    file: &HashMap<String, String>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<i32, Error> {
    let lambda = require(pick(args.lambda, file, "lambda", None)?, "--lambda")?;
    let n = require(pick(args.n, file, "n", None)?, "--n")?;
    let kind = args.jump.unwrap_or(JumpKind::Normal);
    let jump = build_jump(
        kind,
        args.mixture_means,
        args.mixture_variances,
        args.mixture_weights,
    )?;
    let model = CompoundPoissonModel::new(lambda, jump)?;
    let mut stream = RandomStream::new(seed);
    let sample = model.sample_until_n_nonzero(n, &mut stream)?;

    let out = require(out, "--out")?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(w, "# lambda={lambda:.16e}")?;
    writeln!(w, "# jump={}", model.jump_name())?;
    writeln!(w, "# n={n}")?;
    sample.write_to(&mut w)?;
    drop(w);
    println!(
        "wrote {} nonzero observations ({} zeros discarded) to {}",
        sample.len(),
        sample.zero_count(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_estimate(
    args: EstimateArgs,
    file: &HashMap<String, String>,
    out: Option<PathBuf>,
) -> Result<i32, Error> {
    let sample_path = require(
        args.sample
            .or_else(|| file.get("sample").map(PathBuf::from)),
        "--sample",
    )?;
    let sample = Sample::read_csv(&sample_path)?;
    let lambda = require(pick(args.lambda, file, "lambda", None)?, "--lambda")?;

    let h_flag = pick(args.h, file, "h", None)?;
    let c_flag = pick(args.c, file, "c", None)?;
    let gamma_flag = pick(args.gamma, file, "gamma", None)?;
    let h = match (h_flag, c_flag, gamma_flag) {
        (Some(h), None, None) => h,
        (None, Some(c), Some(gamma)) => BandwidthRule::new(c, gamma)?.bandwidth(sample.len()),
        (None, None, None) => {
            return Err(Error::invalid(
                "supply exactly one of --h or the pair --c/--gamma",
            ))
        }
        _ => {
            return Err(Error::invalid(
                "supply exactly one of --h or the pair --c/--gamma",
            ))
        }
    };

    let n_fft = pick(args.n_fft, file, "n_fft", Some(16384))?.unwrap();
    let eta = pick(args.eta, file, "eta", Some(0.01))?.unwrap();
    let grid = FftGrid::new(n_fft, eta)?;
    let truncation_alpha = pick(args.truncation_alpha, file, "truncation_alpha", None)?;
    let truncation = truncation_alpha.map(|a| (sample.len() as f64).powf(a));

    let kernel = Kernel::wand();
    let estimate = estimate_density(&sample, lambda, &kernel, h, &grid, truncation)?;

    let out = require(out, "--out")?;
    let truth = args
        .truth
        .map(|kind| build_jump(kind, None, None, None))
        .transpose()?;
    match truth {
        Some(spec) => estimate.write_csv(&out, Some(&|x| spec.density(x)))?,
        None => estimate.write_csv(&out, None)?,
    }

    if estimate.info().zero_fallback {
        eprintln!(
            "the empirical curve vanished: wrote the zero-fallback estimate to {}",
            out.display()
        );
        return Ok(EXIT_ZERO_FALLBACK);
    }
    println!(
        "wrote {} grid values (h = {h:.6}) to {}",
        estimate.values().len(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_check_kernel(args: CheckKernelArgs) -> Result<i32, Error> {
    if args.kernel != "wand" {
        return Err(Error::invalid(format!(
            "unknown kernel `{}`; built-in: wand",
            args.kernel
        )));
    }
    let report = check_kernel(&Kernel::wand(), args.beta)?;
    print!("{}", report.render());
    Ok(if report.passed() { EXIT_OK } else { EXIT_GATE_FAILED })
}

fn cmd_oracle_compare(args: OracleCompareArgs, seed: u64) -> Result<i32, Error> {
    let preset: FigurePreset = args.preset.into();
    let model = figure_model(preset);
    let (_, h, grid) = figure_params(preset);
    let sample = figure_sample(preset, seed)?;
    let kernel = Kernel::wand();
    let estimate = estimate_density(&sample, model.lambda(), &kernel, h, &grid, None)?;

    let probes = args
        .probe_x
        .unwrap_or_else(|| vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    println!("x            fft             quadrature      |diff|");
    for probe in probes {
        // the FFT pipeline only knows grid points; compare exactly there
        let u = grid.nearest_x_index(probe);
        let x = grid.x(u);
        let direct = direct_inversion(&sample, model.lambda(), &kernel, h, x, &spec)?;
        let fft = estimate.values()[u];
        let diff = (fft - direct).abs();
        worst = worst.max(diff);
        println!("{x:<12.6} {fft: <15.8e} {direct: <15.8e} {diff:.3e}");
    }
    println!("max abs discrepancy: {worst:.3e} (tolerance {ORACLE_EQUIVALENCE_MAX_ABS:.1e})");
    Ok(if worst < ORACLE_EQUIVALENCE_MAX_ABS {
        EXIT_OK
    } else {
        EXIT_GATE_FAILED
    })
}

fn cmd_experiment(
    args: ExperimentArgs,
    file: &HashMap<String, String>,
    seed: u64,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<i32, Error> {
    let replicates = pick(args.replicates, file, "replicates", None)?;

    // figure presets emit estimate-vs-truth CSV
    if matches!(args.preset, ExperimentName::Figure1 | ExperimentName::Figure2) {
        let preset = match args.preset {
            ExperimentName::Figure1 => FigurePreset::Figure1,
            _ => FigurePreset::Figure2,
        };
        let run = run_figure(preset, seed)?;
        let default_name = match preset {
            FigurePreset::Figure1 => "figure1.csv",
            FigurePreset::Figure2 => "figure2.csv",
        };
        let out = out.unwrap_or_else(|| PathBuf::from(default_name));
        let model = figure_model(preset);
        run.estimate
            .write_csv(&out, Some(&|x| model.jump().density(x)))?;
        println!("wrote estimate-vs-truth CSV to {}", out.display());

        if preset == FigurePreset::Figure2 {
            let reps = replicates.unwrap_or(1);
            if reps > 1 {
                let rate = figure2_bimodality_rate(seed, reps)?;
                let pass = rate >= decompound::tolerances::BIMODAL_MIN_FRACTION;
                println!(
                    "[{}] bimodal on [-4, 4] in {:.0}% of {reps} replicates (floor 80%)",
                    if pass { "PASS" } else { "FAIL" },
                    rate * 100.0
                );
                return Ok(if pass { EXIT_OK } else { EXIT_GATE_FAILED });
            }
            println!(
                "this replicate is {}",
                if is_bimodal(&run.estimate, -4.0, 4.0) {
                    "bimodal on [-4, 4]"
                } else {
                    "not bimodal on [-4, 4]"
                }
            );
        }
        return Ok(EXIT_OK);
    }

    let mut config = match args.preset {
        ExperimentName::Mise => ExperimentConfig::mise(),
        ExperimentName::Variance => ExperimentConfig::variance(),
        ExperimentName::Bias => ExperimentConfig::bias(),
        ExperimentName::Normality => ExperimentConfig::normality(),
        _ => unreachable!(),
    };
    config.base_seed = seed;
    config.jobs = jobs;
    if let Some(r) = replicates {
        config.replicates = r;
    }
    if let Some(ns) = args.n_list {
        config.n_list = ns;
    }

    let report = match args.preset {
        ExperimentName::Mise => mise_rate_sweep(&config)?,
        ExperimentName::Variance => variance_check(&config, 0.0)?,
        ExperimentName::Bias => bias_check(&config, 0.0)?,
        ExperimentName::Normality => normality_check(&config, 0.0)?,
        _ => unreachable!(),
    };
    print!("{}", report.render());
    if let Some(out) = out {
        std::fs::write(&out, report.to_csv())?;
        println!("wrote cell CSV to {}", out.display());
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_GATE_FAILED })
}
