//! `ait` — sparse recovery via adaptively iterative thresholding.
//!
//! Subcommands: `generate` (seeded problem instances), `solve` (run the
//! solver on matrix/vector files), `analyze` (matrix certificate), and
//! `experiment` (batch harnesses driven by JSON specs). Every run writes a
//! manifest that `replay` can re-execute to reproduce the outputs
//! byte-for-byte.

// negated float comparisons are validation guards that must treat NaN as
// invalid
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod experiment;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ait_core::analysis::{analyze_matrix, AnalysisOptions, AnalysisReport, NormPair};
use ait_core::io;
use ait_core::probgen::{generate, NoiseSpec, ProblemSpec, SignalDist};
use ait_core::solver::{
    denormalize_solution, normalize_columns, solve, SolveStatus, SolverConfig, StepStrategy,
};
use ait_core::thresholding::ThresholdingOperator;

use error::{CliError, CliResult};
use experiment::{run_experiment, ExperimentSpec};
use manifest::{load_manifest, ManifestTimer};

#[derive(Parser)]
#[command(
    name = "ait",
    version,
    about = "Sparse recovery with adaptively iterative thresholding: solvers, matrix certificates, and seeded experiments"
)]
struct Cli {
    /// Worker threads for trial-level parallelism (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random problem instance.
    Generate(GenerateArgs),
    /// Run the thresholding solver on matrix/vector files.
    Solve(SolveArgs),
    /// Compute the matrix certificate (coherence, isometry constants,
    /// condition flags).
    Analyze(AnalyzeArgs),
    /// Run a JSON-specified experiment.
    Experiment(ExperimentArgs),
    /// Re-execute a run from its manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Problem spec JSON; flags below are ignored when present.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k_star: Option<usize>,
    /// Nonzero distribution: gaussian or binary.
    #[arg(long, default_value = "gaussian")]
    signal: String,
    /// Measurement SNR in dB; omit for a noiseless instance.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Matrix entry variance; defaults to 1/m.
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix file format: csv or bin.
    #[arg(long, default_value = "csv", value_parser = ["csv", "bin"])]
    format: String,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    /// Ground-truth vector file; enables error columns in the trace.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "hard", value_parser = ["hard", "soft", "half", "two_thirds", "scad"])]
    operator: String,
    #[arg(long)]
    scad_a: Option<f64>,
    /// Specified sparsity level.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Step size: a positive number or "adaptive".
    #[arg(long, default_value = "1")]
    step: String,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Relative iterate-change stopping tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Solve in the column-normalized frame and map the solution back.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// True sparsity level the certificate is evaluated at.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k_star: u64,
    #[arg(long, default_value = "hard", value_parser = ["hard", "soft", "half", "two_thirds", "scad"])]
    operator: String,
    #[arg(long)]
    scad_a: Option<f64>,
    /// Primal exponent of the norm pair: 1 for (1, inf), 2 for (2, 2).
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Support enumeration budget.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    /// Step size the rate constants are reported at.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Column-normalize the matrix before analysis.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Master seed; all randomness flows from it.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the directory containing the manifest.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GenerateConfig {
    spec: ProblemSpec,
    format: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolveConfig {
    matrix: PathBuf,
    rhs: PathBuf,
    truth: Option<PathBuf>,
    operator: ThresholdingOperator,
    k: usize,
    step: StepStrategy,
    max_iter: usize,
    tol: f64,
    normalize: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalyzeConfig {
    matrix: PathBuf,
    k_star: usize,
    operator: ThresholdingOperator,
    p: f64,
    budget: u64,
    step: f64,
    normalize: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentConfig {
    spec: ExperimentSpec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // ignore the error if a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Generate(args) => {
            let config = resolve_generate(args.spec.as_deref(), &args)?;
            run_generate(&config, &args.output_dir)
        }
        Command::Solve(args) => {
            let config = resolve_solve(&args)?;
            run_solve(&config, &args.output_dir)
        }
        Command::Analyze(args) => {
            let config = resolve_analyze(&args)?;
            run_analyze(&config, &args.output_dir)
        }
        Command::Experiment(args) => {
            let spec = ExperimentSpec::load(&args.spec)?;
            let config = ExperimentConfig { spec };
            run_experiment_command(&config, args.seed, &args.output_dir)
        }
        Command::Replay(args) => replay(&args),
    }
}

fn parse_operator(name: &str, scad_a: Option<f64>) -> CliResult<ThresholdingOperator> {
    ThresholdingOperator::from_name(name, scad_a).map_err(CliError::from)
}

fn resolve_generate(spec_path: Option<&Path>, args: &GenerateArgs) -> CliResult<GenerateConfig> {
    let spec = if let Some(path) = spec_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read spec {}: {e}", path.display())))?;
        serde_json::from_str::<ProblemSpec>(&text)
            .map_err(|e| CliError::Config(format!("invalid problem spec: {e}")))?
    } else {
        let (Some(m), Some(n), Some(k_star), Some(seed)) = (args.m, args.n, args.k_star, args.seed)
        else {
            return Err(CliError::Config(
                "generate needs --spec or all of --m, --n, --k-star, --seed".into(),
            ));
        };
        let signal_dist = match args.signal.as_str() {
            "gaussian" => SignalDist::Gaussian,
            "binary" => SignalDist::Binary,
            other => {
                return Err(CliError::Config(format!(
                    "unknown signal distribution {other:?}"
                )))
            }
        };
        let noise = match args.snr_db {
            Some(value) => NoiseSpec::SnrDb { value },
            None => NoiseSpec::None,
        };
        ProblemSpec {
            m,
            n,
            k_star,
            matrix_variance: args.variance,
            signal_dist,
            noise,
            seed,
        }
    };
    Ok(GenerateConfig {
        spec,
        format: args.format.clone(),
    })
}

fn run_generate(config: &GenerateConfig, out_dir: &Path) -> CliResult<()> {
    let timer = ManifestTimer::start();
    std::fs::create_dir_all(out_dir)?;
    let problem = generate(&config.spec)?;

    let matrix_name = format!("a.{}", config.format);
    let b_name = format!("b.{}", config.format);
    let x_star_name = format!("x_star.{}", config.format);
    io::write_matrix(&out_dir.join(&matrix_name), &problem.a)?;
    io::write_vector(&out_dir.join(&b_name), &problem.b)?;
    io::write_vector(&out_dir.join(&x_star_name), &problem.x_star)?;
    let spec_text =
        serde_json::to_string_pretty(&config.spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(out_dir.join("problem_spec.json"), spec_text + "\n")?;

    let outputs = vec![matrix_name, b_name, x_star_name, "problem_spec.json".into()];
    timer.finish(out_dir, "generate", Some(config.spec.seed), config, outputs)?;
    println!(
        "generated {}x{} instance with k* = {} into {}",
        config.spec.m,
        config.spec.n,
        config.spec.k_star,
        out_dir.display()
    );
    Ok(())
}

fn resolve_solve(args: &SolveArgs) -> CliResult<SolveConfig> {
    let operator = parse_operator(&args.operator, args.scad_a)?;
    let step = if args.step == "adaptive" {
        StepStrategy::Adaptive
    } else {
        let s: f64 = args
            .step
            .parse()
            .map_err(|_| CliError::Config(format!("invalid step {:?}", args.step)))?;
        if !(s > 0.0) {
            return Err(CliError::Config(format!("step must be > 0, got {s}")));
        }
        StepStrategy::constant(s)
    };
    Ok(SolveConfig {
        matrix: args.matrix.clone(),
        rhs: args.rhs.clone(),
        truth: args.truth.clone(),
        operator,
        k: args.k as usize,
        step,
        max_iter: args.max_iter,
        tol: args.tol,
        normalize: args.normalize,
    })
}

fn run_solve(config: &SolveConfig, out_dir: &Path) -> CliResult<()> {
    let timer = ManifestTimer::start();
    std::fs::create_dir_all(out_dir)?;
    let a = io::read_matrix(&config.matrix)?;
    let b = io::read_vector(&config.rhs)?;
    let truth = config
        .truth
        .as_ref()
        .map(|p| io::read_vector(p))
        .transpose()?;

    let mut solver_config = SolverConfig::new(config.k)
        .with_step(config.step)
        .with_max_iter(config.max_iter)
        .with_stop_tol(config.tol)
        .with_trace();
    if let Some(t) = truth {
        solver_config = solver_config.with_truth(t);
    }

    let (x, result) = if config.normalize {
        let (a_hat, map) = normalize_columns(&a)?;
        let result = solve(&a_hat, &b, &solver_config, config.operator)?;
        (denormalize_solution(&result.x, &map), result)
    } else {
        let result = solve(&a, &b, &solver_config, config.operator)?;
        (result.x.clone(), result)
    };

    io::write_vector_csv(&out_dir.join("solution.csv"), &x)?;
    io::write_trace_csv(&out_dir.join("trace.csv"), &result.trace)?;

    let outputs = vec!["solution.csv".into(), "trace.csv".into()];
    timer.finish(out_dir, "solve", None, config, outputs)?;
    let status = match result.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max-iter",
    };
    println!(
        "{status} after {} iterations; residual {:.3e}; outputs in {}",
        result.iterations,
        (&a * &x - &b).norm(),
        out_dir.display()
    );
    Ok(())
}

fn resolve_analyze(args: &AnalyzeArgs) -> CliResult<AnalyzeConfig> {
    Ok(AnalyzeConfig {
        matrix: args.matrix.clone(),
        k_star: args.k_star as usize,
        operator: parse_operator(&args.operator, args.scad_a)?,
        p: args.p,
        budget: args.budget,
        step: args.step,
        normalize: args.normalize,
    })
}

fn run_analyze(config: &AnalyzeConfig, out_dir: &Path) -> CliResult<()> {
    let timer = ManifestTimer::start();
    std::fs::create_dir_all(out_dir)?;
    let mut a = io::read_matrix(&config.matrix)?;
    if config.normalize {
        a = normalize_columns(&a)?.0;
    }
    let norms = NormPair::from_p(config.p).map_err(CliError::from)?;
    let options = AnalysisOptions {
        k_star: config.k_star,
        operator: config.operator,
        norms,
        budget: config.budget as u128,
        step: config.step,
    };
    let report = analyze_matrix(&a, &options)?;

    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(out_dir.join("report.json"), text + "\n")?;
    print_certificate(&report);

    timer.finish(out_dir, "analyze", None, config, vec!["report.json".into()])?;
    Ok(())
}

fn print_certificate(report: &AnalysisReport) {
    println!(
        "matrix {}x{}  operator {}  k* = {}  norms (p, q) = ({}, {})",
        report.rows, report.cols, report.operator, report.k_star, report.p, report.q
    );
    println!("  coherence mu = {:.6e}", report.mu);
    let deltas: Vec<String> = report
        .delta
        .iter()
        .map(|(r, d)| format!("delta_{r} = {d:.6e}"))
        .collect();
    println!("  {}", deltas.join("  "));
    for entry in &report.beta {
        println!(
            "  beta(k={}, p={}, q={}) = {:.6e}{}",
            entry.k,
            entry.p,
            entry.q,
            entry.value,
            if entry.exact { "" } else { " (lower bound)" }
        );
    }
    println!(
        "  L1 = {:.6}  L2 = {:.6}  L = {:.6}  1/L = {:.6}",
        report.l1,
        report.l2,
        report.l,
        1.0 / report.l
    );
    println!(
        "  at s = {}: gamma_s = {:.6e}  rho_s = {:.6e}",
        report.step, report.gamma_s, report.rho_s
    );
    match report.s_interval {
        Some((lo, hi)) => println!("  admissible step interval: ({lo:.6}, {hi:.6})"),
        None => println!("  admissible step interval: none (rate hypothesis fails)"),
    }
    let flags = [
        (
            "unique sparsest solution",
            report.conditions.unique_sparsest,
        ),
        ("linear rate (norm pair)", report.conditions.linear_rate),
        (
            "coherence rate (strict)",
            report.conditions.coherence_rate_strict,
        ),
        (
            "coherence rate (table form)",
            report.conditions.coherence_rate_relaxed,
        ),
        ("linear rate (RIC form)", report.conditions.rip_rate),
        ("hard golden-ratio rate", report.conditions.golden_rate),
    ];
    println!("  conditions:");
    for (label, value) in flags {
        println!("    [{}] {label}", if value { "x" } else { " " });
    }
}

fn run_experiment_command(
    config: &ExperimentConfig,
    master_seed: u64,
    out_dir: &Path,
) -> CliResult<()> {
    let timer = ManifestTimer::start();
    let outputs = run_experiment(&config.spec, master_seed, out_dir)?;
    for name in &outputs {
        println!("wrote {}", out_dir.join(name).display());
    }
    timer.finish(out_dir, "experiment", Some(master_seed), config, outputs)?;
    Ok(())
}

fn replay(args: &ReplayArgs) -> CliResult<()> {
    let manifest = load_manifest(&args.manifest)?;
    let out_dir = match &args.output_dir {
        Some(dir) => dir.clone(),
        None => args
            .manifest
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let config = manifest.config.clone();
    match manifest.command.as_str() {
        "generate" => {
            let config: GenerateConfig = serde_json::from_value(config)
                .map_err(|e| CliError::Config(format!("invalid generate config: {e}")))?;
            run_generate(&config, &out_dir)
        }
        "solve" => {
            let config: SolveConfig = serde_json::from_value(config)
                .map_err(|e| CliError::Config(format!("invalid solve config: {e}")))?;
            run_solve(&config, &out_dir)
        }
        "analyze" => {
            let config: AnalyzeConfig = serde_json::from_value(config)
                .map_err(|e| CliError::Config(format!("invalid analyze config: {e}")))?;
            run_analyze(&config, &out_dir)
        }
        "experiment" => {
            let config: ExperimentConfig = serde_json::from_value(config)
                .map_err(|e| CliError::Config(format!("invalid experiment config: {e}")))?;
            let seed = manifest.master_seed.ok_or_else(|| {
                CliError::Config("experiment manifest lacks a master seed".into())
            })?;
            run_experiment_command(&config, seed, &out_dir)
        }
        other => Err(CliError::Config(format!("unknown command {other:?}"))),
    }
}
