//! Experiment spec schema and runners.
//!
//! Specs are JSON files selected with `--kind`-style tagging; the master
//! seed always comes from the command line, never from the file, so a spec
//! plus a seed fully determines every output byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use ait_core::analysis::{
    coherence, coherence_step_interval, contraction_constants, golden_threshold, gric, ric,
    step_interval, NormPair, DEFAULT_SUPPORT_BUDGET,
};
use ait_core::experiments::{
    certified_instance, normalization_compare, phase_transition, sparsity_sweep,
    verify_convergence_bound, Algorithm, BoundReport, BoundTheorem, NormalizationSpec,
    PhaseTransitionSpec, SparsitySweepSpec,
};
use ait_core::probgen::{derive_seed, NoiseSpec, ProblemSpec, SignalDist};
use ait_core::solver::SolverConfig;
use ait_core::thresholding::ThresholdingOperator;

use crate::error::{CliError, CliResult};

fn default_sweep_trials() -> usize {
    3
}
fn default_compare_trials() -> usize {
    10
}
fn default_max_iter() -> usize {
    2000
}
fn default_stop_tol() -> f64 {
    1e-12
}
fn default_signal() -> SignalDist {
    SignalDist::Gaussian
}
fn default_noise() -> NoiseSpec {
    NoiseSpec::None
}
fn default_trials_per_point() -> usize {
    20
}
fn default_resolution() -> usize {
    1
}
fn default_phase_max_iter() -> usize {
    500
}
fn default_phase_stop_tol() -> f64 {
    1e-8
}
fn default_bound_n() -> usize {
    8
}
fn default_bound_k() -> usize {
    1
}
fn default_perturbation() -> f64 {
    0.04
}
fn default_bound_steps() -> Vec<BoundStepSpec> {
    vec![
        BoundStepSpec::Named("lower".into()),
        BoundStepSpec::Named("unit".into()),
        BoundStepSpec::Named("upper".into()),
    ]
}
fn default_endpoint_margin() -> f64 {
    0.05
}
fn default_bound_iters() -> usize {
    200
}
fn default_p() -> f64 {
    2.0
}

/// Inclusive sparsity-level range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    SparsitySweep(SweepParams),
    NormalizationCompare(NormalizationParams),
    PhaseTransition(PhaseParams),
    VerifyBound(BoundParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub m: usize,
    pub n: usize,
    pub k_star: usize,
    #[serde(default)]
    pub matrix_variance: Option<f64>,
    #[serde(default = "default_signal")]
    pub signal_dist: SignalDist,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    pub k_range: KRange,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_sweep_trials")]
    pub trials: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationParams {
    pub m: usize,
    pub n: usize,
    pub k_star: usize,
    #[serde(default)]
    pub matrix_variance: Option<f64>,
    #[serde(default = "default_signal")]
    pub signal_dist: SignalDist,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_compare_trials")]
    pub trials: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    pub n: usize,
    /// Defaults to the ten even tenths of `n`.
    #[serde(default)]
    pub m_grid: Option<Vec<usize>>,
    #[serde(default = "default_trials_per_point")]
    pub trials_per_point: usize,
    #[serde(default = "default_signal")]
    pub signal_dist: SignalDist,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_resolution")]
    pub bisection_resolution: usize,
    #[serde(default = "default_phase_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_phase_stop_tol")]
    pub stop_tol: f64,
}

/// `"lower"`, `"unit"`, `"upper"`, or an explicit step value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundStepSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    #[serde(default = "default_bound_n")]
    pub n: usize,
    #[serde(default = "default_bound_k")]
    pub k_star: usize,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    pub operator: ThresholdingOperator,
    pub theorem: BoundTheorem,
    /// Primal exponent of the norm pair for the linear-rate bound.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_bound_steps")]
    pub steps: Vec<BoundStepSpec>,
    /// Fraction of the admissible interval kept away from each endpoint
    /// when resolving `"lower"`/`"upper"`.
    #[serde(default = "default_endpoint_margin")]
    pub endpoint_margin: f64,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "default_bound_iters")]
    pub max_iter: usize,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read spec {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid experiment spec: {e}")))
    }
}

fn csv_writer(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::Runtime(format!("cannot create {}: {e}", path.display()))
    })?))
}

fn write_summary_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Runs the experiment and returns the names of the files written into
/// `out_dir`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    master_seed: u64,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    match spec {
        ExperimentSpec::SparsitySweep(params) => run_sweep(params, master_seed, out_dir),
        ExperimentSpec::NormalizationCompare(params) => run_compare(params, master_seed, out_dir),
        ExperimentSpec::PhaseTransition(params) => run_phase(params, master_seed, out_dir),
        ExperimentSpec::VerifyBound(params) => run_bound(params, master_seed, out_dir),
    }
}

fn run_sweep(params: &SweepParams, master_seed: u64, out_dir: &Path) -> CliResult<Vec<String>> {
    if params.k_range.start == 0 || params.k_range.start > params.k_range.end {
        return Err(CliError::Config(
            "k_range must satisfy 1 <= start <= end".into(),
        ));
    }
    let base = ProblemSpec {
        m: params.m,
        n: params.n,
        k_star: params.k_star,
        matrix_variance: params.matrix_variance,
        signal_dist: params.signal_dist,
        noise: params.noise,
        seed: master_seed,
    };
    let spec = SparsitySweepSpec {
        base,
        k_values: (params.k_range.start..=params.k_range.end).collect(),
        algorithms: params.algorithms.clone(),
        trials: params.trials,
        max_iter: params.max_iter,
        stop_tol: params.stop_tol,
    };
    let rows = sparsity_sweep(&spec)?;

    let csv_name = format!("sparsity_sweep_seed{master_seed}.csv");
    let mut w = csv_writer(&out_dir.join(&csv_name))?;
    writeln!(w, "algorithm,k,mean_precision,success_rate").map_err(CliError::io)?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.algorithm, row.k, row.mean_precision, row.success_rate
        )
        .map_err(CliError::io)?;
    }
    drop(w);

    let json_name = format!("sparsity_sweep_seed{master_seed}_summary.json");
    write_summary_json(
        &out_dir.join(&json_name),
        &serde_json::json!({ "params": params, "master_seed": master_seed, "rows": rows }),
    )?;
    Ok(vec![csv_name, json_name])
}

fn run_compare(
    params: &NormalizationParams,
    master_seed: u64,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    let base = ProblemSpec {
        m: params.m,
        n: params.n,
        k_star: params.k_star,
        matrix_variance: params.matrix_variance,
        signal_dist: params.signal_dist,
        noise: params.noise,
        seed: master_seed,
    };
    let spec = NormalizationSpec {
        base,
        algorithms: params.algorithms.clone(),
        trials: params.trials,
        max_iter: params.max_iter,
        stop_tol: params.stop_tol,
    };
    let rows = normalization_compare(&spec)?;

    let csv_name = format!("normalization_seed{master_seed}.csv");
    let mut w = csv_writer(&out_dir.join(&csv_name))?;
    writeln!(w, "algorithm,normalized,mean_precision").map_err(CliError::io)?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{}",
            row.algorithm, row.normalized, row.mean_precision
        )
        .map_err(CliError::io)?;
    }
    drop(w);

    let json_name = format!("normalization_seed{master_seed}_summary.json");
    write_summary_json(
        &out_dir.join(&json_name),
        &serde_json::json!({ "params": params, "master_seed": master_seed, "rows": rows }),
    )?;
    Ok(vec![csv_name, json_name])
}

fn run_phase(params: &PhaseParams, master_seed: u64, out_dir: &Path) -> CliResult<Vec<String>> {
    let m_grid = match &params.m_grid {
        Some(grid) => grid.clone(),
        None => {
            let mut grid: Vec<usize> = (1..=10)
                .map(|i| ((i * params.n) as f64 / 10.0).round() as usize)
                .collect();
            grid.dedup();
            grid
        }
    };
    let spec = PhaseTransitionSpec {
        n: params.n,
        m_grid,
        trials_per_point: params.trials_per_point,
        signal_dist: params.signal_dist,
        algorithms: params.algorithms.clone(),
        bisection_resolution: params.bisection_resolution,
        master_seed,
        max_iter: params.max_iter,
        stop_tol: params.stop_tol,
    };
    let curves = phase_transition(&spec)?;

    let csv_name = format!("phase_transition_seed{master_seed}.csv");
    let mut w = csv_writer(&out_dir.join(&csv_name))?;
    writeln!(
        w,
        "algorithm,m,m_over_n,k_at_half,k_over_m,success_rate_at_k"
    )
    .map_err(CliError::io)?;
    for curve in &curves {
        for point in &curve.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                curve.algorithm,
                point.m,
                point.m_over_n,
                point.k_at_half,
                point.k_over_m,
                point.success_rate_at_k
            )
            .map_err(CliError::io)?;
        }
    }
    drop(w);

    let json_name = format!("phase_transition_seed{master_seed}_summary.json");
    write_summary_json(
        &out_dir.join(&json_name),
        &serde_json::json!({ "params": params, "master_seed": master_seed, "curves": curves }),
    )?;
    Ok(vec![csv_name, json_name])
}

fn resolve_bound_steps(params: &BoundParams, interval: Option<(f64, f64)>) -> CliResult<Vec<f64>> {
    let margin = params.endpoint_margin;
    let mut steps = Vec::new();
    for step in &params.steps {
        let value = match step {
            BoundStepSpec::Value(v) => *v,
            BoundStepSpec::Named(name) => match (name.as_str(), interval) {
                ("unit", _) => 1.0,
                ("lower", Some((lo, hi))) => lo + margin * (hi - lo),
                ("upper", Some((lo, hi))) => hi - margin * (hi - lo),
                ("lower" | "upper", None) => {
                    return Err(CliError::Config(format!(
                        "step {name:?} is undefined for a bound without a step interval"
                    )))
                }
                _ => {
                    return Err(CliError::Config(format!(
                        "unknown step {name:?}; expected lower|unit|upper|<number>"
                    )))
                }
            },
        };
        steps.push(value);
    }
    Ok(steps)
}

fn run_bound(params: &BoundParams, master_seed: u64, out_dir: &Path) -> CliResult<Vec<String>> {
    let problem = certified_instance(
        params.n,
        params.k_star,
        params.perturbation,
        derive_seed(master_seed, 0),
        params.noise,
    )?;
    let op = params.operator;
    let budget = DEFAULT_SUPPORT_BUDGET;
    let level = (3 * params.k_star + 1).min(params.n);

    // resolve the admissible step interval for the named step choices
    let (norms, interval) = match params.theorem {
        BoundTheorem::LinearRate => {
            let norms = NormPair::from_p(params.p)
                .map_err(|e| CliError::Config(format!("invalid p: {e}")))?;
            let (beta, _) = gric(&problem.a, level, norms, budget)?;
            let l = contraction_constants(params.k_star, norms, op.c1(), op.c2()).l;
            let interval = step_interval(params.k_star, norms, beta, l)?;
            (norms, Some(interval))
        }
        BoundTheorem::CoherenceRate => {
            let mu = coherence(&problem.a)?;
            let l = contraction_constants(params.k_star, NormPair::l1_linf(), op.c1(), op.c2()).l;
            if !(mu < 1.0 / l) {
                return Err(CliError::Runtime(format!(
                    "instance not certified: mu = {mu} >= 1/L = {}",
                    1.0 / l
                )));
            }
            (NormPair::l1_linf(), Some(coherence_step_interval(mu, l)))
        }
        BoundTheorem::HardGoldenRate => {
            let delta = ric(&problem.a, level, budget)?;
            if !(delta < golden_threshold()) {
                return Err(CliError::Runtime(format!(
                    "instance not certified: delta = {delta} >= {}",
                    golden_threshold()
                )));
            }
            (NormPair::l2_l2(), None)
        }
    };
    let steps = resolve_bound_steps(params, interval)?;

    let mut reports: Vec<BoundReport> = Vec::new();
    for &s in &steps {
        let config = SolverConfig::new(params.k_star)
            .with_step(ait_core::solver::StepStrategy::constant(s))
            .with_max_iter(params.max_iter);
        reports.push(verify_convergence_bound(
            &problem,
            &config,
            op,
            norms,
            params.theorem,
            budget,
        )?);
    }

    let csv_name = format!("bound_check_seed{master_seed}.csv");
    let mut w = csv_writer(&out_dir.join(&csv_name))?;
    writeln!(
        w,
        "theorem,s,constant,l,rho,noise_term,iterations,holds,max_violation"
    )
    .map_err(CliError::io)?;
    for report in &reports {
        let theorem = match report.theorem {
            BoundTheorem::LinearRate => "linear_rate",
            BoundTheorem::CoherenceRate => "coherence_rate",
            BoundTheorem::HardGoldenRate => "hard_golden_rate",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            theorem,
            report.s,
            report.constant,
            report.l,
            report.rho,
            report.noise_term,
            report.iterations,
            report.holds,
            report.max_violation
        )
        .map_err(CliError::io)?;
    }
    drop(w);

    let json_name = format!("bound_check_seed{master_seed}_summary.json");
    write_summary_json(
        &out_dir.join(&json_name),
        &serde_json::json!({ "params": params, "master_seed": master_seed, "reports": reports }),
    )?;
    Ok(vec![csv_name, json_name])
}
