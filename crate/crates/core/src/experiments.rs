//! Experiment harnesses: sparsity-level sweeps, the column-normalization
//! comparison, 50% phase-transition curves, and per-iteration verification
//! of the linear-rate bounds on exactly certified instances.
//!
//! Every harness is deterministic given its spec: per-trial seeds come
//! from [`derive_seed`] chains, trials are aggregated in a fixed order,
//! and parallel execution cannot change any result.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    coherence, coherence_rate, coherence_step_interval, contraction_constants, convergence_rate,
    golden_ratio, golden_threshold, gric, lp_norm, ric, step_interval, NormPair,
};
use crate::error::{Error, Result};
use crate::probgen::{
    derive_seed, generate, is_success, relative_error, Problem, ProblemSpec, RecoveryNorm,
    SignalDist,
};
use crate::solver::{denormalize_solution, normalize_columns, solve, SolverConfig, StepStrategy};
use crate::thresholding::ThresholdingOperator;

/// One solver variant: a thresholding operator plus a step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm {
    pub operator: ThresholdingOperator,
    pub step: StepStrategy,
}

impl Algorithm {
    pub fn constant(operator: ThresholdingOperator, s: f64) -> Self {
        Self {
            operator,
            step: StepStrategy::constant(s),
        }
    }

    pub fn adaptive(operator: ThresholdingOperator) -> Self {
        Self {
            operator,
            step: StepStrategy::Adaptive,
        }
    }

    /// Table label; adaptive-step variants carry the customary `n` prefix.
    pub fn label(&self) -> String {
        match self.step {
            StepStrategy::Adaptive => format!("n{}", self.operator.name()),
            StepStrategy::Constant { .. } => self.operator.name().to_string(),
        }
    }
}

/// Outcome of a single solve against a known truth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    /// Relative l2 recovery error.
    pub precision: f64,
    pub iterations: usize,
}

/// Solves `problem` with `algorithm` (sparsity level and iteration limits
/// from `config`) and scores the recovery against the ground truth.
pub fn run_trial(
    problem: &Problem,
    algorithm: Algorithm,
    config: &SolverConfig,
) -> Result<TrialOutcome> {
    let mut config = config.clone();
    config.step = algorithm.step;
    let result = solve(&problem.a, &problem.b, &config, algorithm.operator)?;
    score(&result.x, &problem.x_star, result.iterations)
}

fn score(x: &DVector<f64>, truth: &DVector<f64>, iterations: usize) -> Result<TrialOutcome> {
    if x.iter().any(|v| !v.is_finite()) {
        // diverged run: unambiguous failure
        return Ok(TrialOutcome {
            success: false,
            precision: f64::INFINITY,
            iterations,
        });
    }
    Ok(TrialOutcome {
        success: is_success(x, truth)?,
        precision: relative_error(x, truth, RecoveryNorm::L2)?,
        iterations,
    })
}

/// Sweep of the specified sparsity level `k` across its grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsitySweepSpec {
    /// Instance template; its `seed` acts as the master seed.
    pub base: ProblemSpec,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub max_iter: usize,
    pub stop_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub k: usize,
    pub mean_precision: f64,
    pub success_rate: f64,
}

/// Runs every algorithm at every sparsity level over shared per-trial
/// instances and reports mean l2 precision.
pub fn sparsity_sweep(spec: &SparsitySweepSpec) -> Result<Vec<SweepRow>> {
    if spec.k_values.is_empty() {
        return Err(Error::InvalidConfig("k grid must be nonempty".into()));
    }
    if spec.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let problems: Vec<Problem> = (0..spec.trials)
        .map(|t| {
            generate(
                &spec
                    .base
                    .clone()
                    .with_seed(derive_seed(spec.base.seed, t as u64)),
            )
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..spec.algorithms.len())
        .flat_map(|ai| (0..spec.k_values.len()).map(move |ki| (ai, ki)))
        .collect();

    let rows: Vec<Result<SweepRow>> = jobs
        .par_iter()
        .map(|&(ai, ki)| {
            let algorithm = spec.algorithms[ai];
            let k = spec.k_values[ki];
            let config = SolverConfig::new(k)
                .with_max_iter(spec.max_iter)
                .with_stop_tol(spec.stop_tol);
            let mut precision_sum = 0.0;
            let mut successes = 0usize;
            for problem in &problems {
                let outcome = run_trial(problem, algorithm, &config)?;
                precision_sum += outcome.precision.min(1e6);
                successes += outcome.success as usize;
            }
            Ok(SweepRow {
                algorithm: algorithm.label(),
                k,
                mean_precision: precision_sum / spec.trials as f64,
                success_rate: successes as f64 / spec.trials as f64,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Raw-matrix path versus normalize/solve/denormalize pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub base: ProblemSpec,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub max_iter: usize,
    pub stop_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationRow {
    pub algorithm: String,
    pub normalized: bool,
    pub mean_precision: f64,
}

/// Runs each algorithm on the raw matrix and through the normalization
/// pipeline over the same seeds and reports mean l2 precision per path.
pub fn normalization_compare(spec: &NormalizationSpec) -> Result<Vec<NormalizationRow>> {
    if spec.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let problems: Vec<Problem> = (0..spec.trials)
        .map(|t| {
            generate(
                &spec
                    .base
                    .clone()
                    .with_seed(derive_seed(spec.base.seed, t as u64)),
            )
        })
        .collect::<Result<_>>()?;

    let results: Vec<Result<Vec<NormalizationRow>>> = spec
        .algorithms
        .par_iter()
        .map(|&algorithm| {
            let config = SolverConfig::new(spec.base.k_star)
                .with_max_iter(spec.max_iter)
                .with_stop_tol(spec.stop_tol);
            let mut raw_sum = 0.0;
            let mut normalized_sum = 0.0;
            for problem in &problems {
                let raw = run_trial(problem, algorithm, &config)?;
                raw_sum += raw.precision;

                let (a_hat, map) = normalize_columns(&problem.a)?;
                let mut cfg = config.clone();
                cfg.step = algorithm.step;
                let result = solve(&a_hat, &problem.b, &cfg, algorithm.operator)?;
                let x_tilde = denormalize_solution(&result.x, &map);
                normalized_sum += relative_error(&x_tilde, &problem.x_star, RecoveryNorm::L2)?;
            }
            Ok(vec![
                NormalizationRow {
                    algorithm: algorithm.label(),
                    normalized: false,
                    mean_precision: raw_sum / spec.trials as f64,
                },
                NormalizationRow {
                    algorithm: algorithm.label(),
                    normalized: true,
                    mean_precision: normalized_sum / spec.trials as f64,
                },
            ])
        })
        .collect();

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// 50% phase-transition sweep over undersampling ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTransitionSpec {
    pub n: usize,
    pub m_grid: Vec<usize>,
    pub trials_per_point: usize,
    pub signal_dist: SignalDist,
    pub algorithms: Vec<Algorithm>,
    pub bisection_resolution: usize,
    pub master_seed: u64,
    pub max_iter: usize,
    pub stop_tol: f64,
}

impl PhaseTransitionSpec {
    fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() {
            return Err(Error::InvalidConfig("m grid must be nonempty".into()));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "m grid must be strictly increasing".into(),
            ));
        }
        if self.m_grid[0] == 0 || *self.m_grid.last().unwrap() > self.n {
            return Err(Error::InvalidConfig("m grid must lie in [1, n]".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be >= 1".into()));
        }
        if self.bisection_resolution == 0 {
            return Err(Error::InvalidConfig(
                "bisection_resolution must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Largest `k/m` with empirical success rate at least one half, per
/// undersampling ratio. A point with `k_at_half = 0` means even `k = 1`
/// failed the majority vote.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub m_over_n: f64,
    pub k_at_half: usize,
    pub k_over_m: f64,
    pub success_rate_at_k: f64,
}

/// One evaluated sparsity level during the bisection.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BisectionEval {
    pub k: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub algorithm: String,
    pub points: Vec<CurvePoint>,
    /// Evaluation log per grid point, in evaluation order.
    pub evaluations: Vec<Vec<BisectionEval>>,
}

/// Locates, for each `m`, the largest `k` whose empirical success rate over
/// `trials_per_point` seeded trials reaches one half, by bisection to within
/// `bisection_resolution`. Instances are shared across algorithms.
pub fn phase_transition(spec: &PhaseTransitionSpec) -> Result<Vec<PhaseCurve>> {
    spec.validate()?;
    let mut curves = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in &spec.algorithms {
        let mut points = Vec::with_capacity(spec.m_grid.len());
        let mut logs = Vec::with_capacity(spec.m_grid.len());
        for (m_index, &m) in spec.m_grid.iter().enumerate() {
            let point_seed = derive_seed(spec.master_seed, m_index as u64);
            let (point, log) = bisect_transition(spec, algorithm, m, point_seed)?;
            points.push(point);
            logs.push(log);
        }
        curves.push(PhaseCurve {
            algorithm: algorithm.label(),
            points,
            evaluations: logs,
        });
    }
    Ok(curves)
}

fn success_rate_at(
    spec: &PhaseTransitionSpec,
    algorithm: Algorithm,
    m: usize,
    k: usize,
    point_seed: u64,
) -> Result<f64> {
    let config = SolverConfig::new(k)
        .with_max_iter(spec.max_iter)
        .with_stop_tol(spec.stop_tol);
    let k_seed = derive_seed(point_seed, k as u64);
    let outcomes: Vec<Result<bool>> = (0..spec.trials_per_point)
        .into_par_iter()
        .map(|trial| {
            let problem_spec = ProblemSpec {
                m,
                n: spec.n,
                k_star: k,
                matrix_variance: None,
                signal_dist: spec.signal_dist,
                noise: crate::probgen::NoiseSpec::None,
                seed: derive_seed(k_seed, trial as u64),
            };
            let problem = generate(&problem_spec)?;
            Ok(run_trial(&problem, algorithm, &config)?.success)
        })
        .collect();
    let mut successes = 0usize;
    for outcome in outcomes {
        successes += outcome? as usize;
    }
    Ok(successes as f64 / spec.trials_per_point as f64)
}

fn bisect_transition(
    spec: &PhaseTransitionSpec,
    algorithm: Algorithm,
    m: usize,
    point_seed: u64,
) -> Result<(CurvePoint, Vec<BisectionEval>)> {
    let mut log: Vec<BisectionEval> = Vec::new();
    let mut cache: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    let mut eval = |k: usize, log: &mut Vec<BisectionEval>| -> Result<f64> {
        if let Some(&rate) = cache.get(&k) {
            return Ok(rate);
        }
        let rate = success_rate_at(spec, algorithm, m, k, point_seed)?;
        cache.insert(k, rate);
        log.push(BisectionEval {
            k,
            success_rate: rate,
        });
        Ok(rate)
    };

    let point = |k: usize, rate: f64| CurvePoint {
        m,
        m_over_n: m as f64 / spec.n as f64,
        k_at_half: k,
        k_over_m: k as f64 / m as f64,
        success_rate_at_k: rate,
    };

    let rate_low = eval(1, &mut log)?;
    if rate_low < 0.5 {
        return Ok((point(0, 0.0), log));
    }
    if m == 1 {
        return Ok((point(1, rate_low), log));
    }
    let rate_high = eval(m, &mut log)?;
    if rate_high >= 0.5 {
        return Ok((point(m, rate_high), log));
    }

    let (mut lo, mut hi) = (1usize, m);
    let mut lo_rate = rate_low;
    while hi - lo > spec.bisection_resolution {
        let mid = lo + (hi - lo) / 2;
        let rate = eval(mid, &mut log)?;
        if rate >= 0.5 {
            lo = mid;
            lo_rate = rate;
        } else {
            hi = mid;
        }
    }
    Ok((point(lo, lo_rate), log))
}

/// Builds a unit-column instance whose constants are exactly enumerable: a
/// normalized `eta`-perturbed identity with a `k_star`-sparse truth whose
/// nonzeros are bounded away from zero. Suitable for certifying the rate
/// hypotheses at small `n`.
pub fn certified_instance(
    n: usize,
    k_star: usize,
    perturbation: f64,
    seed: u64,
    noise: crate::probgen::NoiseSpec,
) -> Result<Problem> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    if k_star == 0 || k_star > n {
        return Err(Error::InvalidConfig(format!(
            "certified instance needs 1 <= k_star <= n, got k_star = {k_star}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye + perturbation * rng.sample::<f64, _>(StandardNormal)
    });
    let (a, _) = normalize_columns(&raw)?;
    let mut support = rand::seq::index::sample(&mut rng, n, k_star).into_vec();
    let mut x_star = DVector::zeros(n);
    for &i in &support {
        let magnitude = 1.0 + rng.sample::<f64, _>(StandardNormal).abs();
        x_star[i] = if rng.gen_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
    }
    let signal = &a * &x_star;
    let epsilon = match noise {
        crate::probgen::NoiseSpec::None => DVector::zeros(n),
        crate::probgen::NoiseSpec::SnrDb { value } => {
            let raw = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let scale = signal.norm() / raw.norm() * 10f64.powf(-value / 20.0);
            scale * raw
        }
    };
    let b = &signal + &epsilon;
    support.sort_unstable();
    Ok(Problem {
        a,
        b,
        x_star,
        epsilon,
        support,
    })
}

/// Which per-iteration bound to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTheorem {
    /// Geometric bound with `gamma_s = |1-s| kappa + s beta` at an exactly
    /// computable norm pair.
    LinearRate,
    /// Improved `(1, inf)` bound with `gamma_s = max(|1-s|, s mu)`.
    CoherenceRate,
    /// Hard-operator bound with `rho = ((sqrt 5 + 1)/2) delta` at `s = 1`.
    HardGoldenRate,
}

/// Result of checking one bound along a solver trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: BoundTheorem,
    pub s: f64,
    /// The matrix constant entering the rate (`beta`, `mu`, or `delta`).
    pub constant: f64,
    pub l: f64,
    pub rho: f64,
    /// Steady-state noise term added to the geometric decay.
    pub noise_term: f64,
    pub iterations: usize,
    pub holds: bool,
    /// Largest `lhs - rhs` over all iterations (negative when the bound has
    /// slack everywhere).
    pub max_violation: f64,
    /// `(t, error, bound)` per iteration.
    pub per_iteration: Vec<(usize, f64, f64)>,
}

/// Runs the solver on a certified instance and checks the per-iteration
/// error against the geometric bound. Errors out (rather than reporting a
/// vacuous pass) when the theorem hypothesis cannot be certified.
pub fn verify_convergence_bound(
    problem: &Problem,
    config: &SolverConfig,
    op: ThresholdingOperator,
    norms: NormPair,
    theorem: BoundTheorem,
    budget: u128,
) -> Result<BoundReport> {
    let k_star = problem.support.len();
    if config.k != k_star {
        return Err(Error::HypothesisViolated(format!(
            "rate bounds assume k = k*; got k = {}, k* = {k_star}",
            config.k
        )));
    }
    let s = match config.step {
        StepStrategy::Constant { s } => s,
        StepStrategy::Adaptive => {
            return Err(Error::InvalidConfig(
                "bound verification requires a constant step size".into(),
            ))
        }
    };
    let n = problem.a.ncols();
    let level = (3 * k_star + 1).min(n);

    let (constant, l, rho, error_p, noise_q) = match theorem {
        BoundTheorem::LinearRate => {
            if !(norms.is_l1_linf() || norms.is_l2_l2()) {
                return Err(Error::InvalidConfig(
                    "bound verification needs an exactly computable norm pair".into(),
                ));
            }
            let (beta, exact) = gric(&problem.a, level, norms, budget)?;
            debug_assert!(exact);
            let l = contraction_constants(k_star, norms, op.c1(), op.c2()).l;
            if !(beta < 1.0 / l) {
                return Err(Error::HypothesisViolated(format!(
                    "beta_{level} = {beta} is not below 1/L = {}",
                    1.0 / l
                )));
            }
            let (lo, hi) = step_interval(k_star, norms, beta, l)?;
            if !(s > lo && s < hi) {
                return Err(Error::HypothesisViolated(format!(
                    "step {s} lies outside the admissible interval ({lo}, {hi})"
                )));
            }
            let (_, rho) = convergence_rate(s, k_star, norms, beta, l);
            (beta, l, rho, norms.p(), norms.q())
        }
        BoundTheorem::CoherenceRate => {
            let mu = coherence(&problem.a)?;
            let l = contraction_constants(k_star, NormPair::l1_linf(), op.c1(), op.c2()).l;
            if !(mu > 0.0 && mu < 1.0 / l) {
                return Err(Error::HypothesisViolated(format!(
                    "coherence {mu} is not inside (0, 1/L) with 1/L = {}",
                    1.0 / l
                )));
            }
            let (lo, hi) = coherence_step_interval(mu, l);
            if !(s > lo && s < hi) {
                return Err(Error::HypothesisViolated(format!(
                    "step {s} lies outside the admissible interval ({lo}, {hi})"
                )));
            }
            let (_, rho) = coherence_rate(s, mu, l);
            (mu, l, rho, 1.0, f64::INFINITY)
        }
        BoundTheorem::HardGoldenRate => {
            if op != ThresholdingOperator::Hard {
                return Err(Error::HypothesisViolated(
                    "the golden-ratio rate applies to the hard operator only".into(),
                ));
            }
            if s != 1.0 {
                return Err(Error::HypothesisViolated(
                    "the golden-ratio rate assumes unit step size".into(),
                ));
            }
            let delta = ric(&problem.a, level, budget)?;
            if !(delta < golden_threshold()) {
                return Err(Error::HypothesisViolated(format!(
                    "delta_{level} = {delta} is not below {}",
                    golden_threshold()
                )));
            }
            (delta, golden_ratio(), hard_rho(delta), 2.0, 2.0)
        }
    };

    let at_eps = problem.a.tr_mul(&problem.epsilon);
    let noise_norm = lp_norm(at_eps.as_slice(), noise_q);
    let noise_term = match theorem {
        BoundTheorem::HardGoldenRate => golden_ratio() / (1.0 - rho) * noise_norm,
        _ => s * l / (1.0 - rho) * noise_norm,
    };

    let mut cfg = config.clone();
    cfg.record_trace = true;
    cfg.diagnostic_truth = Some(problem.x_star.clone());
    let result = solve(&problem.a, &problem.b, &cfg, op)?;

    let x0 = cfg.x0.clone().unwrap_or_else(|| DVector::zeros(n));
    let initial_err = lp_norm((&problem.x_star - &x0).as_slice(), error_p);
    let slack = 1e-12 * (initial_err + noise_term);

    let mut per_iteration = Vec::with_capacity(result.trace.records.len());
    let mut max_violation = f64::NEG_INFINITY;
    let mut holds = true;
    for record in &result.trace.records {
        let (e1, e2, einf) = record.errors.expect("trace carries truth errors");
        let lhs = if error_p == 1.0 {
            e1
        } else if error_p == 2.0 {
            e2
        } else {
            einf
        };
        let rhs = rho.powi(record.t as i32) * initial_err + noise_term;
        max_violation = max_violation.max(lhs - rhs);
        if lhs > rhs + slack {
            holds = false;
        }
        per_iteration.push((record.t, lhs, rhs));
    }

    Ok(BoundReport {
        theorem,
        s,
        constant,
        l,
        rho,
        noise_term,
        iterations: result.iterations,
        holds,
        max_violation: if per_iteration.is_empty() {
            f64::NEG_INFINITY
        } else {
            max_violation
        },
        per_iteration,
    })
}

fn hard_rho(delta: f64) -> f64 {
    golden_ratio() * delta
}
