//! The adaptively iterative thresholding solver.
//!
//! Each iteration takes a gradient (Landweber) step
//! `z = x - s*A^T(A x - b)`, sets the threshold `tau` to the `(k+1)`-th
//! largest magnitude of `z`, and applies the chosen thresholding operator.
//! The retained support is always the `k` largest components of `z`, so
//! every iterate has at most `k` nonzeros.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::lp_norm;
use crate::error::{Error, Result};
use crate::thresholding::{apply_threshold, ThresholdingOperator};

/// Step-size strategy: a fixed `s > 0` or the residual-adaptive rule
/// `s = ||g_I||^2 / ||A_I g_I||^2` with `g = A^T(b - A x)` and `I` the
/// support of the current iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStrategy {
    Constant { s: f64 },
    Adaptive,
}

impl StepStrategy {
    pub fn constant(s: f64) -> Self {
        Self::Constant { s }
    }
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Specified sparsity level; the iterate keeps the `k` largest components.
    pub k: usize,
    pub step: StepStrategy,
    pub max_iter: usize,
    /// Relative iterate-change stopping tolerance.
    pub stop_tol: f64,
    pub record_trace: bool,
    /// Initial point; zero when absent.
    pub x0: Option<DVector<f64>>,
    /// Ground truth, when known: enables per-iteration error columns in the
    /// trace and the threshold diagnostic.
    pub diagnostic_truth: Option<DVector<f64>>,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            step: StepStrategy::constant(1.0),
            max_iter: 2000,
            stop_tol: 1e-12,
            record_trace: false,
            x0: None,
            diagnostic_truth: None,
        }
    }

    pub fn with_step(mut self, step: StepStrategy) -> Self {
        self.step = step;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_truth(mut self, truth: DVector<f64>) -> Self {
        self.diagnostic_truth = Some(truth);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("sparsity level k must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if let StepStrategy::Constant { s } = self.step {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "constant step size must be > 0, got {s}"
                )));
            }
        }
        if self.stop_tol < 0.0 {
            return Err(Error::InvalidConfig("stop_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// State of one AIT iterate.
#[derive(Debug, Clone)]
pub struct IterState {
    /// Current iterate, supported on `support`.
    pub x: DVector<f64>,
    /// Landweber point the iterate was thresholded from.
    pub z: DVector<f64>,
    /// Threshold used: the `(k+1)`-th largest magnitude of `z` (0 if `k >= n`).
    pub tau: f64,
    /// Indices of the `k` largest magnitudes of `z`, ascending.
    pub support: Vec<usize>,
    /// Iteration counter.
    pub t: usize,
}

impl IterState {
    /// Initial state at `t = 0`.
    pub fn initial(x0: DVector<f64>) -> Self {
        let support = (0..x0.len()).filter(|&i| x0[i] != 0.0).collect();
        Self {
            z: x0.clone(),
            x: x0,
            tau: 0.0,
            support,
            t: 0,
        }
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub tau: f64,
    pub step: f64,
    pub residual_l2: f64,
    pub support: Vec<usize>,
    /// `(l1, l2, linf)` errors against the configured truth.
    pub errors: Option<(f64, f64, f64)>,
}

/// Per-iteration record of a solve; empty unless tracing was requested.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: DVector<f64>,
    pub trace: SolveTrace,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// Column-norm record for the normalization pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationMap {
    /// Original column norms (the diagonal of the normalization factor).
    pub lambda_diag: Vec<f64>,
}

/// Gradient step `z = x - s*A^T(A x - b)`.
pub fn gradient_step(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    s: f64,
) -> Result<DVector<f64>> {
    check_dims(a, b)?;
    if x.len() != a.ncols() {
        return Err(Error::Dimension(format!(
            "x has length {}, expected {}",
            x.len(),
            a.ncols()
        )));
    }
    let residual = a * x - b;
    Ok(x - s * a.tr_mul(&residual))
}

/// Indices of the `k` largest magnitudes of `z` (ties broken toward the
/// lowest index) together with the `(k+1)`-th largest magnitude, or 0 when
/// fewer than `k + 1` components exist.
pub fn select_support_and_tau(z: &DVector<f64>, k: usize) -> (Vec<usize>, f64) {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| z[j].abs().total_cmp(&z[i].abs()).then_with(|| i.cmp(&j)));
    let kept = k.min(n);
    let mut support: Vec<usize> = order[..kept].to_vec();
    support.sort_unstable();
    let tau = if k < n { z[order[k]].abs() } else { 0.0 };
    (support, tau)
}

/// Residual-adaptive step size `||g_I||^2 / ||A_I g_I||^2` with
/// `g = A^T(b - A x)`. Falls back to 1 when the restricted gradient is
/// degenerate (zero residual or empty support).
pub fn adaptive_step(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    support: &[usize],
) -> f64 {
    let residual = b - a * x;
    let g = a.tr_mul(&residual);
    adaptive_step_from_gradient(a, &g, support)
}

/// Same as [`adaptive_step`] but reusing a precomputed gradient direction
/// (sign-insensitive: only squared norms enter).
fn adaptive_step_from_gradient(a: &DMatrix<f64>, g: &DVector<f64>, support: &[usize]) -> f64 {
    let mut numerator = 0.0;
    for &i in support {
        numerator += g[i] * g[i];
    }
    let mut projected = DVector::<f64>::zeros(a.nrows());
    for &i in support {
        projected.axpy(g[i], &a.column(i), 1.0);
    }
    let denominator = projected.norm_squared();
    if denominator < 1e-14 * (numerator + 1.0) {
        1.0
    } else {
        numerator / denominator
    }
}

/// One AIT iteration from `state`.
pub fn ait_step(
    state: &IterState,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    config: &SolverConfig,
    op: ThresholdingOperator,
) -> Result<IterState> {
    check_dims(a, b)?;
    let (next, _step) = ait_step_inner(state, a, b, config, op)?;
    Ok(next)
}

fn ait_step_inner(
    state: &IterState,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    config: &SolverConfig,
    op: ThresholdingOperator,
) -> Result<(IterState, f64)> {
    let residual = a * &state.x - b;
    let g = a.tr_mul(&residual);
    let s = match config.step {
        StepStrategy::Constant { s } => s,
        StepStrategy::Adaptive => adaptive_step_from_gradient(a, &g, &state.support),
    };
    let z = &state.x - s * &g;
    let (support, tau) = select_support_and_tau(&z, config.k);
    let mut x = DVector::zeros(z.len());
    for &i in &support {
        x[i] = apply_threshold(op, z[i], tau);
    }
    let next = IterState {
        x,
        z,
        tau,
        support,
        t: state.t + 1,
    };
    Ok((next, s))
}

/// Runs the AIT iteration until the relative iterate change drops below
/// `stop_tol` or `max_iter` is reached. Deterministic given its inputs.
pub fn solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    config: &SolverConfig,
    op: ThresholdingOperator,
) -> Result<SolveResult> {
    config.validate()?;
    op.validate()?;
    check_dims(a, b)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(
            "matrix contains non-finite entries".into(),
        ));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rhs contains non-finite entries".into()));
    }
    let n = a.ncols();
    let x0 = match &config.x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(Error::Dimension(format!(
                    "x0 has length {}, expected {}",
                    x0.len(),
                    n
                )));
            }
            x0.clone()
        }
        None => DVector::zeros(n),
    };

    let mut state = IterState::initial(x0);
    let mut trace = SolveTrace::default();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        let (next, step) = ait_step_inner(&state, a, b, config, op)?;
        iterations = next.t;
        if config.record_trace {
            let residual_l2 = (a * &next.x - b).norm();
            let errors = config.diagnostic_truth.as_ref().map(|truth| {
                let diff = &next.x - truth;
                (diff.abs().sum(), diff.norm(), diff.amax())
            });
            trace.records.push(TraceRecord {
                t: next.t,
                tau: next.tau,
                step,
                residual_l2,
                support: next.support.clone(),
                errors,
            });
        }
        // Divergence guard: a blown-up iterate can never recover, so stop
        // instead of spinning until max_iter. The magnitude cap also keeps
        // the norm comparisons below from overflowing into a spurious
        // "converged" verdict.
        let magnitude = next.x.amax();
        if !magnitude.is_finite() || magnitude > 1e100 {
            state = next;
            break;
        }
        let change = (&next.x - &state.x).norm();
        let scale = state.x.norm().max(1.0);
        state = next;
        if change <= config.stop_tol * scale {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SolveResult {
        x: state.x,
        trace,
        status,
        iterations,
    })
}

/// Rescales every column of `a_raw` to unit l2 norm, recording the original
/// norms.
pub fn normalize_columns(a_raw: &DMatrix<f64>) -> Result<(DMatrix<f64>, NormalizationMap)> {
    let mut a = a_raw.clone();
    let mut lambda = Vec::with_capacity(a.ncols());
    for j in 0..a.ncols() {
        let norm = a.column(j).norm();
        if norm <= 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        a.column_mut(j).scale_mut(1.0 / norm);
        lambda.push(norm);
    }
    Ok((
        a,
        NormalizationMap {
            lambda_diag: lambda,
        },
    ))
}

/// Maps a solution computed against the normalized matrix back to the raw
/// column scaling: `x_i / lambda_i`.
pub fn denormalize_solution(x_hat: &DVector<f64>, map: &NormalizationMap) -> DVector<f64> {
    DVector::from_iterator(
        x_hat.len(),
        x_hat.iter().zip(&map.lambda_diag).map(|(&xi, &li)| xi / li),
    )
}

/// Checks the threshold bound `tau <= ||(z - truth)|_{I+}||_q` where `I+`
/// holds the largest `k + 1` magnitudes of `z`. Expected to hold at every
/// iteration whenever the specified sparsity level covers the truth.
pub fn lemma3_diagnostic(state: &IterState, truth: &DVector<f64>, q: f64) -> bool {
    let k = state.support.len();
    let (top, _) = select_support_and_tau(&state.z, k + 1);
    let diff: Vec<f64> = top.iter().map(|&i| state.z[i] - truth[i]).collect();
    state.tau <= lp_norm(&diff, q)
}

fn check_dims(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows but rhs has length {}",
            a.nrows(),
            b.len()
        )));
    }
    Ok(())
}
