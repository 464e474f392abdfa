//! Measurement-matrix constants and convergence certificates.
//!
//! Coherence and the restricted isometry constant are computed exactly
//! (the latter by support enumeration under an explicit budget). The
//! `(p, q)`-generalized constant is exact at `(1, inf)` and `(2, 2)` and a
//! certified lower bound elsewhere. On top of these sit the contraction
//! constants `L1, L2, L`, the admissible step interval `(s_lo, s_hi)`, the
//! per-iteration rates `gamma_s, rho_s`, and the uniqueness checks with a
//! brute-force enumeration oracle.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thresholding::ThresholdingOperator;

/// Default cap on the number of enumerated supports.
pub const DEFAULT_SUPPORT_BUDGET: u128 = 2_000_000;

/// `(sqrt(5) + 1) / 2`.
pub fn golden_ratio() -> f64 {
    (5.0_f64.sqrt() + 1.0) / 2.0
}

/// `(sqrt(5) - 1) / 2`, the RIC threshold of the hard-operator rate bound.
pub fn golden_threshold() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// A conjugate exponent pair: `p in [1, inf)`, `q in (1, inf]` with
/// `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    p: f64,
    q: f64,
}

impl NormPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) || p.is_infinite() {
            return Err(Error::InvalidConfig(format!(
                "p must lie in [1, inf), got {p}"
            )));
        }
        if !(q > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "q must lie in (1, inf], got {q}"
            )));
        }
        let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
        if (1.0 / p + inv_q - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "(p, q) = ({p}, {q}) is not a conjugate pair"
            )));
        }
        Ok(Self { p, q })
    }

    /// Conjugate pair determined by `p`.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p >= 1.0) || p.is_infinite() {
            return Err(Error::InvalidConfig(format!(
                "p must lie in [1, inf), got {p}"
            )));
        }
        let q = if p == 1.0 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        };
        Ok(Self { p, q })
    }

    pub fn l1_linf() -> Self {
        Self {
            p: 1.0,
            q: f64::INFINITY,
        }
    }

    pub fn l2_l2() -> Self {
        Self { p: 2.0, q: 2.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_l1_linf(&self) -> bool {
        self.p == 1.0
    }

    pub fn is_l2_l2(&self) -> bool {
        self.p == 2.0 && self.q == 2.0
    }

    fn inv_p(&self) -> f64 {
        1.0 / self.p
    }

    fn inv_q(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            1.0 / self.q
        }
    }

    /// `(2 k*)^{max(1/q - 1/p, 0)}`, the sparse-vector norm conversion factor
    /// appearing in the step interval and the rate prefactor.
    pub fn kappa(&self, k_star: usize) -> f64 {
        let e = (self.inv_q() - self.inv_p()).max(0.0);
        (2.0 * k_star as f64).powf(e)
    }

    pub fn q_label(&self) -> String {
        if self.q.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.q)
        }
    }
}

/// `l_p` norm of a slice, `p in [1, inf]`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().fold(0.0, |acc, v| acc.max(v.abs()));
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return values.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let scale = values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

/// Coherence: the largest normalized inner product between distinct columns.
pub fn coherence(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.ncols();
    if n < 2 {
        return Err(Error::Domain(
            "coherence requires at least two columns".into(),
        ));
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let mut mu: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let inner = a.column(i).dot(&a.column(j)).abs();
            mu = mu.max(inner / (norms[i] * norms[j]));
        }
    }
    Ok(mu)
}

fn require_unit_columns(a: &DMatrix<f64>) -> Result<()> {
    for j in 0..a.ncols() {
        let norm = a.column(j).norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnitColumns { index: j, norm });
        }
    }
    Ok(())
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    result
}

fn check_budget(n: usize, k: usize, budget: u128) -> Result<u128> {
    let count = binomial(n, k);
    if count > budget {
        return Err(Error::BudgetExceeded {
            n,
            k,
            count,
            budget,
        });
    }
    Ok(count)
}

/// Gram deviation `I - A_S^T A_S` read out of the precomputed Gram matrix.
fn gram_deviation(gram: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    let k = support.len();
    DMatrix::from_fn(k, k, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - gram[(support[r], support[c])]
    })
}

fn spectral_abs_norm(sym: DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return 0.0;
    }
    sym.symmetric_eigen().eigenvalues.amax()
}

/// Restricted isometry constant `delta_k`, exact by enumeration of all
/// size-`k` supports (eigenvalue interlacing makes smaller supports
/// redundant).
pub fn ric(a: &DMatrix<f64>, k: usize, budget: u128) -> Result<f64> {
    require_unit_columns(a)?;
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "ric requires 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    check_budget(n, k, budget)?;
    let gram = a.tr_mul(a);
    let mut delta: f64 = 0.0;
    for support in (0..n).combinations(k) {
        delta = delta.max(spectral_abs_norm(gram_deviation(&gram, &support)));
    }
    Ok(delta)
}

/// Controls for the lower-bound search used at non-special `(p, q)` pairs.
#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub restarts: usize,
    pub steps: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            steps: 500,
        }
    }
}

/// Generalized restricted isometry constant `beta_{k,p,q}`.
///
/// Exact at `(1, inf)` (max absolute Gram-deviation entry, which equals the
/// coherence for `k >= 2` on unit-column matrices) and at `(2, 2)` (equals
/// `delta_k`). Other conjugate pairs return a multi-start lower bound with
/// `exact = false`.
pub fn gric(a: &DMatrix<f64>, k: usize, norms: NormPair, budget: u128) -> Result<(f64, bool)> {
    gric_with(a, k, norms, budget, AscentOptions::default())
}

pub fn gric_with(
    a: &DMatrix<f64>,
    k: usize,
    norms: NormPair,
    budget: u128,
    ascent: AscentOptions,
) -> Result<(f64, bool)> {
    require_unit_columns(a)?;
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "gric requires 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if norms.is_l1_linf() {
        let gram = a.tr_mul(a);
        let mut value: f64 = 0.0;
        for i in 0..n {
            value = value.max((1.0 - gram[(i, i)]).abs());
        }
        if k >= 2 {
            for i in 0..n {
                for j in (i + 1)..n {
                    value = value.max(gram[(i, j)].abs());
                }
            }
        }
        return Ok((value, true));
    }
    if norms.is_l2_l2() {
        return Ok((ric(a, k, budget)?, true));
    }
    check_budget(n, k, budget)?;
    let gram = a.tr_mul(a);
    let mut best: f64 = 0.0;
    for (index, support) in (0..n).combinations(k).enumerate() {
        let b = gram_deviation(&gram, &support);
        best = best.max(operator_norm_lower_bound(&b, norms, ascent, index as u64));
    }
    Ok((best, false))
}

/// Supremum of `|z^T (A^T A - I) z| / ||z||_p^2` over `k`-sparse `z`.
/// Exact for `p = 2` (it coincides with `delta_k`); a multi-start ascent
/// lower bound otherwise.
pub fn quadratic_form_sup(a: &DMatrix<f64>, k: usize, p: f64, budget: u128) -> Result<f64> {
    quadratic_form_sup_with(a, k, p, budget, AscentOptions::default())
}

pub fn quadratic_form_sup_with(
    a: &DMatrix<f64>,
    k: usize,
    p: f64,
    budget: u128,
    ascent: AscentOptions,
) -> Result<f64> {
    require_unit_columns(a)?;
    if p == 2.0 {
        return ric(a, k, budget);
    }
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "quadratic_form_sup requires 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    check_budget(n, k, budget)?;
    let gram = a.tr_mul(a);
    let mut best: f64 = 0.0;
    for (index, support) in (0..n).combinations(k).enumerate() {
        let b = gram_deviation(&gram, &support);
        best = best.max(quadratic_form_lower_bound(&b, p, ascent, index as u64));
    }
    Ok(best)
}

/// Point on the `l_p` sphere maximizing `<g, x>`.
fn lp_linear_maximizer(g: &DVector<f64>, p: f64) -> DVector<f64> {
    let exponent = 1.0 / (p - 1.0);
    let mut x = g.map(|gi| gi.signum() * gi.abs().powf(exponent));
    let norm = lp_norm(x.as_slice(), p);
    if norm > 0.0 {
        x /= norm;
    }
    x
}

fn ascent_starts(dim: usize, p: f64, restarts: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut starts = Vec::new();
    // l1-ball vertices and two-coordinate cross terms
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        starts.push(e);
    }
    let pair_scale = 0.5_f64.powf(1.0 / p);
    for i in 0..dim {
        for j in (i + 1)..dim {
            for sign in [1.0, -1.0] {
                let mut v = DVector::zeros(dim);
                v[i] = pair_scale;
                v[j] = sign * pair_scale;
                starts.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xA17C0DE ^ seed);
    for _ in 0..restarts {
        let mut v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = lp_norm(v.as_slice(), p);
        if norm > 0.0 {
            v /= norm;
        }
        starts.push(v);
    }
    starts
}

/// Lower bound on the `p -> q` operator norm of a symmetric matrix via the
/// nonlinear power iteration, seeded from vertices, random points, and the
/// dominant eigenvector.
fn operator_norm_lower_bound(
    b: &DMatrix<f64>,
    norms: NormPair,
    ascent: AscentOptions,
    seed: u64,
) -> f64 {
    let dim = b.nrows();
    let (p, q) = (norms.p(), norms.q());
    let mut starts = ascent_starts(dim, p, ascent.restarts, seed);
    let eigen = b.clone().symmetric_eigen();
    let top = eigen.eigenvalues.iamax();
    let mut v = eigen.eigenvectors.column(top).into_owned();
    let norm = lp_norm(v.as_slice(), p);
    if norm > 0.0 {
        v /= norm;
        starts.push(v);
    }

    let objective = |x: &DVector<f64>| {
        let nx = lp_norm(x.as_slice(), p);
        if nx == 0.0 {
            0.0
        } else {
            lp_norm((b * x).as_slice(), q) / nx
        }
    };

    let mut best: f64 = 0.0;
    for mut x in starts {
        best = best.max(objective(&x));
        for _ in 0..ascent.steps {
            let y = b * &x;
            let ny = lp_norm(y.as_slice(), q);
            if ny == 0.0 {
                break;
            }
            // gradient of ||y||_q, then the dual step back to the l_p sphere
            let grad = y.map(|yi| yi.signum() * (yi.abs() / ny).powf(q - 1.0));
            let g = b * grad;
            let next = lp_linear_maximizer(&g, p);
            let moved = (&next - &x).amax();
            x = next;
            best = best.max(objective(&x));
            if moved < 1e-14 {
                break;
            }
        }
    }
    best
}

fn quadratic_form_lower_bound(b: &DMatrix<f64>, p: f64, ascent: AscentOptions, seed: u64) -> f64 {
    let dim = b.nrows();
    let mut starts = ascent_starts(dim, p, ascent.restarts, seed);
    let eigen = b.clone().symmetric_eigen();
    for col in 0..dim {
        let mut v = eigen.eigenvectors.column(col).into_owned();
        let norm = lp_norm(v.as_slice(), p);
        if norm > 0.0 {
            v /= norm;
            starts.push(v);
        }
    }

    let objective = |x: &DVector<f64>| {
        let nx = lp_norm(x.as_slice(), p);
        if nx == 0.0 {
            0.0
        } else {
            (x.dot(&(b * x))).abs() / (nx * nx)
        }
    };

    let mut best: f64 = 0.0;
    for start in starts {
        for sign in [1.0, -1.0] {
            let mut x = start.clone();
            best = best.max(objective(&x));
            for _ in 0..ascent.steps {
                let g = sign * (b * &x);
                let next = lp_linear_maximizer(&g, p);
                let moved = (&next - &x).amax();
                x = next;
                best = best.max(objective(&x));
                if moved < 1e-14 {
                    break;
                }
            }
        }
    }
    best
}

/// Verifies the sparse-vector norm equivalences for `x` with `k = ||x||_0`:
/// the ordered form `||x||_p <= ||x||_q <= k^{1/q - 1/p} ||x||_p` (when
/// `q <= p`) and the unified form `||x||_p <= k^{max(1/p - 1/q, 0)} ||x||_q`.
pub fn norm_equivalence_check(x: &[f64], p: f64, q: f64) -> bool {
    let k = x.iter().filter(|v| **v != 0.0).count();
    if k == 0 {
        return true;
    }
    let kf = k as f64;
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let np = lp_norm(x, p);
    let nq = lp_norm(x, q);
    let slack = |rhs: f64| 1e-12 * rhs.max(1.0);

    let unified_rhs = kf.powf((inv(p) - inv(q)).max(0.0)) * nq;
    let mut ok = np <= unified_rhs + slack(unified_rhs);

    if q <= p {
        let ordered_rhs = kf.powf(inv(q) - inv(p)) * np;
        ok = ok && np <= nq + slack(nq) && nq <= ordered_rhs + slack(ordered_rhs);
    }
    ok
}

/// The contraction constants of the linear-rate bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContractionConstants {
    pub l1: f64,
    pub l2: f64,
    /// `min(L1^{1/p}, L2^{1/p})`.
    pub l: f64,
}

/// `L1 = 2^{p-1} k*^{max(1 - p/q, 0)} + (2^{p-1} - c2^p + 1) k*`,
/// `L2 = 2^p (2k*)^{max(1 - p/q, 0)} + 2^{p-1} c1^p k*`,
/// `L = min(L1^{1/p}, L2^{1/p})`.
pub fn contraction_constants(
    k_star: usize,
    norms: NormPair,
    c1: f64,
    c2: f64,
) -> ContractionConstants {
    let p = norms.p();
    let k = k_star as f64;
    let exp = (1.0 - p * norms.inv_q()).max(0.0);
    let two_pm1 = 2f64.powf(p - 1.0);
    let l1 = two_pm1 * k.powf(exp) + (two_pm1 - c2.powf(p) + 1.0) * k;
    let l2 = 2f64.powf(p) * (2.0 * k).powf(exp) + two_pm1 * c1.powf(p) * k;
    let l = l1.powf(1.0 / p).min(l2.powf(1.0 / p));
    ContractionConstants { l1, l2, l }
}

/// Admissible step interval `(s_lo, s_hi)` around 1; requires `beta < 1/L`.
pub fn step_interval(k_star: usize, norms: NormPair, beta: f64, l: f64) -> Result<(f64, f64)> {
    if !(beta < 1.0 / l) {
        return Err(Error::HypothesisViolated(format!(
            "step interval needs beta < 1/L, got beta = {beta}, 1/L = {}",
            1.0 / l
        )));
    }
    let kappa = norms.kappa(k_star);
    let s_lo = (kappa - 1.0 / l) / (kappa - beta);
    let s_hi = (kappa + 1.0 / l) / (kappa + beta);
    Ok((s_lo, s_hi))
}

/// Rate constants `gamma_s = |1 - s| (2k*)^{max(1/q - 1/p, 0)} + s*beta` and
/// `rho_s = gamma_s * L`.
pub fn convergence_rate(s: f64, k_star: usize, norms: NormPair, beta: f64, l: f64) -> (f64, f64) {
    let gamma = (1.0 - s).abs() * norms.kappa(k_star) + s * beta;
    (gamma, gamma * l)
}

/// Improved `(1, inf)` rate: `gamma_s = max(|1 - s|, s*mu)`.
pub fn coherence_rate(s: f64, mu: f64, l: f64) -> (f64, f64) {
    let gamma = (1.0 - s).abs().max(s * mu);
    (gamma, gamma * l)
}

/// Admissible step range of the coherence-based rate:
/// `(1 - 1/L, min(1/(L*mu), 1 + 1/L))`.
pub fn coherence_step_interval(mu: f64, l: f64) -> (f64, f64) {
    let hi = if mu > 0.0 {
        (1.0 / (l * mu)).min(1.0 + 1.0 / l)
    } else {
        1.0 + 1.0 / l
    };
    (1.0 - 1.0 / l, hi)
}

/// Hard-operator RIC rate `rho = ((sqrt(5) + 1)/2) * delta`.
pub fn hard_golden_rate(delta: f64) -> f64 {
    golden_ratio() * delta
}

/// Uniqueness condition `0 < beta_{2k,p,q} < (2k)^{min(1/q - 1/p, 0)}`;
/// reduces to `mu < 1/(2k)` at `(1, inf)` and `delta_{2k} < 1` at `(2, 2)`.
pub fn check_uniqueness_condition(beta_2k: f64, k: usize, norms: NormPair) -> bool {
    let bound = (2.0 * k as f64).powf((norms.inv_q() - norms.inv_p()).min(0.0));
    beta_2k > 0.0 && beta_2k < bound
}

/// One fitted sparse representation found by enumeration.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub support: Vec<usize>,
    pub x: DVector<f64>,
    pub residual: f64,
}

/// Enumerates every support of size at most `k_max`, least-squares fits `b`
/// on it, and returns the deduplicated solutions with residual at most
/// `fit_tol`. Supports are visited smallest-first, so each distinct solution
/// is reported with its sparsest support.
pub fn brute_force_sparsest(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    k_max: usize,
    fit_tol: f64,
    budget: u128,
) -> Result<Vec<SparseSolution>> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows but rhs has length {}",
            a.nrows(),
            b.len()
        )));
    }
    let k_max = k_max.min(n);
    let mut total: u128 = 0;
    for j in 1..=k_max {
        total = total.saturating_add(binomial(n, j));
        if total > budget {
            return Err(Error::BudgetExceeded {
                n,
                k: j,
                count: total,
                budget,
            });
        }
    }

    let mut solutions: Vec<SparseSolution> = Vec::new();
    let mut push_unique = |candidate: SparseSolution| {
        let duplicate = solutions.iter().any(|existing| {
            (&existing.x - &candidate.x).amax() <= 1e-8 * existing.x.amax().max(1.0)
        });
        if !duplicate {
            solutions.push(candidate);
        }
    };

    if b.norm() <= fit_tol {
        push_unique(SparseSolution {
            support: Vec::new(),
            x: DVector::zeros(n),
            residual: b.norm(),
        });
    }

    for size in 1..=k_max {
        for support in (0..n).combinations(size) {
            let sub = a.select_columns(support.iter());
            let svd = sub.clone().svd(true, true);
            let coeffs = match svd.solve(b, 1e-12) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let residual = (sub * &coeffs - b).norm();
            if residual <= fit_tol {
                let mut x = DVector::zeros(n);
                for (slot, &col) in support.iter().enumerate() {
                    x[col] = coeffs[slot];
                }
                push_unique(SparseSolution {
                    support,
                    x,
                    residual,
                });
            }
        }
    }
    Ok(solutions)
}

/// Condition certificates for a given matrix, operator, and sparsity level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `beta_{2k*} < (2k*)^{min(1/q - 1/p, 0)}` at the report's norm pair.
    pub unique_sparsest: bool,
    /// `beta_{3k*+1} < 1/L` at the report's norm pair.
    pub linear_rate: bool,
    /// `mu < 1 / ((3 - c2) k*)`.
    pub coherence_rate_strict: bool,
    /// `mu < 1 / ((3 - c2) k* - 1)` (the tabulated variant).
    pub coherence_rate_relaxed: bool,
    /// `delta_{3k*+1} < 1/L` at `(2, 2)`.
    pub rip_rate: bool,
    /// Hard operator with `delta_{3k*+1} < (sqrt(5) - 1)/2`.
    pub golden_rate: bool,
}

/// One generalized-constant entry of the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaEntry {
    pub k: usize,
    pub p: f64,
    pub q: String,
    pub value: f64,
    pub exact: bool,
}

/// Full matrix certificate: constants plus which convergence and uniqueness
/// hypotheses hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rows: usize,
    pub cols: usize,
    pub operator: String,
    pub k_star: usize,
    pub p: f64,
    pub q: String,
    pub mu: f64,
    /// `delta_r` for every level up to `min(3k* + 1, n)`.
    pub delta: BTreeMap<usize, f64>,
    pub beta: Vec<BetaEntry>,
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
    /// Step the rates below are evaluated at.
    pub step: f64,
    pub gamma_s: f64,
    pub rho_s: f64,
    /// Admissible step interval; absent when the rate hypothesis fails.
    pub s_interval: Option<(f64, f64)>,
    pub conditions: ConditionFlags,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub k_star: usize,
    pub operator: ThresholdingOperator,
    pub norms: NormPair,
    pub budget: u128,
    /// Step size at which `gamma_s`/`rho_s` are reported.
    pub step: f64,
}

impl AnalysisOptions {
    pub fn new(k_star: usize, operator: ThresholdingOperator) -> Self {
        Self {
            k_star,
            operator,
            norms: NormPair::l2_l2(),
            budget: DEFAULT_SUPPORT_BUDGET,
            step: 1.0,
        }
    }
}

/// Builds the full [`AnalysisReport`]. The report's norm pair must be one of
/// the exactly computable pairs `(1, inf)` or `(2, 2)`; condition flags on a
/// heuristic lower bound would certify nothing.
pub fn analyze_matrix(a: &DMatrix<f64>, options: &AnalysisOptions) -> Result<AnalysisReport> {
    if options.k_star == 0 {
        return Err(Error::InvalidConfig("k_star must be >= 1".into()));
    }
    options.operator.validate()?;
    if !(options.norms.is_l1_linf() || options.norms.is_l2_l2()) {
        return Err(Error::InvalidConfig(
            "analysis reports require the (1, inf) or (2, 2) norm pair".into(),
        ));
    }
    require_unit_columns(a)?;
    let n = a.ncols();
    let k_star = options.k_star;
    let mu = coherence(a)?;

    let r_max = (3 * k_star + 1).min(n);
    let mut delta = BTreeMap::new();
    for r in 1..=r_max {
        delta.insert(r, ric(a, r, options.budget)?);
    }

    let levels = {
        let mut levels = vec![k_star.min(n), (2 * k_star).min(n), r_max];
        levels.sort_unstable();
        levels.dedup();
        levels
    };
    let mut beta = Vec::new();
    for pair in [NormPair::l1_linf(), NormPair::l2_l2()] {
        for &level in &levels {
            let (value, exact) = gric(a, level, pair, options.budget)?;
            beta.push(BetaEntry {
                k: level,
                p: pair.p(),
                q: pair.q_label(),
                value,
                exact,
            });
        }
    }

    let op = options.operator;
    let constants = contraction_constants(k_star, options.norms, op.c1(), op.c2());
    let (beta_3k1, _) = gric(a, r_max, options.norms, options.budget)?;
    let (beta_2k, _) = gric(a, (2 * k_star).min(n), options.norms, options.budget)?;
    let delta_3k1 = delta[&r_max];

    let (gamma_s, rho_s) =
        convergence_rate(options.step, k_star, options.norms, beta_3k1, constants.l);
    let s_interval = step_interval(k_star, options.norms, beta_3k1, constants.l).ok();

    let l_coherence = contraction_constants(k_star, NormPair::l1_linf(), op.c1(), op.c2()).l;
    let l_rip = contraction_constants(k_star, NormPair::l2_l2(), op.c1(), op.c2()).l;

    let conditions = ConditionFlags {
        unique_sparsest: check_uniqueness_condition(beta_2k, k_star, options.norms),
        linear_rate: beta_3k1 < 1.0 / constants.l,
        coherence_rate_strict: mu < 1.0 / l_coherence,
        coherence_rate_relaxed: mu < 1.0 / (l_coherence - 1.0),
        rip_rate: delta_3k1 < 1.0 / l_rip,
        golden_rate: op == ThresholdingOperator::Hard && delta_3k1 < golden_threshold(),
    };

    Ok(AnalysisReport {
        rows: a.nrows(),
        cols: n,
        operator: op.name().to_string(),
        k_star,
        p: options.norms.p(),
        q: options.norms.q_label(),
        mu,
        delta,
        beta,
        l1: constants.l1,
        l2: constants.l2,
        l: constants.l,
        step: options.step,
        gamma_s,
        rho_s,
        s_interval,
        conditions,
    })
}
