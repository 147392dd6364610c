//! Monte Carlo estimators and checks on simulated batches.
//!
//! For standard Fréchet fields `max_{t ∈ A} X_t` is Fréchet with scale
//! `theta(A)`, so `1 / max` is exponential with rate `theta(A)` and the rate
//! MLE estimates `theta(A)` without any threshold. Extremal correlation is
//! estimated by the conditional exceedance proportion at a finite threshold.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maxlinear::SampleBatch;
use crate::numeric::CompensatedSum;
use crate::setfun::Subset;

/// Smallest conditioning sample for [`estimate_chi`].
pub const MIN_EXCEEDANCES: usize = 30;

/// Multiplier of the standard error in Monte Carlo assertions.
pub const SLACK_SIGMAS: f64 = 4.0;

/// Default marginal quantile used as the threshold for `chi`.
pub const DEFAULT_CHI_QUANTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    /// `n / Σ 1 / max_{t ∈ A} X_t`
    ExponentialRate,
    /// Proportion of `X_s >= x` among rows with `X_t >= x`.
    ConditionalExceedance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub point: f64,
    pub stderr: f64,
    pub n: usize,
    pub method: EstimateMethod,
}

impl EstimateResult {
    /// `|point - exact| <= k * stderr`.
    pub fn within(&self, exact: f64, k: f64) -> bool {
        (self.point - exact).abs() <= k * self.stderr
    }
}

fn check_column(batch: &SampleBatch, t: usize) -> Result<()> {
    if t >= batch.m() {
        return Err(invalid(format!(
            "column {t} out of range for a batch with {} columns",
            batch.m()
        )));
    }
    Ok(())
}

/// Rate MLE of `theta(A)`, with asymptotic standard error `point / sqrt(n)`.
pub fn estimate_theta(batch: &SampleBatch, a: Subset) -> Result<EstimateResult> {
    if a.is_empty() {
        return Err(invalid("theta is estimated on a non-empty set"));
    }
    if let Some(t) = a.indices().last() {
        check_column(batch, t)?;
    }
    if batch.n < 2 {
        return Err(invalid("theta estimation needs at least 2 replicates"));
    }
    let idx = a.to_vec();
    let mut sum = CompensatedSum::new();
    for row in batch.rows() {
        let mx = idx.iter().map(|&t| row[t]).fold(0.0, f64::max);
        sum.add(1.0 / mx);
    }
    let n = batch.n as f64;
    let point = n / sum.value();
    Ok(EstimateResult {
        point,
        stderr: point / n.sqrt(),
        n: batch.n,
        method: EstimateMethod::ExponentialRate,
    })
}

/// Empirical `p`-quantile of column `t`: the `ceil(p n)`-th order statistic.
pub fn marginal_quantile(batch: &SampleBatch, t: usize, p: f64) -> Result<f64> {
    check_column(batch, t)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let mut col: Vec<f64> = batch.column(t).collect();
    let k = ((p * batch.n as f64).ceil() as usize).clamp(1, batch.n) - 1;
    let (_, v, _) = col.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*v)
}

/// Empirical `P(X_s >= x | X_t >= x)` with its binomial standard error.
pub fn estimate_chi(batch: &SampleBatch, s: usize, t: usize, threshold: f64) -> Result<EstimateResult> {
    check_column(batch, s)?;
    check_column(batch, t)?;
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    let mut cond = 0usize;
    let mut both = 0usize;
    for row in batch.rows() {
        if row[t] >= threshold {
            cond += 1;
            if row[s] >= threshold {
                both += 1;
            }
        }
    }
    if cond < MIN_EXCEEDANCES {
        return Err(Error::InsufficientExceedances {
            count: cond,
            required: MIN_EXCEEDANCES,
        });
    }
    let p = both as f64 / cond as f64;
    Ok(EstimateResult {
        point: p,
        stderr: (p * (1.0 - p) / cond as f64).sqrt(),
        n: cond,
        method: EstimateMethod::ConditionalExceedance,
    })
}

/// Exact `P(X_s >= x | X_t >= x)` for a pair with extremal coefficient
/// `theta_pair`: `(1 - 2 e^{-1/x} + e^{-theta/x}) / (1 - e^{-1/x})`. Tends
/// to `chi = 2 - theta_pair` as `x → ∞`.
pub fn finite_threshold_chi(theta_pair: f64, x: f64) -> f64 {
    let u = 1.0 / x;
    let tail = -(-u).exp_m1();
    (tail - (-u).exp_m1() + (-theta_pair * u).exp_m1()) / tail
}

/// `P(X_s <= x, X_t <= y) = exp(-(eta min(1/x, 1/y) + max(1/x, 1/y)))`.
pub fn bivariate_cdf(eta: f64, x: f64, y: f64) -> f64 {
    let (a, b) = (1.0 / x, 1.0 / y);
    (-(eta * a.min(b) + a.max(b))).exp()
}

/// `(2 (1 - e^{-eta/eps}), 2 eta / eps)`.
pub fn continuity_bounds(eta: f64, eps: f64) -> (f64, f64) {
    (-2.0 * (-eta / eps).exp_m1(), 2.0 * eta / eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCheck {
    pub epsilon: f64,
    /// Proportion of rows with `|X_s - X_t| > epsilon`.
    pub empirical: f64,
    pub stderr: f64,
    pub exact_bound: f64,
    pub linear_bound: f64,
    /// `empirical <= exact_bound + 4 stderr`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub s: usize,
    pub t: usize,
    pub eta: f64,
    pub n: usize,
    pub holds: bool,
    pub checks: Vec<ContinuityCheck>,
}

/// Compares `P(|X_s - X_t| > eps)` with `2 (1 - e^{-eta/eps})` for each
/// `eps`.
pub fn check_continuity_bound(
    batch: &SampleBatch,
    s: usize,
    t: usize,
    eta: f64,
    epsilons: &[f64],
) -> Result<ContinuityReport> {
    check_column(batch, s)?;
    check_column(batch, t)?;
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0)) {
        return Err(invalid(format!("epsilon must be positive, got {e}")));
    }
    let n = batch.n as f64;
    let checks: Vec<ContinuityCheck> = epsilons
        .iter()
        .map(|&eps| {
            let hits = batch
                .rows()
                .filter(|r| (r[s] - r[t]).abs() > eps)
                .count();
            let p = hits as f64 / n;
            let stderr = (p * (1.0 - p) / n).sqrt();
            let (exact_bound, linear_bound) = continuity_bounds(eta, eps);
            ContinuityCheck {
                epsilon: eps,
                empirical: p,
                stderr,
                exact_bound,
                linear_bound,
                holds: p <= exact_bound + SLACK_SIGMAS * stderr,
            }
        })
        .collect();
    Ok(ContinuityReport {
        s,
        t,
        eta,
        n: batch.n,
        holds: checks.iter().all(|c| c.holds),
        checks,
    })
}

/// Proportion of rows with `X_s <= x` and `X_t <= y`.
pub fn empirical_bivariate_cdf(batch: &SampleBatch, s: usize, t: usize, x: f64, y: f64) -> Result<f64> {
    check_column(batch, s)?;
    check_column(batch, t)?;
    let hits = batch.rows().filter(|r| r[s] <= x && r[t] <= y).count();
    Ok(hits as f64 / batch.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub y: f64,
    pub empirical: f64,
    pub exact: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfReport {
    pub s: usize,
    pub t: usize,
    pub eta: f64,
    pub n: usize,
    /// `4 / sqrt(n)`
    pub tolerance: f64,
    pub holds: bool,
    pub points: Vec<CdfPoint>,
}

/// Empirical against closed-form bivariate CDF on a grid of `(x, y)`.
pub fn check_bivariate_cdf(
    batch: &SampleBatch,
    s: usize,
    t: usize,
    eta: f64,
    grid: &[(f64, f64)],
) -> Result<CdfReport> {
    let tolerance = SLACK_SIGMAS / (batch.n as f64).sqrt();
    let points = grid
        .iter()
        .map(|&(x, y)| {
            if !(x > 0.0 && y > 0.0) {
                return Err(invalid(format!("CDF arguments must be positive, got ({x}, {y})")));
            }
            let empirical = empirical_bivariate_cdf(batch, s, t, x, y)?;
            let exact = bivariate_cdf(eta, x, y);
            Ok(CdfPoint {
                x,
                y,
                empirical,
                exact,
                holds: (empirical - exact).abs() <= tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CdfReport {
        s,
        t,
        eta,
        n: batch.n,
        tolerance,
        holds: points.iter().all(|p| p.holds),
        points,
    })
}
