//! Bernstein functions acting on extremal coefficients.
//!
//! If `g` is a Bernstein function and `theta` a valid extremal coefficient
//! function, then `(g(theta) - g(0)) / (g(1) - g(0))` is again one, and both
//! `g(theta(A ∪ B) - 1)` on sets and `g(eta(s, t))` on points satisfy the
//! triangle inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alternation::validate_ecf;
use crate::error::{invalid, Error, Result};
use crate::maxlinear::{extremal_correlation, TauTable};
use crate::setfun::{EcfTable, SetFunction, Subset, TOL_EQ};

/// One atom `w (1 - e^{-rate r})` of a finite exponential mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpAtom {
    pub weight: f64,
    pub rate: f64,
}

/// Catalog of Bernstein functions with closed forms.
///
/// Serialized with a `kind` tag, e.g. `{"kind":"power","q":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BernsteinSpec {
    /// `c + b r`
    Linear { c: f64, b: f64 },
    /// `r^q`, `0 < q <= 1`
    Power { q: f64 },
    /// `ln(1 + r)`
    Log1p,
    /// `c + b r + Σ w_i (1 - e^{-λ_i r})`
    ExpMixture {
        c: f64,
        b: f64,
        atoms: Vec<ExpAtom>,
    },
    /// `(1 + r)^tau - 1` for `0 < tau <= 1`, `1 - (1 + r)^tau` for `tau < 0`
    ShiftedPower { tau: f64 },
}

impl BernsteinSpec {
    pub fn identity() -> Self {
        BernsteinSpec::Linear { c: 0.0, b: 1.0 }
    }

    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match self {
            BernsteinSpec::Linear { c, b } => {
                finite_nonneg("c", *c)?;
                finite_nonneg("b", *b)
            }
            BernsteinSpec::Power { q } => {
                if *q > 0.0 && *q <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("power exponent must lie in (0, 1], got {q}")))
                }
            }
            BernsteinSpec::Log1p => Ok(()),
            BernsteinSpec::ExpMixture { c, b, atoms } => {
                finite_nonneg("c", *c)?;
                finite_nonneg("b", *b)?;
                for a in atoms {
                    if !(a.weight > 0.0 && a.weight.is_finite() && a.rate > 0.0 && a.rate.is_finite())
                    {
                        return Err(invalid(format!(
                            "mixture atoms need positive finite weight and rate, got ({}, {})",
                            a.weight, a.rate
                        )));
                    }
                }
                Ok(())
            }
            BernsteinSpec::ShiftedPower { tau } => {
                if tau.is_finite() && *tau != 0.0 && *tau <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "shifted power exponent must be negative or in (0, 1], got {tau}"
                    )))
                }
            }
        }
    }

    /// `g(r)` for `r >= 0`; `r = inf` gives the limit.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(invalid(format!(
                "Bernstein functions are evaluated at r >= 0, got {r}"
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    fn eval_unchecked(&self, r: f64) -> f64 {
        match self {
            BernsteinSpec::Linear { c, b } => {
                if *b == 0.0 {
                    *c
                } else {
                    c + b * r
                }
            }
            BernsteinSpec::Power { q } => r.powf(*q),
            BernsteinSpec::Log1p => r.ln_1p(),
            BernsteinSpec::ExpMixture { c, b, atoms } => {
                let lin = if *b == 0.0 { 0.0 } else { b * r };
                c + lin
                    + atoms
                        .iter()
                        .map(|a| -a.weight * (-a.rate * r).exp_m1())
                        .sum::<f64>()
            }
            BernsteinSpec::ShiftedPower { tau } => {
                let v = (tau * r.ln_1p()).exp_m1();
                if *tau > 0.0 {
                    v
                } else {
                    -v
                }
            }
        }
    }
}

/// `A ↦ (g(theta(A)) - g(0)) / (g(1) - g(0))`, with `∅ ↦ 0` and singletons
/// `↦ 1` exactly.
pub fn transform_ecf(theta: &EcfTable, g: &BernsteinSpec) -> Result<EcfTable> {
    g.validate()?;
    let report = validate_ecf(theta);
    if !report.valid {
        return Err(Error::NotCompletelyAlternating(Box::new(report)));
    }
    let g0 = g.eval_unchecked(0.0);
    let scale = g.eval_unchecked(1.0) - g0;
    if !(scale > 0.0) {
        return Err(Error::DegenerateTransform);
    }
    EcfTable::from_fn(theta.ground().clone(), |a| match a.len() {
        0 => 0.0,
        1 => 1.0,
        _ => (g.eval_unchecked(theta.value(a)) - g0) / scale,
    })
}

/// A triple with `g(d(A, B)) > g(d(A, C)) + g(d(C, B)) + TOL_EQ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub a: Subset,
    pub b: Subset,
    pub c: Subset,
    /// `g(d(A, C)) + g(d(C, B)) - g(d(A, B))`, negative for violations.
    pub slack: f64,
}

/// Largest number of violations kept in a report; all are counted.
pub const MAX_REPORTED: usize = 1000;

/// Outcome of a triangle inequality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub valid: bool,
    pub exhaustive: bool,
    pub checked: u64,
    pub violation_count: u64,
    /// Smallest slack seen; `inf` when nothing was checked.
    pub min_slack: f64,
    pub violations: Vec<TriangleViolation>,
}

/// How triples are chosen when the full sweep is too large.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSampling {
    pub samples: u64,
    pub seed: u64,
}

impl Default for TripleSampling {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Largest triple count swept exhaustively.
pub const EXHAUSTIVE_TRIPLES: u64 = 1_000_000;

#[derive(Default)]
struct Acc {
    checked: u64,
    count: u64,
    min_slack: f64,
    kept: Vec<TriangleViolation>,
}

impl Acc {
    fn new() -> Self {
        Self {
            min_slack: f64::INFINITY,
            ..Default::default()
        }
    }

    fn push(&mut self, a: Subset, b: Subset, c: Subset, slack: f64) {
        self.checked += 1;
        self.min_slack = self.min_slack.min(slack);
        if slack < -TOL_EQ {
            self.count += 1;
            if self.kept.len() < MAX_REPORTED {
                self.kept.push(TriangleViolation { a, b, c, slack });
            }
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.checked += other.checked;
        self.count += other.count;
        self.min_slack = self.min_slack.min(other.min_slack);
        let room = MAX_REPORTED - self.kept.len();
        self.kept.extend(other.kept.into_iter().take(room));
        self
    }

    fn finish(self, exhaustive: bool) -> TriangleReport {
        TriangleReport {
            valid: self.count == 0,
            exhaustive,
            checked: self.checked,
            violation_count: self.count,
            min_slack: self.min_slack,
            violations: self.kept,
        }
    }
}

/// Checks `g(theta(A ∪ B) - 1) <= g(theta(A ∪ C) - 1) + g(theta(C ∪ B) - 1)`
/// over non-empty triples: all of them when `(2^m - 1)^3 <= 10^6`, otherwise
/// `sampling.samples` uniform draws. The input is not required to be valid;
/// arguments below 0 are clamped to 0.
pub fn triangle_check_theta(
    theta: &EcfTable,
    g: &BernsteinSpec,
    sampling: TripleSampling,
) -> Result<TriangleReport> {
    g.validate()?;
    let ground = theta.ground();
    let gv: Vec<f64> = ground
        .subsets()
        .map(|s| g.eval_unchecked((theta.value(s) - 1.0).max(0.0)))
        .collect();
    let n = ground.table_len() as u64 - 1;
    let total = n.saturating_mul(n).saturating_mul(n);
    let slack = |a: u32, b: u32, c: u32| {
        gv[(a | c) as usize] + gv[(c | b) as usize] - gv[(a | b) as usize]
    };
    if total <= EXHAUSTIVE_TRIPLES {
        let acc = (1..=n as u32)
            .into_par_iter()
            .map(|a| {
                let mut acc = Acc::new();
                for b in 1..=n as u32 {
                    for c in 1..=n as u32 {
                        acc.push(
                            Subset::from_mask(a),
                            Subset::from_mask(b),
                            Subset::from_mask(c),
                            slack(a, b, c),
                        );
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Acc::new(), Acc::merge);
        return Ok(acc.finish(true));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut acc = Acc::new();
    for _ in 0..sampling.samples {
        let a = rng.random_range(1..=n as u32);
        let b = rng.random_range(1..=n as u32);
        let c = rng.random_range(1..=n as u32);
        acc.push(
            Subset::from_mask(a),
            Subset::from_mask(b),
            Subset::from_mask(c),
            slack(a, b, c),
        );
    }
    Ok(acc.finish(false))
}

/// Checks `g(eta(s, t)) <= g(eta(s, r)) + g(eta(r, t))` over all ordered
/// triples of distinct indices, reported as singleton triples
/// `({s}, {t}, {r})`.
pub fn triangle_check_eta(tau: &TauTable, g: &BernsteinSpec) -> Result<TriangleReport> {
    g.validate()?;
    let m = tau.m();
    let mut ge = vec![0.0; m * m];
    for s in 0..m {
        for t in 0..m {
            if s != t {
                let eta = (1.0 - extremal_correlation(tau, s, t)?).max(0.0);
                ge[s * m + t] = g.eval_unchecked(eta);
            }
        }
    }
    let mut acc = Acc::new();
    for s in 0..m {
        for t in 0..m {
            for r in 0..m {
                if s == t || t == r || s == r {
                    continue;
                }
                acc.push(
                    Subset::singleton(s),
                    Subset::singleton(t),
                    Subset::singleton(r),
                    ge[s * m + r] + ge[r * m + t] - ge[s * m + t],
                );
            }
        }
    }
    Ok(acc.finish(true))
}
