//! Binary fields `Y_t = 1{t ∈ Z}` for a random subset `Z` of the ground
//! set, and the constructions built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_tau, TauTable};
use crate::alternation::{validate_ecf, CapacityTable};
use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;
use crate::setfun::{EcfTable, GroundSet, SetFunction, Subset, TOL_EQ};

/// Largest ground set for the exhaustive `O(4^m)` product convolution.
pub const PRODUCT_MAX_M: usize = 12;

/// Law of a random subset `Z ⊆ M`: `q[L] = P(Z = L)`, including `L = ∅`,
/// with a common inclusion probability `P(t ∈ Z)` for all `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSetDistribution {
    ground: GroundSet,
    q: Vec<f64>,
}

impl RandomSetDistribution {
    pub fn new(ground: GroundSet, mut q: Vec<f64>) -> Result<Self> {
        if q.len() != ground.table_len() {
            return Err(invalid(format!(
                "expected {} probabilities, got {}",
                ground.table_len(),
                q.len()
            )));
        }
        for v in q.iter_mut() {
            if !v.is_finite() || *v < -TOL_EQ {
                return Err(invalid(format!("probabilities must be nonnegative, got {v}")));
            }
            *v = v.max(0.0);
        }
        let total: f64 = q.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > TOL_EQ {
            return Err(invalid(format!("probabilities sum to {total}, expected 1")));
        }
        let d = Self { ground, q };
        let p0 = d.inclusion_probability(0);
        for t in 1..d.ground.len() {
            let p = d.inclusion_probability(t);
            if (p - p0).abs() > TOL_EQ {
                return Err(invalid(format!(
                    "inclusion probability of location {t} is {p}, location 0 has {p0}"
                )));
            }
        }
        Ok(d)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn probability(&self, l: Subset) -> f64 {
        self.q[l.mask() as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.q
    }

    /// `P(Z ∩ A ≠ ∅)`.
    pub fn containment(&self, a: Subset) -> f64 {
        self.ground
            .nonempty_subsets()
            .filter(|l| l.intersects(a))
            .map(|l| self.probability(l))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `P(t ∈ Z)`.
    pub fn inclusion_probability(&self, t: usize) -> f64 {
        self.containment(Subset::singleton(t))
    }

    /// `P(s ∈ Z and t ∈ Z)`.
    pub fn joint_inclusion(&self, s: usize, t: usize) -> f64 {
        let pair = Subset::pair(s, t);
        self.ground
            .nonempty_subsets()
            .filter(|l| pair.is_subset_of(*l))
            .map(|l| self.probability(l))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `P(s ∈ Z | t ∈ Z)`.
    pub fn conditional_inclusion(&self, s: usize, t: usize) -> Result<f64> {
        self.ground.check_index(s)?;
        self.ground.check_index(t)?;
        let p = self.inclusion_probability(t);
        if p <= 0.0 {
            return Err(Error::DegenerateMarginal);
        }
        Ok(self.joint_inclusion(s, t) / p)
    }

    /// The capacity functional `A ↦ P(Z ∩ A ≠ ∅)`.
    pub fn capacity(&self) -> CapacityTable {
        let values = self.ground.subsets().map(|a| self.containment(a)).collect();
        CapacityTable::from_values(self.ground.clone(), values).expect("finite capacity table")
    }

    /// `n` independent draws of `Z`, inverse-CDF over the canonical order.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Subset> {
        let mut cdf = Vec::with_capacity(self.q.len());
        let mut acc = 0.0;
        for v in &self.q {
            acc += v;
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let i = cdf.partition_point(|c| *c <= u).min(self.q.len() - 1);
                Subset::from_mask(i as u32)
            })
            .collect()
    }
}

/// Binary field with capacity `C(A) = theta(A) / bound`:
/// `q_L = tau_L / bound` for `L ≠ ∅` and `q_∅ = 1 - theta(M) / bound`.
/// The default bound is `theta(M)`, which gives `q_∅ = 0`.
pub fn binary_realization(theta: &EcfTable, bound: Option<f64>) -> Result<RandomSetDistribution> {
    let tau = build_tau(theta)?;
    let full = theta.value(theta.ground().full());
    let bound = bound.unwrap_or(full);
    if !(bound >= full - TOL_EQ) {
        return Err(Error::BoundTooSmall {
            bound,
            theta_full: full,
        });
    }
    from_tau(&tau, bound, full)
}

fn from_tau(tau: &TauTable, bound: f64, full: f64) -> Result<RandomSetDistribution> {
    let mut q: Vec<f64> = tau.values().iter().map(|v| v / bound).collect();
    q[0] = (1.0 - full / bound).max(0.0);
    RandomSetDistribution::new(tau.ground().clone(), q)
}

/// `alpha theta1 + (1 - alpha) theta2`: the extremal coefficients of
/// `max(alpha X1, (1 - alpha) X2)` for independent fields. Both inputs must
/// be valid.
pub fn max_combine(theta1: &EcfTable, theta2: &EcfTable, alpha: f64) -> Result<EcfTable> {
    if theta1.ground() != theta2.ground() {
        return Err(invalid("tables live on different ground sets"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    for theta in [theta1, theta2] {
        let report = validate_ecf(theta);
        if !report.valid {
            return Err(Error::NotCompletelyAlternating(Box::new(report)));
        }
    }
    if alpha == 1.0 {
        return Ok(theta1.clone());
    }
    if alpha == 0.0 {
        return Ok(theta2.clone());
    }
    let values = theta1
        .values()
        .iter()
        .zip(theta2.values())
        .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    EcfTable::from_values(theta1.ground().clone(), values)
}

/// Law of `Z1 ∩ Z2` for independent `Z1`, `Z2`, i.e. of the product field
/// `Y1 Y2`: `q_L = Σ_{L1 ∩ L2 = L} q1_{L1} q2_{L2}`. Its conditional
/// inclusion kernel is the product of the two kernels.
pub fn product_chi(
    d1: &RandomSetDistribution,
    d2: &RandomSetDistribution,
) -> Result<RandomSetDistribution> {
    if d1.ground != d2.ground {
        return Err(invalid("distributions live on different ground sets"));
    }
    let m = d1.ground.len();
    if m > PRODUCT_MAX_M {
        return Err(Error::TooLarge {
            m,
            cap: PRODUCT_MAX_M,
        });
    }
    if d1.inclusion_probability(0) <= 0.0 || d2.inclusion_probability(0) <= 0.0 {
        return Err(Error::DegenerateMarginal);
    }
    let mut acc = vec![CompensatedSum::new(); d1.q.len()];
    for (l1, p1) in d1.q.iter().enumerate() {
        if *p1 == 0.0 {
            continue;
        }
        for (l2, p2) in d2.q.iter().enumerate() {
            acc[l1 & l2].add(p1 * p2);
        }
    }
    RandomSetDistribution::new(d1.ground.clone(), acc.iter().map(|c| c.value()).collect())
}
