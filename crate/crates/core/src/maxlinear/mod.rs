//! The max-linear model on a finite ground set `M`:
//!
//! ```text
//! X_t = max_{L ∋ t} tau_L V_L,     -log P(X <= x) = Σ_L tau_L max_{t ∈ L} 1 / x_t
//! ```
//!
//! with one i.i.d. standard Fréchet factor `V_L` per non-empty `L ⊆ M`.
//! Nonnegative coefficients with `Σ_{L ∋ t} tau_L = 1` give a max-stable
//! vector with standard Fréchet marginals whose extremal coefficients are
//! `theta(A) = Σ_{L ∩ A ≠ ∅} tau_L`. [`build_tau`] inverts that relation, so
//! every valid extremal coefficient function is realized by this model.

mod binary;
mod simulate;

pub use binary::{binary_realization, max_combine, product_chi, RandomSetDistribution, PRODUCT_MAX_M};
pub use simulate::{max_combine_batches, simulate, SampleBatch};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alternation::{tau_coefficients, validate_ecf};
use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;
use crate::setfun::{BivariateSummary, EcfTable, GroundSet, SetFunction, Subset, TOL_EQ};

/// Coefficients smaller than this are stored as exact zeros.
pub const TAU_CLAMP: f64 = 1e-12;

/// Max-linear coefficients `tau_L` for every non-empty `L ⊆ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTable {
    ground: GroundSet,
    tau: Vec<f64>,
}

impl TauTable {
    /// Table from one coefficient per mask (`tau[0]` is ignored). Checks
    /// nonnegativity and unit marginal sums, both up to [`TOL_EQ`], and
    /// clamps coefficients below [`TAU_CLAMP`] to zero.
    pub fn from_values(ground: GroundSet, mut tau: Vec<f64>) -> Result<Self> {
        if tau.len() != ground.table_len() {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                ground.table_len(),
                tau.len()
            )));
        }
        tau[0] = 0.0;
        for (i, v) in tau.iter_mut().enumerate().skip(1) {
            if !v.is_finite() || *v < -TOL_EQ {
                return Err(invalid(format!(
                    "coefficient of {} must be nonnegative, got {v}",
                    Subset::from_mask(i as u32)
                )));
            }
            if *v < TAU_CLAMP {
                *v = 0.0;
            }
        }
        let table = Self { ground, tau };
        for t in 0..table.ground.len() {
            let s = table.marginal_sum(t);
            if (s - 1.0).abs() > TOL_EQ {
                return Err(invalid(format!(
                    "coefficients containing location {t} sum to {s}, expected 1"
                )));
            }
        }
        Ok(table)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn m(&self) -> usize {
        self.ground.len()
    }

    pub fn get(&self, l: Subset) -> f64 {
        self.tau[l.mask() as usize]
    }

    /// Coefficients indexed by mask, entry 0 being 0.
    pub fn values(&self) -> &[f64] {
        &self.tau
    }

    /// Non-empty subsets with positive coefficient, in canonical order.
    pub fn support(&self) -> impl Iterator<Item = (Subset, f64)> + '_ {
        self.ground
            .nonempty_subsets()
            .map(|l| (l, self.get(l)))
            .filter(|(_, v)| *v > 0.0)
    }

    /// `Σ_{L ∋ t} tau_L`, which is 1 for a valid table.
    pub fn marginal_sum(&self, t: usize) -> f64 {
        self.ground
            .nonempty_subsets()
            .filter(|l| l.contains(t))
            .map(|l| self.get(l))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Independent locations: `tau_{{t}} = 1`.
    pub fn independence(ground: GroundSet) -> Self {
        let tau = ground
            .subsets()
            .map(|l| if l.len() == 1 { 1.0 } else { 0.0 })
            .collect();
        Self { ground, tau }
    }

    /// Identical locations: all mass on `L = M`.
    pub fn complete_dependence(ground: GroundSet) -> Self {
        let full = ground.full();
        let tau = ground
            .subsets()
            .map(|l| if l == full { 1.0 } else { 0.0 })
            .collect();
        Self { ground, tau }
    }

    /// SHA-256 over the ground-set size and the coefficient bit patterns.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"excoef-tau-v1");
        h.update((self.m() as u64).to_le_bytes());
        for v in &self.tau[1..] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `tau_L = Σ_{I ⊆ L} (-1)^{|I|+1} theta((M \ L) ∪ I)`, by direct
/// inclusion-exclusion per `L` (`O(3^m)` overall).
///
/// The map is a subset convolution: with `h(S) = theta(M) - theta(M \ S)`
/// one has `h(S) = Σ_{L ⊆ S} tau_L`, so a fast Möbius transform would give
/// all coefficients in `O(m 2^m)`.
pub fn build_tau(theta: &EcfTable) -> Result<TauTable> {
    let report = validate_ecf(theta);
    if !report.valid {
        return Err(Error::NotCompletelyAlternating(Box::new(report)));
    }
    let g = theta.ground().clone();
    let mut tau = tau_coefficients(theta.values(), g.len());
    for v in tau.iter_mut() {
        if *v < TAU_CLAMP {
            *v = 0.0;
        }
    }
    Ok(TauTable { ground: g, tau })
}

/// `theta(A) = Σ_{L ∩ A ≠ ∅} tau_L`; 0 for the empty set.
pub fn recover_theta(tau: &TauTable, a: Subset) -> Result<f64> {
    tau.ground.check(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(tau
        .support()
        .filter(|(l, _)| l.intersects(a))
        .map(|(_, v)| v)
        .collect::<CompensatedSum>()
        .value())
}

/// The full extremal coefficient table of the model.
///
/// Uses the subset-sum identity `theta(A) = h(M) - h(M \ A)` with
/// `h(S) = Σ_{L ⊆ S} tau_L`, so it stays `O(m 2^m)`.
pub fn theta_table(tau: &TauTable) -> EcfTable {
    let m = tau.m();
    let mut h = tau.tau.clone();
    for bit in 0..m {
        for s in 0..h.len() {
            if s >> bit & 1 == 1 {
                h[s] += h[s ^ (1 << bit)];
            }
        }
    }
    let full = h.len() - 1;
    let values = (0..h.len())
        .map(|a| if a == 0 { 0.0 } else { h[full] - h[full & !a] })
        .collect();
    EcfTable::from_values(tau.ground.clone(), values).expect("finite table of full size")
}

/// Coefficients of the sub-vector on `A`:
/// `tau^A_K = Σ_{J ⊆ M \ A} tau^M_{K ∪ J}`, relabelled onto `0..|A|`.
pub fn marginalize(tau: &TauTable, a: Subset) -> Result<TauTable> {
    if a.is_empty() {
        return Err(invalid("cannot marginalize onto the empty set"));
    }
    let ground = tau.ground.restrict(a)?;
    let mut acc = vec![CompensatedSum::new(); ground.table_len()];
    for (l, v) in tau.support() {
        let k = l.intersection(a);
        if !k.is_empty() {
            acc[k.compress(a).mask() as usize].add(v);
        }
    }
    let values = acc.iter().map(|c| c.value()).collect();
    TauTable::from_values(ground, values)
}

fn check_point(tau: &TauTable, x: &[f64]) -> Result<()> {
    if x.len() != tau.m() {
        return Err(invalid(format!(
            "point has {} coordinates, ground set has {}",
            x.len(),
            tau.m()
        )));
    }
    Ok(())
}

/// `P(X_t <= x_t for all t) = exp(-Σ_L tau_L max_{t ∈ L} 1 / x_t)`.
/// Coordinates may be `+∞`.
pub fn joint_cdf(tau: &TauTable, x: &[f64]) -> Result<f64> {
    check_point(tau, x)?;
    if let Some(v) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(invalid(format!("CDF arguments must be positive, got {v}")));
    }
    let recip: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    Ok((-weighted_max_sum(tau, &recip)).exp())
}

fn weighted_max_sum(tau: &TauTable, y: &[f64]) -> f64 {
    tau.support()
        .map(|(l, v)| v * l.indices().map(|t| y[t]).fold(0.0, f64::max))
        .collect::<CompensatedSum>()
        .value()
}

/// `ell(x) = Σ_L tau_L max_{t ∈ L} x_t` for `x >= 0`.
pub fn stable_tail_dependence(tau: &TauTable, x: &[f64]) -> Result<f64> {
    check_point(tau, x)?;
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!(
            "stable tail dependence needs finite nonnegative arguments, got {v}"
        )));
    }
    Ok(weighted_max_sum(tau, x))
}

/// `chi(s, t) = Σ_{L ⊇ {s, t}} tau_L`, summed directly from the coefficients.
pub fn extremal_correlation(tau: &TauTable, s: usize, t: usize) -> Result<f64> {
    tau.ground.check_index(s)?;
    tau.ground.check_index(t)?;
    let pair = Subset::pair(s, t);
    Ok(tau
        .support()
        .filter(|(l, _)| pair.is_subset_of(*l))
        .map(|(_, v)| v)
        .collect::<CompensatedSum>()
        .value())
}

/// `(theta({s,t}), chi, eta)` with `theta` from [`recover_theta`]. For
/// `s == t` the summary is `(1, 1, 0)`.
pub fn bivariate(tau: &TauTable, s: usize, t: usize) -> Result<BivariateSummary> {
    tau.ground.check_index(s)?;
    tau.ground.check_index(t)?;
    if s == t {
        return Ok(BivariateSummary::from_theta_pair(1.0));
    }
    Ok(BivariateSummary::from_theta_pair(recover_theta(
        tau,
        Subset::pair(s, t),
    )?))
}

/// The `m x m` matrix of extremal correlations, unit diagonal.
pub fn chi_matrix(tau: &TauTable) -> DMatrix<f64> {
    let m = tau.m();
    DMatrix::from_fn(m, m, |s, t| {
        if s == t {
            1.0
        } else {
            extremal_correlation(tau, s, t).expect("indices in range")
        }
    })
}

/// Smallest eigenvalue of [`chi_matrix`]; nonnegative up to rounding since
/// `chi` is a positive definite kernel.
pub fn chi_min_eigenvalue(tau: &TauTable) -> f64 {
    SymmetricEigen::new(chi_matrix(tau))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Reference norm on `R^M` used to place spectral atoms on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Max,
    Sum,
    Euclidean,
}

impl NormKind {
    /// Norm of the indicator vector of a set of size `n`.
    pub fn indicator_norm(self, n: usize) -> f64 {
        match self {
            NormKind::Max => 1.0,
            NormKind::Sum => n as f64,
            NormKind::Euclidean => (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub weight: f64,
    pub point: Vec<f64>,
    pub subset: Subset,
}

/// Discrete spectral measure `Σ_L tau_L ||1_L|| δ_{1_L / ||1_L||}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtoms {
    pub norm: NormKind,
    pub atoms: Vec<SpectralAtom>,
}

impl SpectralAtoms {
    /// `Σ_i w_i a_{i,t}` for each `t`; all ones for standard Fréchet
    /// marginals.
    pub fn coordinate_masses(&self) -> Vec<f64> {
        let m = self.atoms.first().map_or(0, |a| a.point.len());
        (0..m)
            .map(|t| {
                self.atoms
                    .iter()
                    .map(|a| a.weight * a.point[t])
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect()
    }

    /// `ell(x) = Σ_i w_i max_t a_{i,t} x_t`, integrating against the atoms.
    pub fn stable_tail_dependence(&self, x: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                a.weight
                    * a.point
                        .iter()
                        .zip(x)
                        .map(|(p, v)| p * v)
                        .fold(0.0, f64::max)
            })
            .collect::<CompensatedSum>()
            .value()
    }
}

/// One atom per `L` with `tau_L > 0`.
pub fn spectral_atoms(tau: &TauTable, norm: NormKind) -> SpectralAtoms {
    let m = tau.m();
    let atoms = tau
        .support()
        .map(|(l, v)| {
            let n = norm.indicator_norm(l.len());
            let point = (0..m)
                .map(|t| if l.contains(t) { 1.0 / n } else { 0.0 })
                .collect();
            SpectralAtom {
                weight: v * n,
                point,
                subset: l,
            }
        })
        .collect();
    SpectralAtoms { norm, atoms }
}
