//! Validity of extremal coefficient functions and capacity functionals.
//!
//! A set function `theta` with `theta(∅) = 0` and unit singletons is an
//! extremal coefficient function iff it is completely alternating. On a
//! finite ground set this is certified exactly by the max-linear
//! coefficients
//!
//! ```text
//! tau_L = Σ_{I ⊆ L} (-1)^{|I|+1} theta((M \ L) ∪ I)
//! ```
//!
//! being nonnegative for every non-empty `L`: they are the negated successive
//! differences over the singletons of `L`, so complete alternation forces them
//! nonnegative, and nonnegative coefficients define a max-linear model whose
//! extremal coefficients are `theta` again.
//!
//! The brute-force checker enumerates successive differences over explicit
//! collections of subsets and serves as an independent oracle for tests.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;
use crate::setfun::{successive_delta, EcfTable, GroundSet, SetFunction, Subset, TOL_EQ};

/// Largest ground set accepted by the brute-force checker.
pub const BRUTEFORCE_MAX_M: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    EmptySet,
    Marginal,
    NegativeTau,
    Range,
}

/// A failed condition together with the subset it concerns and the
/// offending value (a table entry, or a coefficient for `NegativeTau`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subset: Subset,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            valid: violations.is_empty(),
            violations,
        }
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

/// Raw max-linear coefficients of a dense table, one per mask (entry 0 is
/// unused and set to 0). No clamping, no validation.
pub(crate) fn tau_coefficients(values: &[f64], m: usize) -> Vec<f64> {
    let full = ((1u64 << m) - 1) as u32;
    let n = 1usize << m;
    (0..n)
        .into_par_iter()
        .map(|l| {
            if l == 0 {
                return 0.0;
            }
            let l = Subset::from_mask(l as u32);
            let base = Subset::from_mask(full).difference(l);
            let mut acc = CompensatedSum::new();
            for i in l.submasks() {
                let v = values[base.union(i).mask() as usize];
                // (-1)^{|I|+1}
                if i.len() % 2 == 1 {
                    acc.add(v);
                } else {
                    acc.add(-v);
                }
            }
            acc.value()
        })
        .collect()
}

/// Checks `theta(∅) = 0`, `theta({t}) = 1`, the range `[1, |L|]`, and
/// nonnegativity of every coefficient `tau_L`. All violations are reported.
pub fn validate_ecf(theta: &EcfTable) -> ValidationReport {
    let g = theta.ground();
    let values = theta.values();
    let mut violations = Vec::new();

    if values[0] != 0.0 {
        violations.push(Violation {
            kind: ViolationKind::EmptySet,
            subset: Subset::EMPTY,
            value: values[0],
        });
    }
    for l in g.nonempty_subsets() {
        let v = values[l.mask() as usize];
        if l.len() == 1 {
            if (v - 1.0).abs() > TOL_EQ {
                violations.push(Violation {
                    kind: ViolationKind::Marginal,
                    subset: l,
                    value: v,
                });
            }
        } else if v < 1.0 - TOL_EQ || v > l.len() as f64 + TOL_EQ {
            violations.push(Violation {
                kind: ViolationKind::Range,
                subset: l,
                value: v,
            });
        }
    }
    let tau = tau_coefficients(values, g.len());
    for l in g.nonempty_subsets() {
        let t = tau[l.mask() as usize];
        if t < -TOL_EQ {
            violations.push(Violation {
                kind: ViolationKind::NegativeTau,
                subset: l,
                value: t,
            });
        }
    }
    ValidationReport::from_violations(violations)
}

/// Which collections `{K_1, .., K_n}` of distinct non-empty subsets the
/// brute-force checker enumerates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollectionFamily {
    /// Every collection of at most this many distinct non-empty subsets.
    UpToSize(usize),
    /// Every collection of distinct singletons, up to the full ground set.
    Singletons,
    /// Random collections of between 1 and `max_size` distinct subsets, each
    /// paired with a random base set.
    Sampled { samples: usize, max_size: usize, seed: u64 },
}

/// A base set and collection with a positive successive difference.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternationWitness {
    pub base: Subset,
    pub collection: Vec<Subset>,
    pub value: f64,
}

/// Searches for a collection `Ks` and base `K` with
/// `successive_delta(f, Ks, K) > TOL_EQ`. Restricted to `m <= 5`.
pub fn find_alternation_witness<F: SetFunction + ?Sized>(
    f: &F,
    family: CollectionFamily,
) -> Result<Option<AlternationWitness>> {
    let g = f.ground();
    if g.len() > BRUTEFORCE_MAX_M {
        return Err(Error::TooLarge {
            m: g.len(),
            cap: BRUTEFORCE_MAX_M,
        });
    }
    let pool: Vec<Subset> = match family {
        CollectionFamily::Singletons => (0..g.len()).map(Subset::singleton).collect(),
        _ => g.nonempty_subsets().collect(),
    };
    let check = |base: Subset, ks: &[Subset]| -> Result<Option<AlternationWitness>> {
        let v = successive_delta(f, ks, base)?;
        Ok((v > TOL_EQ).then(|| AlternationWitness {
            base,
            collection: ks.to_vec(),
            value: v,
        }))
    };

    match family {
        CollectionFamily::UpToSize(k) | CollectionFamily::Sampled { max_size: k, .. }
            if k == 0 || k > pool.len() =>
        {
            Err(invalid(format!(
                "collection size must lie in 1..={}, got {k}",
                pool.len()
            )))
        }
        CollectionFamily::Sampled { samples, max_size, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n_sets = g.table_len();
            for _ in 0..samples {
                let size = rng.random_range(1..=max_size);
                let ks: Vec<Subset> = sample(&mut rng, pool.len(), size)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect();
                let base = Subset::from_mask(rng.random_range(0..n_sets) as u32);
                if let Some(w) = check(base, &ks)? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        CollectionFamily::UpToSize(_) | CollectionFamily::Singletons => {
            let max = match family {
                CollectionFamily::UpToSize(k) => k,
                _ => pool.len(),
            };
            let mut chosen = Vec::with_capacity(max);
            for base in g.subsets() {
                if let Some(w) = search(&pool, 0, max, &mut chosen, &|ks| check(base, ks))? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
    }
}

// Depth-first enumeration of all non-empty combinations of `pool` with at
// most `max` elements.
fn search<T>(
    pool: &[Subset],
    start: usize,
    max: usize,
    chosen: &mut Vec<Subset>,
    visit: &dyn Fn(&[Subset]) -> Result<Option<T>>,
) -> Result<Option<T>> {
    for i in start..pool.len() {
        chosen.push(pool[i]);
        if let Some(w) = visit(chosen)? {
            return Ok(Some(w));
        }
        if chosen.len() < max {
            if let Some(w) = search(pool, i + 1, max, chosen, visit)? {
                return Ok(Some(w));
            }
        }
        chosen.pop();
    }
    Ok(None)
}

/// True iff every successive difference over collections of at most
/// `max_collection_size` distinct non-empty subsets, at every base set, is
/// `<= TOL_EQ`. Repeated subsets never need checking since `Δ_K Δ_K = Δ_K`.
pub fn is_completely_alternating_bruteforce<F: SetFunction + ?Sized>(
    f: &F,
    max_collection_size: usize,
) -> Result<bool> {
    find_alternation_witness(f, CollectionFamily::UpToSize(max_collection_size)).map(|w| w.is_none())
}

/// Table of a capacity functional `C(A) = P(Z ∩ A ≠ ∅)` of a random set `Z`
/// (equivalently a binary field), with `p` its singleton value `C({0})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityTable {
    ground: GroundSet,
    values: Vec<f64>,
    p: f64,
}

impl CapacityTable {
    pub fn from_values(ground: GroundSet, values: Vec<f64>) -> Result<Self> {
        let table = EcfTable::from_values(ground, values)?;
        let (ground, values) = table.into_parts();
        let p = values[1];
        Ok(Self { ground, values, p })
    }

    /// `C(A) = theta(A) / bound`.
    pub fn from_ecf(theta: &EcfTable, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(invalid("bound must be positive"));
        }
        let values = theta.values().iter().map(|v| v / bound).collect();
        Self::from_values(theta.ground().clone(), values)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SetFunction for CapacityTable {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn value(&self, s: Subset) -> f64 {
        self.values[s.mask() as usize]
    }
}

/// Checks that `c` is the capacity functional of a binary field with
/// identical one-dimensional marginals: values in `[0, 1]`, `C(∅) = 0`,
/// constant singletons, and complete alternation (via the coefficients of
/// `C / p`; scaling by a positive constant preserves complete alternation).
/// `NegativeTau` violations carry the coefficient of `C` itself.
pub fn validate_capacity(c: &CapacityTable) -> Result<ValidationReport> {
    if c.p == 0.0 {
        return Err(Error::DegenerateMarginal);
    }
    let g = c.ground();
    let mut violations = Vec::new();
    if c.values[0] != 0.0 {
        violations.push(Violation {
            kind: ViolationKind::EmptySet,
            subset: Subset::EMPTY,
            value: c.values[0],
        });
    }
    for l in g.nonempty_subsets() {
        let v = c.values[l.mask() as usize];
        if !(-TOL_EQ..=1.0 + TOL_EQ).contains(&v) {
            violations.push(Violation {
                kind: ViolationKind::Range,
                subset: l,
                value: v,
            });
        }
        if l.len() == 1 && (v - c.p).abs() > TOL_EQ {
            violations.push(Violation {
                kind: ViolationKind::Marginal,
                subset: l,
                value: v,
            });
        }
    }
    let scaled: Vec<f64> = c.values.iter().map(|v| v / c.p).collect();
    let tau = tau_coefficients(&scaled, g.len());
    for l in g.nonempty_subsets() {
        let t = tau[l.mask() as usize];
        if t < -TOL_EQ {
            violations.push(Violation {
                kind: ViolationKind::NegativeTau,
                subset: l,
                value: t * c.p,
            });
        }
    }
    Ok(ValidationReport::from_violations(violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym3(pair: f64, triple: f64) -> EcfTable {
        let g = GroundSet::new(3).unwrap();
        EcfTable::from_fn(g, |s| match s.len() {
            0 => 0.0,
            1 => 1.0,
            2 => pair,
            _ => triple,
        })
        .unwrap()
    }

    // Independent oracle: tau by explicit enumeration of all index subsets of
    // the sorted list of L, without masks or compensated sums.
    fn tau_by_hand(theta: &EcfTable, l: &[usize]) -> f64 {
        let m = theta.ground().len();
        let rest: Vec<usize> = (0..m).filter(|t| !l.contains(t)).collect();
        let mut total = 0.0;
        for sel in 0..(1usize << l.len()) {
            let mut set = rest.clone();
            let mut size = 0;
            for (j, t) in l.iter().enumerate() {
                if sel >> j & 1 == 1 {
                    set.push(*t);
                    size += 1;
                }
            }
            let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * theta.value(Subset::from_indices(set).unwrap());
        }
        total
    }

    #[test]
    fn running_example_is_valid() {
        let theta = sym3(1.5, 2.0);
        let report = validate_ecf(&theta);
        assert!(report.valid, "{report:?}");
        let tau = tau_coefficients(theta.values(), 3);
        for l in theta.ground().nonempty_subsets() {
            let expected = tau_by_hand(&theta, &l.to_vec());
            assert!((tau[l.mask() as usize] - expected).abs() < 1e-15);
            assert!(expected == 0.0 || expected == 0.5);
        }
    }

    #[test]
    fn negative_tau_is_reported_with_its_subset() {
        let theta = sym3(1.2, 2.9);
        let report = validate_ecf(&theta);
        assert!(!report.valid);
        let neg: Vec<_> = report.of_kind(ViolationKind::NegativeTau).collect();
        assert_eq!(neg.len(), 3);
        let v01 = neg
            .iter()
            .find(|v| v.subset == Subset::parse_key("0,1").unwrap())
            .unwrap();
        assert!((v01.value - -1.5).abs() < 1e-12);
        assert!((tau_by_hand(&theta, &[0, 1]) - -1.5).abs() < 1e-12);
    }

    #[test]
    fn independence_and_boundary_violations() {
        let g = GroundSet::new(2).unwrap();
        assert!(validate_ecf(&EcfTable::independence(g.clone())).valid);

        let bad = EcfTable::from_values(g.clone(), vec![0.5, 1.0, 1.0, 1.5]).unwrap();
        let r = validate_ecf(&bad);
        assert_eq!(r.of_kind(ViolationKind::EmptySet).count(), 1);

        let bad = EcfTable::from_values(g.clone(), vec![0.0, 1.1, 1.0, 1.5]).unwrap();
        assert_eq!(validate_ecf(&bad).of_kind(ViolationKind::Marginal).count(), 1);

        let bad = EcfTable::from_values(g, vec![0.0, 1.0, 1.0, 2.5]).unwrap();
        let r = validate_ecf(&bad);
        assert_eq!(r.of_kind(ViolationKind::Range).count(), 1);
        assert!(!r.valid);
    }

    #[test]
    fn bruteforce_examples() {
        let g3 = GroundSet::new(3).unwrap();
        let indep = EcfTable::independence(g3.clone());
        assert!(is_completely_alternating_bruteforce(&indep, 7).unwrap());

        let bad = sym3(1.2, 2.9);
        assert!(!is_completely_alternating_bruteforce(&bad, 7).unwrap());
        let w = find_alternation_witness(&bad, CollectionFamily::Singletons)
            .unwrap()
            .unwrap();
        assert!(w.value > 0.0);
        // The coefficient of {0,1} is a singleton witness at base {2}.
        let v = successive_delta(
            &bad,
            &[Subset::singleton(0), Subset::singleton(1)],
            Subset::singleton(2),
        )
        .unwrap();
        assert!((v - 1.5).abs() < 1e-12);

        let dep = EcfTable::complete_dependence(GroundSet::new(4).unwrap());
        assert!(validate_ecf(&dep).valid);
        assert!(is_completely_alternating_bruteforce(&dep, 3).unwrap());
        assert!(find_alternation_witness(&dep, CollectionFamily::Singletons)
            .unwrap()
            .is_none());
    }

    #[test]
    fn bruteforce_limits() {
        let big = EcfTable::independence(GroundSet::new(6).unwrap());
        assert!(matches!(
            is_completely_alternating_bruteforce(&big, 2),
            Err(Error::TooLarge { m: 6, cap: 5 })
        ));
        let small = EcfTable::independence(GroundSet::new(2).unwrap());
        assert!(is_completely_alternating_bruteforce(&small, 4).is_err());
        assert!(is_completely_alternating_bruteforce(&small, 0).is_err());
    }

    #[test]
    fn sampled_family_finds_gross_violations() {
        let bad = sym3(1.2, 2.9);
        let w = find_alternation_witness(
            &bad,
            CollectionFamily::Sampled {
                samples: 2000,
                max_size: 3,
                seed: 7,
            },
        )
        .unwrap();
        assert!(w.is_some());
    }

    #[test]
    fn capacity_examples() {
        let theta = sym3(1.5, 2.0);
        let c = CapacityTable::from_ecf(&theta, 3.0).unwrap();
        assert!(validate_capacity(&c).unwrap().valid);

        let g = GroundSet::new(2).unwrap();
        let c = CapacityTable::from_values(g.clone(), vec![0.1, 0.3, 0.3, 0.45]).unwrap();
        let r = validate_capacity(&c).unwrap();
        assert_eq!(r.of_kind(ViolationKind::EmptySet).count(), 1);

        let c = CapacityTable::from_values(g.clone(), vec![0.0, 0.3, 0.4, 0.5]).unwrap();
        let r = validate_capacity(&c).unwrap();
        let marg: Vec<_> = r.of_kind(ViolationKind::Marginal).collect();
        assert_eq!(marg.len(), 1);
        assert_eq!(marg[0].subset, Subset::singleton(1));

        let c = CapacityTable::from_values(g, vec![0.0, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(validate_capacity(&c), Err(Error::DegenerateMarginal)));
    }
}
