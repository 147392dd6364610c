//! Finite ground sets, subsets and set functions.
//!
//! A ground set `M = {0, .., m-1}` is small (a few dozen points at most), so
//! subsets are stored as bit masks and a set function is a dense table with
//! one entry per mask. The canonical order of subsets is the order of their
//! masks; the canonical text form is the sorted, comma-separated index list
//! (`"0,2"`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;

/// Default cap on the number of locations.
pub const DEFAULT_MAX_M: usize = 20;

/// Masks are `u32`, and a table of `2^m` doubles must fit in memory.
pub const HARD_MAX_M: usize = 30;

/// Absolute tolerance for equality checks on user supplied values.
pub const TOL_EQ: f64 = 1e-9;

/// A finite set of locations `{0, .., m-1}`, optionally labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl GroundSet {
    /// Ground set of `m` unlabelled points, subject to [`DEFAULT_MAX_M`].
    pub fn new(m: usize) -> Result<Self> {
        Self::with_cap(m, DEFAULT_MAX_M)
    }

    pub fn with_cap(m: usize, cap: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("a ground set needs at least one location"));
        }
        let cap = cap.min(HARD_MAX_M);
        if m > cap {
            return Err(Error::TooLarge { m, cap });
        }
        Ok(Self { m, labels: None })
    }

    pub fn with_labels(labels: Vec<String>, cap: usize) -> Result<Self> {
        let mut g = Self::with_cap(labels.len(), cap)?;
        let mut sorted = labels.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("location labels must be pairwise distinct"));
        }
        g.labels = Some(labels);
        Ok(g)
    }

    /// Number of locations.
    pub fn len(&self) -> usize {
        self.m
    }

    /// Always false; a ground set has at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of location `t`, falling back to its index.
    pub fn label(&self, t: usize) -> String {
        match &self.labels {
            Some(l) => l[t].clone(),
            None => t.to_string(),
        }
    }

    /// Labels of all locations, falling back to indices.
    pub fn all_labels(&self) -> Vec<String> {
        (0..self.m).map(|t| self.label(t)).collect()
    }

    /// Number of entries in a dense table over all subsets, `2^m`.
    pub fn table_len(&self) -> usize {
        1usize << self.m
    }

    pub fn full(&self) -> Subset {
        Subset(((1u64 << self.m) - 1) as u32)
    }

    /// All subsets, the empty set first, in canonical order.
    pub fn subsets(&self) -> impl Iterator<Item = Subset> + Clone {
        (0..(1u64 << self.m)).map(|x| Subset(x as u32))
    }

    /// All non-empty subsets in canonical order.
    pub fn nonempty_subsets(&self) -> impl Iterator<Item = Subset> + Clone {
        (1..(1u64 << self.m)).map(|x| Subset(x as u32))
    }

    pub fn check(&self, s: Subset) -> Result<()> {
        if (s.0 as u64) >> self.m != 0 {
            return Err(Error::InvalidSubset {
                subset: s.key(),
                m: self.m,
            });
        }
        Ok(())
    }

    pub fn check_index(&self, t: usize) -> Result<()> {
        if t >= self.m {
            return Err(invalid(format!(
                "location {t} out of range for a ground set of size {}",
                self.m
            )));
        }
        Ok(())
    }

    /// The ground set formed by the points of `a`, relabelled `0..|a|` in
    /// increasing order. Labels are carried over.
    pub fn restrict(&self, a: Subset) -> Result<GroundSet> {
        self.check(a)?;
        if a.is_empty() {
            return Err(invalid("cannot restrict to the empty set"));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| a.indices().map(|t| l[t].clone()).collect());
        Ok(GroundSet {
            m: a.len(),
            labels,
        })
    }
}

/// A subset of a ground set, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub const fn from_mask(mask: u32) -> Self {
        Subset(mask)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub fn singleton(t: usize) -> Self {
        assert!(t < 32, "location index {t} does not fit a subset mask");
        Subset(1 << t)
    }

    pub fn pair(s: usize, t: usize) -> Self {
        Self::singleton(s).union(Self::singleton(t))
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        let mut mask = 0u32;
        for t in indices {
            if t >= HARD_MAX_M {
                return Err(invalid(format!("location index {t} is too large")));
            }
            mask |= 1 << t;
        }
        Ok(Subset(mask))
    }

    /// Increasing list of member indices.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(t)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, t: usize) -> bool {
        t < 32 && self.0 & (1 << t) != 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Subset) -> bool {
        self.0 & other.0 != 0
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn submasks(self) -> impl Iterator<Item = Subset> {
        // Walks sub = (sub - 1) & mask downwards from the full mask.
        let mask = self.0;
        let mut next = Some(mask);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 {
                None
            } else {
                Some((cur - 1) & mask)
            };
            Some(Subset(cur))
        })
    }

    /// Re-index a subset of `within` onto `0..|within|`.
    pub fn compress(self, within: Subset) -> Subset {
        let mut out = 0u32;
        for (i, t) in within.indices().enumerate() {
            if self.contains(t) {
                out |= 1 << i;
            }
        }
        Subset(out)
    }

    /// Inverse of [`Subset::compress`].
    pub fn expand(self, within: Subset) -> Subset {
        let mut out = 0u32;
        for (i, t) in within.indices().enumerate() {
            if self.contains(i) {
                out |= 1 << t;
            }
        }
        Subset(out)
    }

    /// Canonical text form: sorted comma-separated indices, `""` for the
    /// empty set.
    pub fn key(self) -> String {
        let parts: Vec<String> = self.indices().map(|t| t.to_string()).collect();
        parts.join(",")
    }

    /// Parses the canonical text form. Whitespace around indices is accepted;
    /// repeated indices are rejected.
    pub fn parse_key(key: &str) -> Result<Subset> {
        let key = key.trim();
        if key.is_empty() {
            return Ok(Subset::EMPTY);
        }
        let mut mask = 0u32;
        for part in key.split(',') {
            let t: usize = part
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad subset key {key:?}: {part:?} is not an index")))?;
            if t >= HARD_MAX_M {
                return Err(invalid(format!("bad subset key {key:?}: index {t} is too large")));
            }
            if mask & (1 << t) != 0 {
                return Err(invalid(format!("bad subset key {key:?}: index {t} repeated")));
            }
            mask |= 1 << t;
        }
        Ok(Subset(mask))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subset::parse_key(s)
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Subset::parse_key(&s).map_err(serde::de::Error::custom)
    }
}

/// A real-valued function on the subsets of a ground set.
pub trait SetFunction {
    fn ground(&self) -> &GroundSet;

    /// Value at `s`. `s` must lie inside the ground set.
    fn value(&self, s: Subset) -> f64;
}

/// A set function stored as a dense table: candidate or validated extremal
/// coefficient function `theta`.
///
/// Construction only requires finite entries. The structural conditions
/// (`theta(∅) = 0`, unit singletons, complete alternation) are checked by
/// [`crate::alternation::validate_ecf`], which reports every violation.
#[derive(Debug, Clone, PartialEq)]
pub struct EcfTable {
    ground: GroundSet,
    values: Vec<f64>,
}

impl EcfTable {
    /// Table from one value per mask, `values[0]` being `theta(∅)`.
    pub fn from_values(ground: GroundSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != ground.table_len() {
            return Err(invalid(format!(
                "expected {} table entries, got {}",
                ground.table_len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite value at subset {}",
                Subset(i as u32)
            )));
        }
        Ok(Self { ground, values })
    }

    pub fn from_fn(ground: GroundSet, mut f: impl FnMut(Subset) -> f64) -> Result<Self> {
        let values = ground.subsets().map(&mut f).collect();
        Self::from_values(ground, values)
    }

    /// `theta(A) = |A|`: independent locations. Also the cardinality set
    /// function.
    pub fn independence(ground: GroundSet) -> Self {
        let values = ground.subsets().map(|s| s.len() as f64).collect();
        Self { ground, values }
    }

    /// `theta(A) = 1` for every non-empty `A`: identical locations.
    pub fn complete_dependence(ground: GroundSet) -> Self {
        let values = ground
            .subsets()
            .map(|s| if s.is_empty() { 0.0 } else { 1.0 })
            .collect();
        Self { ground, values }
    }

    pub fn get(&self, s: Subset) -> Result<f64> {
        self.ground.check(s)?;
        Ok(self.values[s.mask() as usize])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_parts(self) -> (GroundSet, Vec<f64>) {
        (self.ground, self.values)
    }

    /// The table on the points of `a`, relabelled onto `0..|a|`.
    pub fn restrict(&self, a: Subset) -> Result<EcfTable> {
        let ground = self.ground.restrict(a)?;
        let values = ground
            .subsets()
            .map(|k| self.values[k.expand(a).mask() as usize])
            .collect();
        Ok(EcfTable { ground, values })
    }

    /// Pairwise summary read off `theta({s, t})`.
    pub fn bivariate(&self, s: usize, t: usize) -> Result<BivariateSummary> {
        self.ground.check_index(s)?;
        self.ground.check_index(t)?;
        if s == t {
            return Ok(BivariateSummary::from_theta_pair(1.0));
        }
        Ok(BivariateSummary::from_theta_pair(
            self.values[Subset::pair(s, t).mask() as usize],
        ))
    }
}

impl SetFunction for EcfTable {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn value(&self, s: Subset) -> f64 {
        self.values[s.mask() as usize]
    }
}

/// Pairwise dependence summary: `theta_pair + chi = 2`, `eta = 1 - chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateSummary {
    pub theta_pair: f64,
    pub chi: f64,
    pub eta: f64,
}

impl BivariateSummary {
    pub fn from_theta_pair(theta_pair: f64) -> Self {
        Self {
            theta_pair,
            chi: 2.0 - theta_pair,
            eta: theta_pair - 1.0,
        }
    }

    pub fn from_chi(chi: f64) -> Self {
        Self {
            theta_pair: 2.0 - chi,
            chi,
            eta: 1.0 - chi,
        }
    }
}

/// `(Δ_K f)(A) = f(A) - f(A ∪ K)`.
pub fn delta<F: SetFunction + ?Sized>(f: &F, k: Subset, a: Subset) -> Result<f64> {
    let g = f.ground();
    g.check(k)?;
    g.check(a)?;
    Ok(f.value(a) - f.value(a.union(k)))
}

/// `(Δ_{K_1} .. Δ_{K_n} f)(A) = Σ_{I ⊆ {1..n}} (-1)^{|I|} f(A ∪ ⋃_{i∈I} K_i)`.
pub fn successive_delta<F: SetFunction + ?Sized>(f: &F, ks: &[Subset], a: Subset) -> Result<f64> {
    if ks.is_empty() {
        return Err(invalid("successive_delta needs at least one subset"));
    }
    if ks.len() >= 31 {
        return Err(invalid(format!(
            "successive_delta over {} subsets is too large to enumerate",
            ks.len()
        )));
    }
    let g = f.ground();
    g.check(a)?;
    for &k in ks {
        g.check(k)?;
    }
    let n = ks.len();
    let mut acc = CompensatedSum::new();
    for sel in 0u32..(1u32 << n) {
        let mut u = a;
        let mut rest = sel;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            u = u.union(ks[i]);
        }
        let v = f.value(u);
        if sel.count_ones() % 2 == 0 {
            acc.add(v);
        } else {
            acc.add(-v);
        }
    }
    Ok(acc.value())
}
