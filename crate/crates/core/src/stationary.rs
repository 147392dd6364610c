//! Stationary fields on lattices and the storm process.
//!
//! A storm process drops indicator storms `u 1_A(t - s)` at the points of a
//! Poisson process on `(0, ∞) × Z^d` and takes pointwise maxima. On a finite
//! window it is exactly a max-linear model: the source cell `s` hits the
//! cells `L(s) = {t : t - s ∈ A}` with weight `1 / |A|`, and
//!
//! ```text
//! chi(h) = |A ∩ (A + h)| / |A|,
//! ```
//!
//! which vanishes once `h` exceeds the diameter of `A`.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::maxlinear::{simulate, SampleBatch, TauTable};
use crate::setfun::{EcfTable, GroundSet, SetFunction, Subset, DEFAULT_MAX_M, TOL_EQ};

/// Integer lattice coordinates.
pub type Cell = Vec<i64>;

/// The box `[0, extent_1) × … × [0, extent_d)` with physical spacing per
/// axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(extent: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        if extent.is_empty() || extent.len() != spacing.len() {
            return Err(invalid(format!(
                "grid needs matching extent and spacing of dimension >= 1, got {} and {}",
                extent.len(),
                spacing.len()
            )));
        }
        if extent.contains(&0) {
            return Err(invalid("grid extents must be at least 1"));
        }
        if let Some(h) = spacing.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { extent, spacing })
    }

    /// Unit spacing.
    pub fn unit(extent: Vec<usize>) -> Result<Self> {
        let d = extent.len();
        Self::new(extent, vec![1.0; d])
    }

    pub fn d(&self) -> usize {
        self.extent.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn contains(&self, c: &[i64]) -> bool {
        c.len() == self.d()
            && c.iter()
                .zip(&self.extent)
                .all(|(x, e)| *x >= 0 && (*x as u64) < *e as u64)
    }
}

/// Storm shape `A` on a grid, with `mu = |A| · cell volume`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormModel {
    grid: GridSpec,
    shape: Vec<Cell>,
    mu: f64,
}

impl StormModel {
    /// The shape is deduplicated and sorted.
    pub fn new(shape: Vec<Cell>, grid: GridSpec) -> Result<Self> {
        if shape.is_empty() {
            return Err(invalid("storm shape must contain at least one cell"));
        }
        let d = grid.d();
        if let Some(c) = shape.iter().find(|c| c.len() != d) {
            return Err(invalid(format!(
                "shape cell {c:?} has dimension {}, grid has {d}",
                c.len()
            )));
        }
        let shape: Vec<Cell> = shape.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mu = shape.len() as f64 * grid.cell_volume();
        Ok(Self { grid, shape, mu })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn shape(&self) -> &[Cell] {
        &self.shape
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn d(&self) -> usize {
        self.grid.d()
    }
}

fn sub(a: &[i64], b: &[i64]) -> Cell {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[i64], b: &[i64]) -> Cell {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Label of a cell: coordinates joined by `_`.
pub fn cell_label(c: &[i64]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("_")
}

fn check_window(model: &StormModel, window: &[Cell]) -> Result<()> {
    if window.is_empty() {
        return Err(invalid("window must contain at least one cell"));
    }
    if let Some(c) = window.iter().find(|c| !model.grid.contains(c)) {
        return Err(invalid(format!("window cell {c:?} lies outside the grid")));
    }
    let distinct: BTreeSet<&Cell> = window.iter().collect();
    if distinct.len() != window.len() {
        return Err(invalid("window cells must be distinct"));
    }
    Ok(())
}

/// Max-linear weights of the storm process on `window`, with the default
/// ground-set cap.
pub fn storm_tau(model: &StormModel, window: &[Cell]) -> Result<TauTable> {
    storm_tau_with_cap(model, window, DEFAULT_MAX_M)
}

/// [`storm_tau`] with an explicit ground-set cap. Sources range over the
/// dilation `window ⊕ (-A)`, so every storm touching the window counts, and
/// sources with the same footprint are merged.
pub fn storm_tau_with_cap(model: &StormModel, window: &[Cell], cap: usize) -> Result<TauTable> {
    check_window(model, window)?;
    let ground = GroundSet::with_labels(window.iter().map(|c| cell_label(c)).collect(), cap)?;
    let index: HashMap<&Cell, usize> = window.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let sources: BTreeSet<Cell> = window
        .iter()
        .flat_map(|w| model.shape.iter().map(move |a| sub(w, a)))
        .collect();
    let mut counts = vec![0u64; ground.table_len()];
    for s in &sources {
        let mut l = Subset::EMPTY;
        for a in &model.shape {
            if let Some(&i) = index.get(&add(s, a)) {
                l = l.union(Subset::singleton(i));
            }
        }
        counts[l.mask() as usize] += 1;
    }
    let k = model.shape.len() as f64;
    TauTable::from_values(ground, counts.into_iter().map(|c| c as f64 / k).collect())
}

/// `|A ∩ (A + h)| / |A|` for a lag in cell units.
pub fn storm_chi(model: &StormModel, lag: &[i64]) -> Result<f64> {
    if lag.len() != model.d() {
        return Err(invalid(format!(
            "lag has dimension {}, model has {}",
            lag.len(),
            model.d()
        )));
    }
    let shape: BTreeSet<&Cell> = model.shape.iter().collect();
    let overlap = model
        .shape
        .iter()
        .filter(|a| shape.contains(&add(a, lag)))
        .count();
    Ok(overlap as f64 / model.shape.len() as f64)
}

/// `n` replicates of the storm process on `window`.
pub fn storm_simulate(model: &StormModel, window: &[Cell], n: usize, seed: u64) -> Result<SampleBatch> {
    simulate(&storm_tau(model, window)?, n, seed)
}

/// Cells of an inclusive range specification such as `0..9` or
/// `0..3,0..3`, in row-major order (last axis fastest).
pub fn parse_window(spec: &str) -> Result<Vec<Cell>> {
    let mut axes = Vec::new();
    for part in spec.split(',') {
        let (a, b) = part
            .trim()
            .split_once("..")
            .ok_or_else(|| invalid(format!("window axis {part:?} is not of the form a..b")))?;
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad window bound {a:?}")))?;
        let b: i64 = b
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad window bound {b:?}")))?;
        if a > b {
            return Err(invalid(format!("empty window axis {a}..{b}")));
        }
        axes.push((a, b));
    }
    let mut cells: Vec<Cell> = vec![Vec::new()];
    for (a, b) in axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                (a..=b).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationViolation {
    pub shift: Cell,
    pub subset: Subset,
    pub value: f64,
    pub shifted_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub valid: bool,
    /// Number of `(shift, M)` comparisons made.
    pub checked: u64,
    pub violations: Vec<TranslationViolation>,
    /// Shifts that move every cell out of the window.
    pub skipped_shifts: Vec<Cell>,
}

/// Compares `theta(M + h)` with `theta(M)` for every shift `h` and every
/// non-empty `M` with `M + h` inside the window. `theta` is indexed by the
/// window cells in the given order.
pub fn is_translation_invariant(
    theta: &EcfTable,
    window: &[Cell],
    shifts: &[Cell],
) -> Result<TranslationReport> {
    let m = theta.ground().len();
    if window.len() != m {
        return Err(invalid(format!(
            "window has {} cells, table has {m} locations",
            window.len()
        )));
    }
    let index: HashMap<&Cell, usize> = window.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut skipped_shifts = Vec::new();
    for h in shifts {
        let image: Vec<Option<usize>> = window
            .iter()
            .map(|c| {
                if c.len() == h.len() {
                    index.get(&add(c, h)).copied()
                } else {
                    None
                }
            })
            .collect();
        let domain = Subset::from_indices((0..m).filter(|&i| image[i].is_some()))?;
        if domain.is_empty() {
            skipped_shifts.push(h.clone());
            continue;
        }
        for s in domain.submasks().filter(|s| !s.is_empty()) {
            let shifted = Subset::from_indices(s.indices().map(|i| image[i].unwrap()))?;
            let (v, w) = (theta.value(s), theta.value(shifted));
            checked += 1;
            if (v - w).abs() > TOL_EQ {
                violations.push(TranslationViolation {
                    shift: h.clone(),
                    subset: s,
                    value: v,
                    shifted_value: w,
                });
            }
        }
    }
    Ok(TranslationReport {
        valid: violations.is_empty(),
        checked,
        violations,
        skipped_shifts,
    })
}
