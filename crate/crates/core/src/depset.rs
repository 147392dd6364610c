//! Dependency sets of max-linear models.
//!
//! For a valid `theta` on `M`, the dependency set of the max-linear model is
//! the polytope
//!
//! ```text
//! K*_M = { y >= 0 : <y, 1_L> <= theta(L) for every non-empty L ⊆ M }
//! ```
//!
//! and its support function on the positive orthant is the stable tail
//! dependence function. Any other dependency set with the same extremal
//! coefficients lies inside `K*_M`, and every face `<y, 1_L> = theta(L)` is
//! touched.

use serde::{Deserialize, Serialize};

use crate::alternation::validate_ecf;
use crate::error::{invalid, Error, Result};
use crate::setfun::{EcfTable, GroundSet, SetFunction, Subset};

/// Largest ground set for vertex enumeration.
pub const VERTEX_MAX_M: usize = 5;

/// Feasibility and deduplication tolerance.
pub const GEOM_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-12;

/// `<y, 1_normal> <= bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Subset,
    pub bound: f64,
}

/// H-representation of the dependency set: one half-space per non-empty
/// subset (redundant ones included) plus the implicit constraints `y >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyPolytope {
    ground: GroundSet,
    halfspaces: Vec<Halfspace>,
}

impl DependencyPolytope {
    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn dim(&self) -> usize {
        self.ground.len()
    }
}

pub fn build_polytope(theta: &EcfTable) -> Result<DependencyPolytope> {
    let report = validate_ecf(theta);
    if !report.valid {
        return Err(Error::NotCompletelyAlternating(Box::new(report)));
    }
    let halfspaces = theta
        .ground()
        .nonempty_subsets()
        .map(|l| Halfspace {
            normal: l,
            bound: theta.value(l),
        })
        .collect();
    Ok(DependencyPolytope {
        ground: theta.ground().clone(),
        halfspaces,
    })
}

/// Support function of the dependency set in direction `x >= 0`, by sorting
/// the coordinates decreasingly (ties by index) and telescoping:
/// `Σ_i x_{t_i} (theta({t_1..t_i}) - theta({t_1..t_{i-1}}))`.
pub fn support_function(theta: &EcfTable, x: &[f64]) -> Result<f64> {
    let m = theta.ground().len();
    if x.len() != m {
        return Err(invalid(format!(
            "direction has {} coordinates, ground set has {m}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!(
            "support function needs finite nonnegative directions, got {v}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps increasing index order among ties.
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    let mut prefix = Subset::EMPTY;
    let mut prev = 0.0;
    let mut total = 0.0;
    for t in order {
        prefix = prefix.union(Subset::singleton(t));
        let cur = theta.value(prefix);
        total += x[t] * (cur - prev);
        prev = cur;
    }
    Ok(total)
}

fn check_dim(poly: &DependencyPolytope, y: &[f64]) -> Result<()> {
    if y.len() != poly.dim() {
        return Err(invalid(format!(
            "point has {} coordinates, polytope lives in dimension {}",
            y.len(),
            poly.dim()
        )));
    }
    Ok(())
}

fn indicator_dot(l: Subset, y: &[f64]) -> f64 {
    l.indices().map(|t| y[t]).sum()
}

/// `y >= 0` and `<y, 1_L> <= theta(L) + GEOM_TOL` for all `L`.
pub fn contains(poly: &DependencyPolytope, y: &[f64]) -> Result<bool> {
    check_dim(poly, y)?;
    Ok(feasible(poly, y))
}

fn feasible(poly: &DependencyPolytope, y: &[f64]) -> bool {
    y.iter().all(|v| *v >= -GEOM_TOL)
        && poly
            .halfspaces
            .iter()
            .all(|h| indicator_dot(h.normal, y) <= h.bound + GEOM_TOL)
}

/// Vertices of a polytope, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub points: Vec<Vec<f64>>,
}

impl VertexSet {
    /// `max_y <x, y>` over the vertices: the linear-programming value of the
    /// polytope in direction `x`.
    pub fn max_dot(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|y| y.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// A vertex attaining [`VertexSet::max_dot`]; the first in sorted order
    /// among ties within `GEOM_TOL`.
    pub fn argmax_dot(&self, x: &[f64]) -> Option<&[f64]> {
        let best = self.max_dot(x);
        self.points
            .iter()
            .find(|y| y.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= best - GEOM_TOL)
            .map(|y| y.as_slice())
    }
}

/// All vertices by active-set enumeration: every choice of `m` constraints
/// (half-spaces and coordinate planes) with a nonsingular system is solved,
/// infeasible solutions are dropped, and duplicates within `GEOM_TOL`
/// merged. Restricted to `m <= 5`.
pub fn vertices(poly: &DependencyPolytope) -> Result<VertexSet> {
    let m = poly.dim();
    if m > VERTEX_MAX_M {
        return Err(Error::TooLarge {
            m,
            cap: VERTEX_MAX_M,
        });
    }
    // Every constraint is `<y, 1_mask> = rhs` when active; coordinate planes
    // are the singleton masks with right-hand side 0.
    let mut rows: Vec<(u32, f64)> = poly
        .halfspaces
        .iter()
        .map(|h| (h.normal.mask(), h.bound))
        .collect();
    rows.extend((0..m).map(|t| (1u32 << t, 0.0)));
    let mut bounds = vec![f64::INFINITY; 1 << m];
    for h in &poly.halfspaces {
        bounds[h.normal.mask() as usize] = h.bound;
    }

    let n = rows.len();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut pick: Vec<usize> = (0..m).collect();
    let mut sums = vec![0.0; 1 << m];
    loop {
        if let Some(y) = solve(&rows, &pick) {
            let y = &y[..m];
            for mask in 1..sums.len() {
                let low = mask.trailing_zeros() as usize;
                sums[mask] = sums[mask & (mask - 1)] + y[low];
            }
            let feasible = y.iter().all(|v| *v >= -GEOM_TOL)
                && sums.iter().zip(&bounds).all(|(s, b)| *s <= b + GEOM_TOL);
            if feasible && !points.iter().any(|p| close(p, y)) {
                points.push(y.to_vec());
            }
        }
        // Next m-combination of 0..n in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                points.sort_by(|a, b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                return Ok(VertexSet { points });
            }
            i -= 1;
            if pick[i] < n - m + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..m {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GEOM_TOL)
}

// Gauss-Jordan elimination with partial pivoting on the selected rows.
fn solve(rows: &[(u32, f64)], pick: &[usize]) -> Option<[f64; VERTEX_MAX_M]> {
    let m = pick.len();
    let mut a = [[0.0f64; VERTEX_MAX_M + 1]; VERTEX_MAX_M];
    for (i, &r) in pick.iter().enumerate() {
        let (mask, rhs) = rows[r];
        for (c, cell) in a[i].iter_mut().enumerate().take(m) {
            *cell = if mask & (1 << c) != 0 { 1.0 } else { 0.0 };
        }
        a[i][m] = rhs;
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, piv);
        let pivot = a[col];
        for (r, row) in a.iter_mut().enumerate().take(m) {
            if r != col {
                let f = row[col] / pivot[col];
                if f != 0.0 {
                    for (x, p) in row[col..=m].iter_mut().zip(&pivot[col..=m]) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    let mut y = [0.0; VERTEX_MAX_M];
    for i in 0..m {
        let v = a[i][m] / a[i][i];
        y[i] = if v.abs() < PIVOT_TOL { 0.0 } else { v };
    }
    Some(y)
}

/// A point of the dependency set on the face `<y, 1_L> = theta(L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTouch {
    pub subset: Subset,
    pub point: Vec<f64>,
    pub value: f64,
    pub target: f64,
}

impl FaceTouch {
    pub fn attained(&self) -> bool {
        (self.value - self.target).abs() <= GEOM_TOL
    }
}

/// The vertex maximizing `<y, 1_L>`, with the attained value and
/// `theta(L)`. Restricted to `m <= 5`.
pub fn face_touch_check(theta: &EcfTable, l: Subset) -> Result<FaceTouch> {
    theta.ground().check(l)?;
    if l.is_empty() {
        return Err(invalid("face subset must be non-empty"));
    }
    let poly = build_polytope(theta)?;
    let vs = vertices(&poly)?;
    let dir: Vec<f64> = (0..poly.dim())
        .map(|t| if l.contains(t) { 1.0 } else { 0.0 })
        .collect();
    let point = vs.argmax_dot(&dir).expect("polytope has vertices").to_vec();
    Ok(FaceTouch {
        subset: l,
        value: indicator_dot(l, &point),
        target: theta.value(l),
        point,
    })
}
