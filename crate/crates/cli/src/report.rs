use serde_json::{json, Map, Value};

use excoef::alternation::validate_ecf;
use excoef::depset::{build_polytope, vertices, VERTEX_MAX_M};
use excoef::estimate::{check_bivariate_cdf, check_continuity_bound, estimate_theta, SLACK_SIGMAS};
use excoef::io::tau_to_json;
use excoef::maxlinear::{
    bivariate, build_tau, chi_min_eigenvalue, recover_theta, simulate, spectral_atoms, NormKind,
};
use excoef::setfun::{EcfTable, SetFunction};
use excoef::transform::{triangle_check_eta, triangle_check_theta, BernsteinSpec, TripleSampling};

const EPSILONS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
const CDF_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Report document and whether the table is valid. Monte Carlo and
/// geometric checks are summarized in `all_checks_pass`.
pub fn build(theta: &EcfTable, n: usize, seed: u64) -> excoef::Result<(Value, bool)> {
    let ground = theta.ground();
    let m = ground.len();
    let mut doc = Map::new();
    doc.insert("m".into(), json!(m));
    doc.insert("labels".into(), json!(ground.all_labels()));
    let validation = validate_ecf(theta);
    doc.insert("validation".into(), json!(validation));
    if !validation.valid {
        return Ok((Value::Object(doc), false));
    }
    let mut ok = true;

    let tau = build_tau(theta)?;
    doc.insert("tau".into(), tau_to_json(&tau)["tau"].clone());
    doc.insert("model_digest".into(), json!(tau.digest()));

    let mut pairs = Vec::new();
    for s in 0..m {
        for t in s + 1..m {
            let b = bivariate(&tau, s, t)?;
            pairs.push(json!({"s": s, "t": t, "theta": b.theta_pair, "chi": b.chi, "eta": b.eta}));
        }
    }
    doc.insert("bivariate".into(), Value::Array(pairs));
    let eig = chi_min_eigenvalue(&tau);
    ok &= eig >= -1e-9;
    doc.insert("chi_min_eigenvalue".into(), json!(eig));
    doc.insert("spectral_atoms".into(), json!(spectral_atoms(&tau, NormKind::Max)));

    let poly = build_polytope(theta)?;
    let mut depset = Map::new();
    depset.insert("halfspaces".into(), json!(poly.halfspaces()));
    if m <= VERTEX_MAX_M {
        depset.insert("vertices".into(), json!(vertices(&poly)?.points));
    }
    doc.insert("dependency_set".into(), Value::Object(depset));

    let mut triangle = Map::new();
    for (name, g) in [
        ("identity", BernsteinSpec::identity()),
        ("power_0.5", BernsteinSpec::Power { q: 0.5 }),
        ("log1p", BernsteinSpec::Log1p),
    ] {
        let sets = triangle_check_theta(theta, &g, TripleSampling { samples: 100_000, seed })?;
        let eta = triangle_check_eta(&tau, &g)?;
        ok &= sets.valid && eta.valid;
        triangle.insert(
            name.into(),
            json!({
                "sets": {"valid": sets.valid, "exhaustive": sets.exhaustive, "checked": sets.checked,
                         "violation_count": sets.violation_count, "min_slack": sets.min_slack},
                "eta": {"valid": eta.valid, "checked": eta.checked, "min_slack": eta.min_slack},
            }),
        );
    }
    doc.insert("triangle".into(), Value::Object(triangle));

    let batch = simulate(&tau, n, seed)?;
    let mut sim = Map::new();
    sim.insert("n".into(), json!(n));
    sim.insert("seed".into(), json!(seed));
    let mut estimates = Vec::new();
    for a in ground.nonempty_subsets().filter(|a| a.len() <= 3) {
        let exact = recover_theta(&tau, a)?;
        let e = estimate_theta(&batch, a)?;
        let pass = (e.point - exact).abs() <= SLACK_SIGMAS * exact / (n as f64).sqrt();
        ok &= pass;
        estimates.push(json!({"set": a, "exact": exact, "estimate": e.point, "stderr": e.stderr, "pass": pass}));
    }
    sim.insert("theta".into(), Value::Array(estimates));
    let grid: Vec<(f64, f64)> = CDF_GRID
        .iter()
        .flat_map(|&x| CDF_GRID.iter().map(move |&y| (x, y)))
        .collect();
    let mut continuity = Vec::new();
    let mut cdf = Vec::new();
    for s in 0..m {
        for t in s + 1..m {
            let eta = bivariate(&tau, s, t)?.eta;
            let c = check_continuity_bound(&batch, s, t, eta, &EPSILONS)?;
            ok &= c.holds;
            continuity.push(json!(c));
            let g = check_bivariate_cdf(&batch, s, t, eta, &grid)?;
            ok &= g.holds;
            cdf.push(json!(g));
        }
    }
    sim.insert("continuity".into(), Value::Array(continuity));
    sim.insert("bivariate_cdf".into(), Value::Array(cdf));
    doc.insert("simulation".into(), Value::Object(sim));
    doc.insert("all_checks_pass".into(), json!(ok));
    Ok((Value::Object(doc), true))
}
