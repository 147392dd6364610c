//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the summary lines are always shown.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use excoef::alternation::{find_alternation_witness, validate_ecf, CollectionFamily};
use excoef::depset::{build_polytope, support_function, vertices};
use excoef::estimate::{
    check_bivariate_cdf, check_continuity_bound, continuity_bounds, estimate_chi, estimate_theta,
    finite_threshold_chi, marginal_quantile,
};
use excoef::io::{ecf_to_json, to_canonical_json};
use excoef::maxlinear::{
    bivariate, build_tau, chi_min_eigenvalue, recover_theta, simulate, stable_tail_dependence,
    TauTable,
};
use excoef::random::{perturbed_ecf, random_tau, random_valid_ecf};
use excoef::setfun::{EcfTable, GroundSet, SetFunction, Subset};
use excoef::stationary::{
    is_translation_invariant, parse_window, storm_chi, storm_simulate, storm_tau, GridSpec,
    StormModel,
};
use excoef::transform::{
    transform_ecf, triangle_check_eta, triangle_check_theta, BernsteinSpec, ExpAtom,
    TripleSampling,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("round-trip exactness", Some(Duration::from_secs(10)), round_trip),
        ("brute-force oracle agreement", Some(Duration::from_secs(60)), oracle_agreement),
        ("worked example", None, worked_example),
        ("support function duality", Some(Duration::from_secs(30)), duality),
        ("simulation fidelity", Some(Duration::from_secs(300)), simulation_fidelity),
        ("continuity bound", Some(Duration::from_secs(120)), continuity_bound),
        ("transform closure", None, transform_closure),
        ("triangle inequalities", None, triangle_inequalities),
        ("chi Gram matrix", None, chi_gram),
        ("storm process", Some(Duration::from_secs(120)), storm_process),
        ("CLI determinism", None, cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > *b {
                out.pass = false;
                out.detail.push_str(&format!("; over the {} s budget", b.as_secs()));
            }
        }
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} ({:.2} s)",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn example() -> EcfTable {
    EcfTable::from_fn(GroundSet::new(3).unwrap(), |s| match s.len() {
        0 => 0.0,
        1 => 1.0,
        2 => 1.5,
        _ => 2.0,
    })
    .unwrap()
}

fn pair_table(theta: f64) -> EcfTable {
    EcfTable::from_values(GroundSet::new(2).unwrap(), vec![0.0, 1.0, 1.0, theta]).unwrap()
}

/// Inclusion-exclusion written out term by term, without compensation.
fn tau_by_hand(theta: &EcfTable) -> Vec<f64> {
    let m = theta.ground().len();
    let full = (1u32 << m) - 1;
    (0..=full)
        .map(|l| {
            if l == 0 {
                return 0.0;
            }
            let mut total = 0.0;
            for i in 0..=full {
                if i & !l == 0 {
                    let sign = if i.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                    total += sign * theta.value(Subset::from_mask((full & !l) | i));
                }
            }
            total
        })
        .collect()
}

/// `Σ_L tau_L max_{t ∈ L} x_t`, straight from the definition.
fn ell_by_hand(tau: &TauTable, x: &[f64]) -> f64 {
    tau.values()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, w)| {
            w * (0..x.len())
                .filter(|t| l & (1 << t) != 0)
                .map(|t| x[t])
                .fold(0.0, f64::max)
        })
        .sum()
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(2..=10);
        let tau = random_tau(m, &mut rng).unwrap();
        let ground = tau.ground().clone();
        let theta = EcfTable::from_fn(ground.clone(), |a| recover_theta(&tau, a).unwrap()).unwrap();
        let rebuilt = build_tau(&theta).unwrap();
        for a in ground.nonempty_subsets() {
            let want = theta.value(a);
            let got = recover_theta(&rebuilt, a).unwrap();
            worst = worst.max((got - want).abs() / want);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("200 tables, m in 2..=10, max relative error {worst:.2e}"),
    )
}

fn random_table(rng: &mut ChaCha8Rng, m: usize) -> EcfTable {
    match rng.random_range(0..3) {
        0 => random_valid_ecf(m, rng).unwrap(),
        1 => perturbed_ecf(m, 0.3, rng).unwrap(),
        _ => EcfTable::from_fn(GroundSet::new(m).unwrap(), |s| match s.len() {
            0 => 0.0,
            1 => 1.0,
            k => rng.random_range(1.0..=k as f64),
        })
        .unwrap(),
    }
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut valid, mut invalid, mut disagree) = (0, 0, 0);
    for i in 0..500u64 {
        let m = rng.random_range(2..=5);
        let theta = random_table(&mut rng, m);
        let fast = validate_ecf(&theta).valid;
        let mut witness = find_alternation_witness(&theta, CollectionFamily::Singletons).unwrap();
        if witness.is_none() {
            witness = find_alternation_witness(&theta, CollectionFamily::UpToSize(2)).unwrap();
        }
        if witness.is_none() {
            let family = CollectionFamily::Sampled {
                samples: 2000,
                max_size: 6.min((1 << m) - 1),
                seed: i,
            };
            witness = find_alternation_witness(&theta, family).unwrap();
        }
        let slow = witness.is_none();
        if fast {
            valid += 1;
        } else {
            invalid += 1;
        }
        if fast != slow {
            disagree += 1;
        }
    }
    outcome(
        disagree == 0 && valid > 0 && invalid > 0,
        format!("500 tables ({valid} valid, {invalid} invalid), {disagree} disagreements"),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn same_points(got: &[Vec<f64>], want: &[Vec<f64>]) -> bool {
    got.len() == want.len()
        && want
            .iter()
            .all(|w| got.iter().any(|g| g.iter().zip(w).all(|(a, b)| close(*a, *b))))
}

fn worked_example() -> Outcome {
    let theta = example();
    let mut notes = Vec::new();
    let tau = build_tau(&theta).unwrap();
    // Singletons, then pairs, then the triple.
    let order = [0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111];
    let want = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.5];
    let by_hand = tau_by_hand(&theta);
    let tau_ok = order.iter().zip(want).all(|(&l, w)| {
        close(tau.get(Subset::from_mask(l)), w) && close(by_hand[l as usize], w)
    });
    notes.push(format!("tau {}", if tau_ok { "ok" } else { "wrong" }));
    let full_ok = close(recover_theta(&tau, Subset::from_mask(0b111)).unwrap(), 2.0);
    let chi_ok = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .all(|&(s, t)| close(bivariate(&tau, s, t).unwrap().chi, 0.5));
    let ca_ok = find_alternation_witness(&theta, CollectionFamily::UpToSize(7))
        .unwrap()
        .is_none();
    notes.push(format!(
        "theta(M) {}, chi {}, brute force {}",
        if full_ok { "ok" } else { "wrong" },
        if chi_ok { "ok" } else { "wrong" },
        if ca_ok { "ok" } else { "wrong" }
    ));

    let v2 = vertices(&build_polytope(&pair_table(1.5)).unwrap()).unwrap();
    let want2 = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.5],
        vec![0.5, 1.0],
    ];
    // Origin, unit points, the pentagon corners of every pair, and the
    // permutations of (1, 0.5, 0.5).
    let mut want3 = vec![vec![0.0; 3]];
    for t in 0..3 {
        let mut e = vec![0.0; 3];
        e[t] = 1.0;
        want3.push(e);
        let mut p = vec![0.5; 3];
        p[t] = 1.0;
        want3.push(p);
        for s in 0..3 {
            if s != t {
                let mut q = vec![0.0; 3];
                q[t] = 1.0;
                q[s] = 0.5;
                want3.push(q);
            }
        }
    }
    let v3 = vertices(&build_polytope(&theta).unwrap()).unwrap();
    let vert_ok = same_points(&v2.points, &want2) && same_points(&v3.points, &want3);
    notes.push(format!(
        "vertices {} ({} for m=2, {} for m=3)",
        if vert_ok { "ok" } else { "wrong" },
        v2.points.len(),
        v3.points.len()
    ));
    outcome(tau_ok && full_ok && chi_ok && ca_ok && vert_ok, notes.join(", "))
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(2..=5);
        let tau = random_tau(m, &mut rng).unwrap();
        let theta = EcfTable::from_fn(tau.ground().clone(), |a| recover_theta(&tau, a).unwrap())
            .unwrap();
        let x: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..3.0)
                }
            })
            .collect();
        let sorted = support_function(&theta, &x).unwrap();
        let weighted = stable_tail_dependence(&tau, &x).unwrap();
        let direct = ell_by_hand(&tau, &x);
        let lp = vertices(&build_polytope(&theta).unwrap()).unwrap().max_dot(&x);
        for v in [weighted, direct, lp] {
            worst = worst.max((v - sorted).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("100 (theta, x) pairs, m in 2..=5, max disagreement {worst:.2e}"),
    )
}

fn simulation_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let models: Vec<(&str, TauTable)> = vec![
        ("worked example", build_tau(&example()).unwrap()),
        ("independence m=4", TauTable::independence(GroundSet::new(4).unwrap())),
        ("complete dependence m=3", TauTable::complete_dependence(GroundSet::new(3).unwrap())),
        ("random m=5", random_tau(5, &mut rng).unwrap()),
        ("random m=6", random_tau(6, &mut rng).unwrap()),
    ];
    let n = 100_000;
    let grid: Vec<(f64, f64)> = [0.5, 1.0, 2.0]
        .iter()
        .flat_map(|&x| [0.5, 1.0, 2.0].into_iter().map(move |y| (x, y)))
        .collect();
    let mut pass = true;
    let mut rates = Vec::new();
    for (name, tau) in &models {
        let m = tau.m();
        let sets: Vec<(Subset, f64)> = tau
            .ground()
            .nonempty_subsets()
            .filter(|a| a.len() <= 3)
            .map(|a| (a, recover_theta(tau, a).unwrap()))
            .collect();
        let mut ok_seeds = 0;
        for seed in 0..20 {
            let batch = simulate(tau, n, seed).unwrap();
            let theta_ok = sets.iter().all(|&(a, exact)| {
                let e = estimate_theta(&batch, a).unwrap();
                (e.point - exact).abs() <= 4.0 * exact / (n as f64).sqrt()
            });
            let mut cdf_ok = true;
            for s in 0..m {
                for t in s + 1..m {
                    let eta = bivariate(tau, s, t).unwrap().eta;
                    cdf_ok &= check_bivariate_cdf(&batch, s, t, eta, &grid).unwrap().holds;
                }
            }
            if theta_ok && cdf_ok {
                ok_seeds += 1;
            }
        }
        pass &= ok_seeds >= 19;
        rates.push(format!("{name} {ok_seeds}/20"));
    }
    outcome(pass, format!("n = 1e5; {}", rates.join(", ")))
}

fn continuity_bound() -> Outcome {
    let tau = build_tau(&example()).unwrap();
    let batch = simulate(&tau, 1_000_000, 606).unwrap();
    let eps = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for (s, t) in [(0, 1), (0, 2), (1, 2)] {
        let eta = bivariate(&tau, s, t).unwrap().eta;
        let report = check_continuity_bound(&batch, s, t, eta, &eps).unwrap();
        for c in &report.checks {
            pass &= c.empirical <= c.exact_bound + 4.0 * c.stderr;
            pass &= c.linear_bound >= c.exact_bound;
            worst = worst.max(c.empirical - c.exact_bound);
        }
    }
    let (exact, _) = continuity_bounds(0.5, 1.0);
    pass &= (exact - 0.786_938_680_574_733).abs() < 1e-12;
    outcome(
        pass,
        format!("n = 1e6, 3 pairs x 5 epsilons, largest empirical minus bound {worst:.4}"),
    )
}

fn catalog() -> Vec<BernsteinSpec> {
    vec![
        BernsteinSpec::Linear { c: 0.3, b: 2.0 },
        BernsteinSpec::Power { q: 0.5 },
        BernsteinSpec::Power { q: 0.2 },
        BernsteinSpec::Log1p,
        BernsteinSpec::ExpMixture {
            c: 0.1,
            b: 0.5,
            atoms: vec![
                ExpAtom {
                    weight: 1.0,
                    rate: 2.0,
                },
                ExpAtom {
                    weight: 0.5,
                    rate: 0.1,
                },
            ],
        },
        BernsteinSpec::ShiftedPower { tau: 0.5 },
        BernsteinSpec::ShiftedPower { tau: -1.5 },
    ]
}

fn transform_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let kinds = catalog();
    let mut bad = 0;
    for _ in 0..100 {
        let m = rng.random_range(2..=8);
        let theta = random_valid_ecf(m, &mut rng).unwrap();
        for g in &kinds {
            let out = transform_ecf(&theta, g).unwrap();
            let singletons = (0..m).all(|t| out.value(Subset::singleton(t)) == 1.0);
            if !validate_ecf(&out).valid || !singletons || out.value(Subset::EMPTY) != 0.0 {
                bad += 1;
            }
        }
    }
    let sqrt = transform_ecf(
        &EcfTable::independence(GroundSet::new(2).unwrap()),
        &BernsteinSpec::Power { q: 0.5 },
    )
    .unwrap()
    .value(Subset::pair(0, 1));
    let sqrt_ok = (sqrt - 2f64.sqrt()).abs() <= 1e-12;
    outcome(
        bad == 0 && sqrt_ok,
        format!(
            "100 tables x {} kinds, {bad} failures; independent pair -> {sqrt:.16}",
            kinds.len()
        ),
    )
}

fn triangle_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let gs = [
        BernsteinSpec::identity(),
        BernsteinSpec::Power { q: 0.5 },
        BernsteinSpec::Log1p,
    ];
    let (mut violations, mut checked, mut all_exhaustive) = (0, 0, true);
    for _ in 0..100 {
        let m = rng.random_range(2..=5);
        let tau = random_tau(m, &mut rng).unwrap();
        let theta = EcfTable::from_fn(tau.ground().clone(), |a| recover_theta(&tau, a).unwrap())
            .unwrap();
        for g in &gs {
            let sets = triangle_check_theta(&theta, g, TripleSampling::default()).unwrap();
            let eta = triangle_check_eta(&tau, g).unwrap();
            all_exhaustive &= sets.exhaustive;
            violations += sets.violation_count + eta.violation_count;
            checked += sets.checked + eta.checked;
        }
    }
    outcome(
        violations == 0 && all_exhaustive,
        format!("100 tables x 3 functions, {checked} triples, {violations} violations"),
    )
}

fn chi_gram() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut lib_min = f64::INFINITY;
    let mut oracle_min = f64::INFINITY;
    for _ in 0..100 {
        let m = rng.random_range(2..=10);
        let tau = random_tau(m, &mut rng).unwrap();
        lib_min = lib_min.min(chi_min_eigenvalue(&tau));
        let chi = DMatrix::from_fn(m, m, |s, t| {
            tau.values()
                .iter()
                .enumerate()
                .filter(|(l, _)| l & (1 << s) != 0 && l & (1 << t) != 0)
                .map(|(_, w)| w)
                .sum::<f64>()
        });
        let eig = chi.symmetric_eigenvalues().min();
        oracle_min = oracle_min.min(eig);
    }
    outcome(
        lib_min >= -1e-9 && oracle_min >= -1e-9,
        format!("100 models, m in 2..=10, smallest eigenvalue {lib_min:.3e} (oracle {oracle_min:.3e})"),
    )
}

fn storm_process() -> Outcome {
    let model = StormModel::new(
        vec![vec![0], vec![1], vec![2]],
        GridSpec::unit(vec![16]).unwrap(),
    )
    .unwrap();
    let mut notes = Vec::new();
    let chi1 = storm_chi(&model, &[1]).unwrap();
    let exact_ok = chi1 == 2.0 / 3.0;
    let support_ok = (3..=10).all(|h| {
        storm_chi(&model, &[h]).unwrap() == 0.0 && storm_chi(&model, &[-h]).unwrap() == 0.0
    });
    notes.push(format!("chi(1) = {chi1}, chi(|h| >= 3) = 0: {support_ok}"));

    let window = parse_window("0..7").unwrap();
    let tau = storm_tau(&model, &window).unwrap();
    let theta = EcfTable::from_fn(tau.ground().clone(), |a| recover_theta(&tau, a).unwrap()).unwrap();
    let shifts: Vec<Vec<i64>> = (-7..=7).map(|h| vec![h]).collect();
    let inv = is_translation_invariant(&theta, &window, &shifts).unwrap();
    let valid = validate_ecf(&theta).valid;
    notes.push(format!(
        "window 0..7 translation invariant: {} ({} comparisons), valid: {valid}",
        inv.valid, inv.checked
    ));

    let batch = storm_simulate(&model, &parse_window("0..1").unwrap(), 1_000_000, 1010).unwrap();
    let x = marginal_quantile(&batch, 1, 0.99).unwrap();
    let est = estimate_chi(&batch, 0, 1, x).unwrap();
    let sim_ok = est.within(2.0 / 3.0, 5.0);
    notes.push(format!(
        "simulated chi(1) at the 0.99 quantile {:.4} +- {:.4}",
        est.point, est.stderr
    ));
    // At the 0.95 quantile the estimate targets the finite-threshold value.
    let x95 = marginal_quantile(&batch, 1, 0.95).unwrap();
    let est95 = estimate_chi(&batch, 0, 1, x95).unwrap();
    let finite = finite_threshold_chi(2.0 - 2.0 / 3.0, x95);
    let sim95_ok = est95.within(finite, 5.0);
    notes.push(format!(
        "at 0.95 {:.4} vs finite-threshold {:.4}",
        est95.point, finite
    ));
    outcome(
        exact_ok && support_ok && inv.valid && valid && sim_ok && sim95_ok,
        notes.join("; "),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("example.json");
    std::fs::write(&path, to_canonical_json(&ecf_to_json(&example())).unwrap()).unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_excoef"))
            .args(["report", path.to_str().unwrap(), "--seed", "1234"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    outcome(
        ok,
        format!(
            "two report runs, {} bytes each, identical: {}",
            a.stdout.len(),
            a.stdout == b.stdout
        ),
    )
}
