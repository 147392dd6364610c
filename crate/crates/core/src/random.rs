//! Random valid models, for property tests and demonstrations.

use rand::Rng;

use crate::error::Result;
use crate::maxlinear::{theta_table, TauTable};
use crate::setfun::{EcfTable, GroundSet, Subset};

/// Random max-linear weights on `m` locations.
///
/// Up to `3m` random subsets with `|L| >= 2` get uniform weights, the
/// weights are scaled so the largest marginal sum is 1, and singleton
/// weights fill every marginal up to exactly 1.
pub fn random_tau<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<TauTable> {
    let ground = GroundSet::new(m)?;
    let n = ground.table_len();
    let mut tau = vec![0.0; n];
    let multi = n - 1 - m;
    if multi > 0 {
        let k = rng.random_range(0..=multi.min(3 * m));
        for _ in 0..k {
            let mask = loop {
                let s = rng.random_range(1..n as u32);
                if s.count_ones() >= 2 {
                    break s;
                }
            };
            tau[mask as usize] += rng.random::<f64>();
        }
    }
    let sums: Vec<f64> = (0..m)
        .map(|t| {
            (0..n)
                .filter(|&l| l & (1 << t) != 0)
                .map(|l| tau[l])
                .sum()
        })
        .collect();
    let top = sums.iter().cloned().fold(0.0, f64::max);
    if top > 0.0 {
        // A random share of the mass stays on singletons.
        let scale = top / rng.random_range(0.2..=1.0);
        for v in tau.iter_mut() {
            *v /= scale;
        }
    }
    for t in 0..m {
        let covered: f64 = (0..n)
            .filter(|&l| l & (1 << t) != 0 && l != 1 << t)
            .map(|l| tau[l])
            .sum();
        tau[Subset::singleton(t).mask() as usize] = (1.0 - covered).max(0.0);
    }
    TauTable::from_values(ground, tau)
}

/// `theta` of a random max-linear model; valid by construction.
pub fn random_valid_ecf<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<EcfTable> {
    Ok(theta_table(&random_tau(m, rng)?))
}

/// A valid table with one entry `|A| >= 2` moved by a random amount in
/// `[-scale, scale]`; usually, but not always, invalid.
pub fn perturbed_ecf<R: Rng + ?Sized>(m: usize, scale: f64, rng: &mut R) -> Result<EcfTable> {
    let (ground, mut values) = random_valid_ecf(m, rng)?.into_parts();
    if m >= 2 {
        let mask = loop {
            let s = rng.random_range(1..ground.table_len() as u32);
            if s.count_ones() >= 2 {
                break s;
            }
        };
        values[mask as usize] += rng.random_range(-scale..=scale);
    }
    EcfTable::from_values(ground, values)
}
