use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::TauTable;
use crate::error::{invalid, Result};

/// `n` replicates of the field on the ground set, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub model_digest: String,
}

impl SampleBatch {
    /// Batch from row-major values. Entries must be strictly positive.
    pub fn new(
        labels: Vec<String>,
        values: Vec<f64>,
        seed: u64,
        model_digest: String,
    ) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(invalid("a sample batch needs at least one column"));
        }
        if !values.len().is_multiple_of(m) {
            return Err(invalid(format!(
                "{} values do not fill rows of width {m}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(invalid(format!("sample values must be positive, got {v}")));
        }
        Ok(Self {
            n: values.len() / m,
            labels,
            values,
            seed,
            model_digest,
        })
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.m();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m())
    }

    pub fn column(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[t])
    }
}

/// Draws `n` replicates of `X_t = max_{L ∋ t} tau_L V_L`.
///
/// Each replicate uses its own ChaCha8 stream (stream index = replicate
/// index) under the given seed, so the batch depends only on
/// `(tau, n, seed)` and rows can be generated in parallel. Within a row,
/// `V_L = -1 / ln U` is drawn for every `L` with `tau_L > 0`, in canonical
/// subset order.
pub fn simulate(tau: &TauTable, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(invalid("replicate count must be at least 1"));
    }
    let m = tau.m();
    let active: Vec<(f64, Vec<usize>)> = tau
        .support()
        .map(|(l, v)| (v, l.indices().collect()))
        .collect();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; n * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            rng.set_word_pos(0);
            for (w, members) in &active {
                let u: f64 = rng.sample(Open01);
                let z = w * (-1.0 / u.ln());
                for &t in members {
                    if z > row[t] {
                        row[t] = z;
                    }
                }
            }
        });
    Ok(SampleBatch {
        n,
        labels: tau.ground().all_labels(),
        values,
        seed,
        model_digest: tau.digest(),
    })
}

/// `X = max(alpha X1, (1 - alpha) X2)` row by row, for independent batches
/// on the same locations. The result has standard Fréchet marginals and
/// extremal coefficients `alpha theta1 + (1 - alpha) theta2`.
pub fn max_combine_batches(b1: &SampleBatch, b2: &SampleBatch, alpha: f64) -> Result<SampleBatch> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if b1.labels != b2.labels || b1.n != b2.n {
        return Err(invalid("batches must share locations and replicate count"));
    }
    let values: Vec<f64> = b1
        .values
        .iter()
        .zip(&b2.values)
        .map(|(x, y)| (alpha * x).max((1.0 - alpha) * y))
        .collect();
    let mut h = Sha256::new();
    h.update(b1.model_digest.as_bytes());
    h.update(b2.model_digest.as_bytes());
    h.update(alpha.to_bits().to_le_bytes());
    let digest = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    SampleBatch::new(b1.labels.clone(), values, b1.seed, digest)
}
