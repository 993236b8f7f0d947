// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use super::{steady_state, GaussianGenerator};
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_EXHAUSTIVE_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderMode {
    Exhaustive,
    MonteCarlo,
}

/// Binary on-site disorder `eps_i = +-dw_minus/2` with probability 1/2 each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderModel {
    /// rad/s
    pub dw_minus: f64,
    pub affected_sites: Vec<usize>,
    pub mode: DisorderMode,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderResult {
    /// Ensemble-averaged occupation per generator row.
    pub mean: Vec<f64>,
    /// Standard deviation across configurations (population form for
    /// exhaustive enumeration, `n - 1` form for Monte Carlo).
    pub std: Vec<f64>,
    pub n_configs: usize,
    /// Chain site of every row.
    pub sites: Vec<usize>,
}

impl DisorderModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(invalid("n_samples must be at least 1"));
        }
        if self.mode == DisorderMode::Exhaustive && self.affected_sites.len() > MAX_EXHAUSTIVE_SITES {
            return Err(invalid(format!(
                "exhaustive enumeration over {} sites exceeds {MAX_EXHAUSTIVE_SITES}; use monte_carlo",
                self.affected_sites.len()
            )));
        }
        if !self.dw_minus.is_finite() {
            return Err(invalid("dw_minus must be finite"));
        }
        Ok(())
    }

    fn offsets_from_bits(&self, n_sites: usize, bit: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut eps = vec![0.0; n_sites];
        for (k, &s) in self.affected_sites.iter().enumerate() {
            eps[s] = if bit(k) { 0.5 * self.dw_minus } else { -0.5 * self.dw_minus };
        }
        eps
    }

    /// Offsets of Monte-Carlo sample `index`: stream `index` of a ChaCha8
    /// generator seeded with `seed`.
    pub fn sample(&self, n_sites: usize, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let bits: Vec<bool> = (0..self.affected_sites.len()).map(|_| rng.gen::<bool>()).collect();
        self.offsets_from_bits(n_sites, |k| bits[k])
    }
}

/// All offset configurations the model averages over, in a fixed order.
pub fn disorder_configs(model: &DisorderModel, n_sites: usize) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if let Some(&s) = model.affected_sites.iter().find(|&&s| s >= n_sites) {
        return Err(invalid(format!("disordered site {s} outside the chain")));
    }
    Ok(match model.mode {
        DisorderMode::Exhaustive => (0..1usize << model.affected_sites.len())
            .map(|mask| model.offsets_from_bits(n_sites, |k| mask >> k & 1 == 1))
            .collect(),
        DisorderMode::MonteCarlo => (0..model.n_samples as u64).map(|i| model.sample(n_sites, i)).collect(),
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Disorder-averaged steady occupations.
///
/// `build` maps a chain-length offset vector to a generator. Configurations
/// are solved in parallel and reduced in index order, so the result does not
/// depend on the number of worker threads.
pub fn disorder_average<B>(build: B, n_sites: usize, model: &DisorderModel) -> Result<DisorderResult>
where
    B: Fn(&[f64]) -> Result<GaussianGenerator> + Sync,
{
    let configs = disorder_configs(model, n_sites)?;
    let solved: Vec<Result<(Vec<f64>, Vec<usize>)>> = configs
        .par_iter()
        .map(|eps| {
            let gen = build(eps)?;
            let c = steady_state(&gen)?;
            Ok((c.occupations(), gen.sites.clone()))
        })
        .collect();
    let mut profiles = Vec::with_capacity(solved.len());
    let mut sites = Vec::new();
    for r in solved {
        let (p, s) = r?;
        sites = s;
        profiles.push(p);
    }
    let m = profiles.len();
    let dim = profiles[0].len();
    let mut mean = vec![0.0; dim];
    let mut std = vec![0.0; dim];
    let denom = match model.mode {
        DisorderMode::Exhaustive => m as f64,
        DisorderMode::MonteCarlo => (m.max(2) - 1) as f64,
    };
    for i in 0..dim {
        let col: Vec<f64> = profiles.iter().map(|p| p[i]).collect();
        mean[i] = pairwise_sum(&col) / m as f64;
        let dev: Vec<f64> = col.iter().map(|x| (x - mean[i]).powi(2)).collect();
        std[i] = if m > 1 { (pairwise_sum(&dev) / denom).sqrt() } else { 0.0 };
    }
    Ok(DisorderResult { mean, std, n_configs: m, sites })
}
