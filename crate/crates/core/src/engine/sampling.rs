use std::sync::Arc;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::memo::{DrawSet, MemoTable, TracedDraw};
use super::SolverConfig;
use crate::keyed::DrawKey;
use crate::model::{simulate_completion, Prefix, Simulator};
use crate::{Error, Result};

/// `ℵ^k`: `η₂` distinct periods of `{1..T}`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSample {
    pub k: usize,
    pub indices: Vec<usize>,
}

/// `ℵ^k`, a pure function of `(master_seed, k)`.
pub fn sample_index_set(config: &SolverConfig, horizon: usize, k: usize) -> Result<IndexSample> {
    if config.eta2 == 0 || config.eta2 > horizon {
        return Err(Error::Parameter(format!("η₂ = {} outside [1, T = {horizon}]", config.eta2)));
    }
    let mut indices: Vec<usize> = if config.eta2 == horizon {
        (1..=horizon).collect()
    } else {
        let mut rng = DrawKey::new(config.master_seed, "index").with(k as u64).rng();
        sample(&mut rng, horizon, config.eta2).into_iter().map(|t| t + 1).collect()
    };
    indices.sort_unstable();
    Ok(IndexSample { k, indices })
}

pub(crate) fn index_set_cached(memo: &mut MemoTable, config: &SolverConfig, horizon: usize, k: usize) -> Result<Arc<[usize]>> {
    memo.index_set(k, || sample_index_set(config, horizon, k).map(|s| s.indices))
}

/// `𝓢^{S,k}`: `η₁` completions of `prefix` drawn with keys
/// `(master_seed, "traj", k, prefix, j)`, together with the items read at
/// the periods of `ℵ^k`. Generated once per `(prefix, k)` and cached.
pub fn conditional_draws(
    sim: &dyn Simulator,
    memo: &mut MemoTable,
    prefix: &Prefix,
    k: usize,
    config: &SolverConfig,
) -> Result<Arc<DrawSet>> {
    if let Some(set) = memo.cached_draws(prefix, k) {
        return Ok(set);
    }
    let horizon = sim.spec().horizon;
    let aleph = index_set_cached(memo, config, horizon, k)?;
    let base = DrawKey::new(config.master_seed, "traj").with(k as u64).with(prefix.fingerprint());
    let mut draws = Vec::with_capacity(config.eta1);
    for j in 0..config.eta1 {
        let trajectory = simulate_completion(sim, prefix, &base.with(j as u64))?;
        memo.stats.sim_calls += 1;
        let mut sampled = Vec::new();
        for &t in aleph.iter() {
            let p = trajectory.prefix(t);
            let item = sim.item(&p)?;
            memo.stats.oracle_calls += 1;
            if !item.consumption.is_empty() {
                sampled.push((t, p, item));
            }
        }
        draws.push(TracedDraw { trajectory, sampled });
    }
    let set = Arc::new(DrawSet { draws });
    memo.store_draws(prefix, k, set.clone());
    Ok(set)
}
