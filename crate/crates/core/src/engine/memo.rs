use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{Item, Prefix, Trajectory};
use crate::{Error, Result};

/// Counters of one memo table's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    /// `SIM` calls (trajectory completions).
    pub sim_calls: u64,
    /// `ORACLE` calls (item readouts).
    pub oracle_calls: u64,
    /// Invocations of the recursive routine: every top-level call plus every
    /// recursive call made on an unassigned entry.
    pub r_invocations: u64,
    pub memo_hits: u64,
    pub memo_misses: u64,
    pub memo_writes: u64,
    pub draw_cache_hits: u64,
}

impl SolverStats {
    pub fn add(&mut self, other: &SolverStats) {
        self.sim_calls += other.sim_calls;
        self.oracle_calls += other.oracle_calls;
        self.r_invocations += other.r_invocations;
        self.memo_hits += other.memo_hits;
        self.memo_misses += other.memo_misses;
        self.memo_writes += other.memo_writes;
        self.draw_cache_hits += other.draw_cache_hits;
    }

    pub fn since(&self, earlier: &SolverStats) -> SolverStats {
        SolverStats {
            sim_calls: self.sim_calls - earlier.sim_calls,
            oracle_calls: self.oracle_calls - earlier.oracle_calls,
            r_invocations: self.r_invocations - earlier.r_invocations,
            memo_hits: self.memo_hits - earlier.memo_hits,
            memo_misses: self.memo_misses - earlier.memo_misses,
            memo_writes: self.memo_writes - earlier.memo_writes,
            draw_cache_hits: self.draw_cache_hits - earlier.draw_cache_hits,
        }
    }
}

/// One conditional draw `S'` with the items read at the sampled periods.
#[derive(Clone, Debug)]
pub struct TracedDraw {
    pub trajectory: Trajectory,
    /// `(t, S'^t, item)` for `t ∈ ℵ^k` (1-based) where something is consumed.
    pub sampled: Vec<(usize, Prefix, Item)>,
}

/// The multiset `𝓢^{S,k}`.
#[derive(Clone, Debug)]
pub struct DrawSet {
    pub draws: Vec<TracedDraw>,
}

impl DrawSet {
    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> + '_ {
        self.draws.iter().map(|d| &d.trajectory)
    }
}

/// The memoization table `Υ` with the draw cache.
///
/// Rows hold `X^1(S), …, X^j(S)` contiguously; `Υ(S, k) = 0` for `k ≤ 0`.
/// A value is written only directly after its predecessor, and never
/// overwritten.
#[derive(Debug, Default)]
pub struct MemoTable {
    rows: HashMap<Prefix, Vec<f64>>,
    draws: HashMap<(Prefix, usize), Arc<DrawSet>>,
    index_sets: HashMap<usize, Arc<[usize]>>,
    retain_draws: bool,
    pub(crate) stats: SolverStats,
}

impl MemoTable {
    pub fn new() -> Self {
        Self { retain_draws: true, ..Default::default() }
    }

    /// A table that drops `𝓢^{S,k−1}` once `Υ(S,k)` is written. The
    /// recursion never asks for such a set again, so results are unchanged;
    /// only memory is saved.
    pub fn compact() -> Self {
        Self { retain_draws: false, ..Default::default() }
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// `Υ(S, k)`, or `None` when unassigned.
    pub fn get(&self, prefix: &Prefix, k: isize) -> Option<f64> {
        if k <= 0 {
            return Some(0.0);
        }
        self.rows.get(prefix).and_then(|row| row.get(k as usize - 1).copied())
    }

    /// `Υ(S, 1..=len)`.
    pub fn row(&self, prefix: &Prefix) -> &[f64] {
        self.rows.get(prefix).map_or(&[], Vec::as_slice)
    }

    /// Number of assigned `(S, k ≥ 1)` entries.
    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn write(&mut self, prefix: &Prefix, k: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Internal(format!("Υ({prefix}, {k}) = {value} outside [0, 1]")));
        }
        let row = self.rows.entry(prefix.clone()).or_default();
        if row.len() + 1 != k {
            return Err(Error::Internal(format!(
                "memo write Υ({prefix}, {k}) with {} entries assigned (entries are written once, in order)",
                row.len()
            )));
        }
        row.push(value);
        self.stats.memo_writes += 1;
        if !self.retain_draws {
            self.draws.remove(&(prefix.clone(), k - 1));
        }
        Ok(())
    }

    pub(crate) fn cached_draws(&mut self, prefix: &Prefix, k: usize) -> Option<Arc<DrawSet>> {
        let hit = self.draws.get(&(prefix.clone(), k)).cloned();
        if hit.is_some() {
            self.stats.draw_cache_hits += 1;
        }
        hit
    }

    pub(crate) fn store_draws(&mut self, prefix: &Prefix, k: usize, set: Arc<DrawSet>) {
        self.draws.insert((prefix.clone(), k), set);
    }

    pub(crate) fn index_set(&mut self, k: usize, make: impl FnOnce() -> Result<Vec<usize>>) -> Result<Arc<[usize]>> {
        if let Some(s) = self.index_sets.get(&k) {
            return Ok(s.clone());
        }
        let s: Arc<[usize]> = make()?.into();
        self.index_sets.insert(k, s.clone());
        Ok(s)
    }
}
