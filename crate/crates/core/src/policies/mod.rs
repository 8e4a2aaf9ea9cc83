//! Streaming policies: feasibility patching, rounding and the application
//! compositions.
//!
//! A policy is called once per period, in order, with the realized prefix;
//! all episode state (memo table, counters, the shared uniform, the round
//! stream) lives in an [`EpisodeContext`].

mod apps;
mod feas;
mod source;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use apps::{
    policy_is, policy_lp, policy_mmo_greedy, policy_mwmlp, policy_nrm, IsPolicy, LpPolicy, MmoGreedyPolicy, NrmPolicy,
};
pub use feas::{feas_patch_tree, feas_step, floor_policy, round_bernoulli, FeasState, BUDGET_TOL};
pub use source::{FnSource, FractionalSource, PenSource};

use crate::engine::{MemoTable, SolverStats};
use crate::keyed::DrawKey;
use crate::model::{simulate_completion, InstanceSpec, Item, Prefix, Simulator};
use crate::{Error, Result};

/// One period of a policy trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub prefix_id: String,
    pub fractional: f64,
    pub decision: f64,
    pub remaining: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverStats>,
}

/// Per-episode state.
#[derive(Debug)]
pub struct EpisodeContext {
    pub memo: MemoTable,
    /// Counters of the patching process.
    pub feas: FeasState,
    shared_uniform: f64,
    seed: u64,
    next_period: usize,
    budgets: Vec<f64>,
    used: Vec<f64>,
    /// Non-integral outputs of the patching step (rounding policies).
    pub fractional_outputs: usize,
    trace: Option<Vec<TraceRecord>>,
    blocks: HashMap<usize, Vec<(f64, f64)>>,
}

impl EpisodeContext {
    pub fn new(spec: &InstanceSpec, seed: u64) -> Self {
        Self::with_memo(spec, seed, MemoTable::compact())
    }

    /// A context reusing a memo table from earlier episodes of the same
    /// solver seed. Memo entries are pure functions of the seed and the
    /// prefix, so reuse changes cost, not decisions.
    pub fn with_memo(spec: &InstanceSpec, seed: u64, memo: MemoTable) -> Self {
        let shared_uniform = DrawKey::new(seed, "shared-uniform").rng().random::<f64>();
        Self {
            memo,
            feas: FeasState::new(&spec.b),
            shared_uniform,
            seed,
            next_period: 1,
            budgets: spec.b.clone(),
            used: vec![0.0; spec.m],
            fractional_outputs: 0,
            trace: None,
            blocks: HashMap::new(),
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Override the shared uniform (tests and replays).
    pub fn with_shared_uniform(mut self, u: f64) -> Self {
        self.shared_uniform = u;
        self
    }

    /// The `U[0,1]` drawn once at episode start.
    pub fn shared_uniform(&self) -> f64 {
        self.shared_uniform
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next period expected (1-based).
    pub fn period(&self) -> usize {
        self.next_period
    }

    /// Realized consumption `Σ_t a_i(S^t) · decision(S^t)`.
    pub fn used(&self) -> &[f64] {
        &self.used
    }

    pub fn remaining(&self) -> Vec<f64> {
        self.budgets.iter().zip(&self.used).map(|(b, u)| b - u).collect()
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn into_memo(self) -> MemoTable {
        self.memo
    }

    pub(crate) fn round_key(&self, t: usize) -> DrawKey {
        DrawKey::new(self.seed, "round").with(t as u64)
    }
}

/// A streaming policy.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    /// `(fractional value, decision)` at `prefix` with revealed `item`.
    fn decide(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, item: &Item) -> Result<(f64, f64)>;
}

/// Run one period: check the call order, read the item, decide, and record
/// the realized consumption.
pub fn step(policy: &dyn Policy, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix) -> Result<f64> {
    if prefix.len() != ctx.next_period {
        return Err(Error::Sequencing { expected: ctx.next_period, got: prefix.len() });
    }
    let item = sim.item(prefix)?;
    let (fractional, decision) = policy.decide(ctx, sim, prefix, &item)?;
    for &(i, a) in &item.consumption {
        ctx.used[i] += a * decision;
    }
    ctx.next_period += 1;
    if ctx.trace.is_some() {
        let record = TraceRecord {
            t: prefix.len(),
            prefix_id: format!("{:016x}", prefix.fingerprint()),
            fractional,
            decision,
            remaining: ctx.remaining(),
            solver: Some(ctx.memo.stats()),
        };
        ctx.trace.as_mut().expect("trace enabled").push(record);
    }
    Ok(decision)
}

/// Realized reward and decisions of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub reward: f64,
    pub decisions: Vec<f64>,
}

/// Draw a trajectory with `key` and run `policy` along it.
pub fn play_episode(policy: &dyn Policy, sim: &dyn Simulator, ctx: &mut EpisodeContext, key: &DrawKey) -> Result<EpisodeOutcome> {
    let trajectory = simulate_completion(sim, &Prefix::empty(sim.dim()), key)?;
    let mut reward = 0.0;
    let mut decisions = Vec::with_capacity(trajectory.horizon());
    for t in 1..=trajectory.horizon() {
        let prefix = trajectory.prefix(t);
        let d = step(policy, ctx, sim, &prefix)?;
        if d != 0.0 {
            reward += sim.item(&prefix)?.reward * d;
        }
        decisions.push(d);
    }
    Ok(EpisodeOutcome { reward, decisions })
}
