use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{MemoTable, SolverStats};
use crate::keyed::DrawKey;
use crate::model::{ExplicitScenarioTree, Prefix, Simulator};
use crate::policies::{play_episode, EpisodeContext, Policy, TraceRecord};
use crate::{Error, Result};

/// Slack of the per-episode budget audit.
pub const AUDIT_TOL: f64 = 1e-9;

/// Exact expected reward `Σ μ(S) Z(S) X(S)` of a deterministic policy.
pub fn eval_policy_exact(tree: &ExplicitScenarioTree, policy: &dyn Fn(&Prefix) -> Option<f64>) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..tree.len() {
        let prefix = tree.prefix_of(k);
        let x = policy(&prefix).ok_or_else(|| Error::MissingValue(prefix.to_string()))?;
        let node = tree.node(k);
        total += node.prob * node.item.reward * x;
    }
    Ok(total)
}

/// Builds the policy for one replicate group from that group's solver seed.
pub type PolicyFactory<'a> = dyn Fn(u64) -> Result<Box<dyn Policy>> + Sync + 'a;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Abort on the first violating episode.
    #[default]
    Abort,
    /// Count violations and keep going.
    Count,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    /// Episodes sharing one solver seed (and one memo table).
    pub group_size: usize,
    pub audit: AuditMode,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { group_size: 1, audit: AuditMode::Abort }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_reward: f64,
    /// Standard error of the mean, clustered by replicate group.
    pub std_error: f64,
    pub episodes: usize,
    pub groups: usize,
    pub violation_count: usize,
    /// `max(0, Σ_t a_i·decision − b_i)` over episodes, per resource.
    pub max_violation: Vec<f64>,
    pub fractional_outputs: usize,
    pub solver: SolverStats,
    pub wall_time_s: f64,
    pub group_summaries: Vec<GroupSummary>,
}

/// Per replicate group (one solver seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: usize,
    pub episodes: usize,
    pub mean_reward: f64,
    /// Episode-level standard error within the group.
    pub std_error: f64,
    pub violation_count: usize,
    pub fractional_outputs: usize,
    pub sim_calls: u64,
}

struct GroupResult {
    rewards: Vec<f64>,
    violations: usize,
    max_violation: Vec<f64>,
    fractional_outputs: usize,
    solver: SolverStats,
}

fn episode_key(seed: u64, j: usize) -> DrawKey {
    DrawKey::new(seed, "episode").with(j as u64)
}

fn context_seed(seed: u64, j: usize) -> u64 {
    DrawKey::new(seed, "context").with(j as u64).derive_seed()
}

pub fn solver_seed(seed: u64, group: usize) -> u64 {
    DrawKey::new(seed, "solver").with(group as u64).derive_seed()
}

fn replay(policy: &dyn Policy, sim: &dyn Simulator, seed: u64, j: usize) -> Result<Vec<TraceRecord>> {
    let mut ctx = EpisodeContext::new(sim.spec(), context_seed(seed, j)).with_trace();
    play_episode(policy, sim, &mut ctx, &episode_key(seed, j))?;
    Ok(ctx.trace().unwrap_or_default().to_vec())
}

/// The per-period trace of episode `j` of an [`eval_policy_mc`] run.
/// Decisions are pure functions of the solver seed and the prefix, so a
/// replay with a fresh memo reproduces the run.
pub fn trace_episode(
    sim: &dyn Simulator,
    factory: &PolicyFactory<'_>,
    seed: u64,
    j: usize,
    group_size: usize,
) -> Result<Vec<TraceRecord>> {
    let policy = factory(solver_seed(seed, j / group_size.max(1)))?;
    replay(policy.as_ref(), sim, seed, j)
}

/// Replay episode `j` with tracing for an audit report.
fn trace_of(policy: &dyn Policy, sim: &dyn Simulator, seed: u64, j: usize) -> String {
    match replay(policy, sim, seed, j) {
        Ok(trace) => trace.iter().map(|r| serde_json::to_string(r).unwrap_or_default()).collect::<Vec<_>>().join("\n"),
        Err(e) => format!("replay failed: {e}"),
    }
}

fn run_group(
    sim: &dyn Simulator,
    factory: &PolicyFactory<'_>,
    seed: u64,
    g: usize,
    range: std::ops::Range<usize>,
    audit: AuditMode,
) -> Result<GroupResult> {
    let spec = sim.spec();
    let policy = factory(solver_seed(seed, g))?;
    let mut memo = Some(MemoTable::compact());
    let mut out = GroupResult {
        rewards: Vec::with_capacity(range.len()),
        violations: 0,
        max_violation: vec![0.0; spec.m],
        fractional_outputs: 0,
        solver: SolverStats::default(),
    };
    for j in range {
        let mut ctx = EpisodeContext::with_memo(spec, context_seed(seed, j), memo.take().expect("memo"));
        let outcome = play_episode(policy.as_ref(), sim, &mut ctx, &episode_key(seed, j))?;
        let mut violated = None;
        for (i, (&u, &b)) in ctx.used().iter().zip(&spec.b).enumerate() {
            let excess = u - b;
            if excess > AUDIT_TOL {
                violated.get_or_insert((i, u, b));
            }
            out.max_violation[i] = out.max_violation[i].max(excess.max(0.0));
        }
        if let Some((i, u, b)) = violated {
            out.violations += 1;
            if audit == AuditMode::Abort {
                let trace = trace_of(policy.as_ref(), sim, seed, j);
                return Err(Error::Audit { episode: j, detail: format!("resource {i} used {u} > b = {b}\n{trace}") });
            }
        }
        out.rewards.push(outcome.reward);
        out.fractional_outputs += ctx.fractional_outputs;
        memo = Some(ctx.into_memo());
    }
    out.solver = memo.expect("memo").stats();
    Ok(out)
}

/// Monte Carlo evaluation of a policy over `n_episodes` independent
/// trajectories, with a hard per-episode budget audit.
///
/// Episodes are split into groups of `opts.group_size`; a group shares one
/// solver seed and memo table, so its episodes are conditionally independent
/// given the solver's draws. The standard error is clustered by group (it is
/// the plain i.i.d. one when `group_size = 1`). Results do not depend on the
/// thread count.
pub fn eval_policy_mc(
    sim: &dyn Simulator,
    factory: &PolicyFactory<'_>,
    n_episodes: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<EvalReport> {
    if n_episodes == 0 || opts.group_size == 0 {
        return Err(Error::Parameter("episode count and group size must be positive".into()));
    }
    let started = Instant::now();
    let gs = opts.group_size;
    let n_groups = n_episodes.div_ceil(gs);
    let results: Vec<GroupResult> = (0..n_groups)
        .into_par_iter()
        .map(|g| run_group(sim, factory, seed, g, g * gs..((g + 1) * gs).min(n_episodes), opts.audit))
        .collect::<Result<_>>()?;

    let n = n_episodes as f64;
    let mean = results.iter().flat_map(|r| &r.rewards).sum::<f64>() / n;
    let std_error = if gs == 1 {
        if n_episodes < 2 {
            0.0
        } else {
            let var = results.iter().flat_map(|r| &r.rewards).map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        }
    } else if n_groups < 2 {
        0.0
    } else {
        let ss: f64 = results
            .iter()
            .map(|r| (r.rewards.iter().sum::<f64>() - r.rewards.len() as f64 * mean).powi(2))
            .sum();
        (ss / (n * n) * n_groups as f64 / (n_groups as f64 - 1.0)).sqrt()
    };
    let group_summaries = results
        .iter()
        .enumerate()
        .map(|(g, r)| {
            let k = r.rewards.len() as f64;
            let m = r.rewards.iter().sum::<f64>() / k;
            let se = if r.rewards.len() < 2 {
                0.0
            } else {
                (r.rewards.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            };
            GroupSummary {
                group: g,
                episodes: r.rewards.len(),
                mean_reward: m,
                std_error: se,
                violation_count: r.violations,
                fractional_outputs: r.fractional_outputs,
                sim_calls: r.solver.sim_calls,
            }
        })
        .collect();
    let mut max_violation = vec![0.0; sim.spec().m];
    let mut solver = SolverStats::default();
    for r in &results {
        for (m, v) in max_violation.iter_mut().zip(&r.max_violation) {
            *m = f64::max(*m, *v);
        }
        solver.add(&r.solver);
    }
    Ok(EvalReport {
        mean_reward: mean,
        std_error,
        episodes: n_episodes,
        groups: n_groups,
        violation_count: results.iter().map(|r| r.violations).sum(),
        max_violation,
        fractional_outputs: results.iter().map(|r| r.fractional_outputs).sum(),
        solver,
        wall_time_s: started.elapsed().as_secs_f64(),
        group_summaries,
    })
}
