use std::sync::Arc;

use super::memo::{DrawSet, MemoTable};
use super::sampling::conditional_draws;
use super::{extrapolate, gradient_from_draws, projected_step, SolverConfig};
use crate::model::{Item, Prefix, Simulator};
use crate::{Error, Result};

enum Frame {
    Enter { prefix: Prefix, k: usize, top: bool },
    Finish { prefix: Prefix, k: usize, item: Item, draws: Arc<DrawSet> },
}

/// Routine `R(S, k)`: assigns `Υ(S, j) = X^j(S)` for all `j ≤ k` and returns
/// `Υ(S, k)`.
///
/// Computing `Υ(S, k)` needs `𝓢^{S,k−1}`, `Υ(S, k−1)`, and `Υ(S'^t, k−1)` for
/// every draw `S'` and `t ∈ ℵ^{k−1} ∩ ⋃_{i∈a⁺(S)} 𝒯_i(S')`. The recursion
/// runs on an explicit stack; each pending entry is visited after all of its
/// dependencies.
pub fn recursive_r(sim: &dyn Simulator, memo: &mut MemoTable, prefix: &Prefix, k: isize, config: &SolverConfig) -> Result<f64> {
    if k <= 0 {
        memo.stats.r_invocations += 1;
        return Ok(0.0);
    }
    if prefix.is_empty() || prefix.len() > sim.spec().horizon {
        return Err(Error::Support(format!("{prefix} is not a decision prefix")));
    }
    let mut stack = vec![Frame::Enter { prefix: prefix.clone(), k: k as usize, top: true }];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Enter { prefix, k, top } => {
                if memo.get(&prefix, k as isize).is_some() {
                    memo.stats.memo_hits += 1;
                    if top {
                        memo.stats.r_invocations += 1;
                    }
                    continue;
                }
                memo.stats.memo_misses += 1;
                memo.stats.r_invocations += 1;
                let draws = conditional_draws(sim, memo, &prefix, k - 1, config)?;
                let item = sim.item(&prefix)?;
                memo.stats.oracle_calls += 1;
                let mut deps = Vec::new();
                if k >= 2 {
                    deps.push(prefix.clone());
                    for d in &draws.draws {
                        for (_, p, it) in &d.sampled {
                            if it.consumption.iter().any(|&(i, _)| item.consumption_of(i) != 0.0) {
                                deps.push(p.clone());
                            }
                        }
                    }
                }
                stack.push(Frame::Finish { prefix, k, item, draws });
                // Reverse so that R(S, k−1) runs first, as in the paper.
                for p in deps.into_iter().rev() {
                    stack.push(Frame::Enter { prefix: p, k: k - 1, top: false });
                }
            }
            Frame::Finish { prefix, k, item, draws } => {
                let value = {
                    let kk = k as isize;
                    let beta = config.beta(k - 1);
                    let lookup = |p: &Prefix| -> Result<f64> {
                        match (memo.get(p, kk - 1), memo.get(p, kk - 2)) {
                            (Some(cur), Some(prev)) => Ok(extrapolate(beta, cur, prev)),
                            _ => Err(Error::Internal(format!("Υ({p}, {}) read before it was assigned", kk - 1))),
                        }
                    };
                    let y = lookup(&prefix)?;
                    let g = gradient_from_draws(&item, &draws, sim.spec(), config, lookup)?;
                    projected_step(y, config.alpha, g)
                };
                memo.write(&prefix, k, value)?;
            }
        }
    }
    memo.get(prefix, k).ok_or_else(|| Error::Internal(format!("Υ({prefix}, {k}) unassigned after R")))
}

/// The decision `K⁻¹ Σ_{j=1}^K Υ(S, j)` after running `R(S, K)`.
pub fn decide_pen(sim: &dyn Simulator, memo: &mut MemoTable, prefix: &Prefix, config: &SolverConfig) -> Result<f64> {
    recursive_r(sim, memo, prefix, config.k as isize, config)?;
    let row = &memo.row(prefix)[..config.k];
    let sum: f64 = row.iter().sum();
    Ok((sum / config.k as f64).clamp(0.0, 1.0))
}
