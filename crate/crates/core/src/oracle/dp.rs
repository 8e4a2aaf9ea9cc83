use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::ExplicitScenarioTree;
use crate::{Error, Result};

/// Default bound on `(node, consumed budget)` states.
pub const DP_STATE_CAP: usize = 1_000_000;

/// Finest budget grid tried: `1/MAX_DENOMINATOR`.
const MAX_DENOMINATOR: u32 = 1000;

/// Optimal integral packing policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackSolution {
    /// `OPT_pack` (a lower bound when `approximate`).
    pub value: f64,
    /// Decision per tree node.
    pub decisions: Vec<f64>,
    /// Consumption was rounded up onto the grid, so the policy is feasible
    /// but possibly suboptimal.
    pub approximate: bool,
    pub grid: f64,
    pub states: usize,
}

/// Coarsest grid `1/d` on which every consumption value lies.
fn choose_grid(tree: &ExplicitScenarioTree) -> (u32, bool) {
    let on_grid = |d: u32| {
        tree.nodes().iter().all(|n| {
            n.item.consumption.iter().all(|&(_, a)| {
                let s = a * d as f64;
                (s - s.round()).abs() <= 1e-9 * s.max(1.0)
            })
        })
    };
    match (1..=MAX_DENOMINATOR).find(|&d| on_grid(d)) {
        Some(d) => (d, false),
        None => (MAX_DENOMINATOR, true),
    }
}

struct Dp<'a> {
    tree: &'a ExplicitScenarioTree,
    units: Vec<Vec<(usize, u64)>>,
    budget: Vec<u64>,
    memo: HashMap<(usize, Vec<u64>), f64>,
    cap: usize,
}

impl Dp<'_> {
    fn fits(&self, k: usize, used: &[u64]) -> bool {
        self.units[k].iter().all(|&(i, a)| used[i] + a <= self.budget[i])
    }

    fn children_value(&mut self, k: usize, used: &[u64]) -> Result<f64> {
        let mut total = 0.0;
        for c in self.tree.node(k).children.clone() {
            total += self.value(c, used)?;
        }
        Ok(total)
    }

    /// `(value, take)` at node `k` with consumption `used` before it.
    fn choice(&mut self, k: usize, used: &[u64]) -> Result<(f64, bool)> {
        let skip = self.children_value(k, used)?;
        let node = self.tree.node(k);
        let gain = node.prob * node.item.reward;
        if !self.fits(k, used) || gain <= 0.0 && !self.units[k].is_empty() {
            return Ok((skip, false));
        }
        let mut next = used.to_vec();
        for &(i, a) in &self.units[k] {
            next[i] += a;
        }
        let take = gain + self.children_value(k, &next)?;
        Ok(if take > skip { (take, true) } else { (skip, false) })
    }

    fn value(&mut self, k: usize, used: &[u64]) -> Result<f64> {
        let key = (k, used.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.memo.len() >= self.cap {
            return Err(Error::Cap { what: "packing DP states", size: self.memo.len() + 1, cap: self.cap });
        }
        let (v, _) = self.choice(k, used)?;
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// `OPT_pack` by backward induction over (node, consumed budget on a grid).
pub fn solve_pack_dp(tree: &ExplicitScenarioTree) -> Result<PackSolution> {
    solve_pack_dp_capped(tree, DP_STATE_CAP)
}

pub fn solve_pack_dp_capped(tree: &ExplicitScenarioTree, cap: usize) -> Result<PackSolution> {
    let (d, approximate) = choose_grid(tree);
    let df = d as f64;
    let units = tree
        .nodes()
        .iter()
        .map(|n| n.item.consumption.iter().map(|&(i, a)| (i, (a * df - 1e-9).ceil().max(0.0) as u64)).collect())
        .collect();
    let budget = tree.spec().b.iter().map(|&b| (b * df + 1e-9).floor().max(0.0) as u64).collect();
    let mut dp = Dp { tree, units, budget, memo: HashMap::new(), cap };

    let zero = vec![0u64; tree.spec().m];
    let mut value = 0.0;
    for &r in tree.roots() {
        value += dp.value(r, &zero)?;
    }

    // Replay the optimal choices; each node lies on exactly one path.
    let mut decisions = vec![0.0; tree.len()];
    let mut stack: Vec<(usize, Vec<u64>)> = tree.roots().iter().map(|&r| (r, zero.clone())).collect();
    while let Some((k, mut used)) = stack.pop() {
        let (_, take) = dp.choice(k, &used)?;
        if take {
            decisions[k] = 1.0;
            for &(i, a) in &dp.units[k] {
                used[i] += a;
            }
        }
        for &c in &tree.node(k).children {
            stack.push((c, used.clone()));
        }
    }
    Ok(PackSolution { value, decisions, approximate, grid: 1.0 / df, states: dp.memo.len() })
}
