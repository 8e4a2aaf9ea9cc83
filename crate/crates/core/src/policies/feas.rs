use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keyed::DrawKey;
use crate::model::{ExplicitScenarioTree, Item};
use crate::{Error, Result};

/// Counters below this are treated as exhausted.
pub const BUDGET_TOL: f64 = 1e-9;

/// Remaining budgets `b_i − Σ_{r<t} a_i(S^r) x(S^r)` of the patching process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasState {
    remaining: Vec<f64>,
}

impl FeasState {
    pub fn new(budgets: &[f64]) -> Self {
        Self { remaining: budgets.to_vec() }
    }

    pub fn remaining(&self) -> &[f64] {
        &self.remaining
    }

    /// Largest `x` the counters allow for `item`.
    pub fn cap(&self, item: &Item) -> f64 {
        item.consumption.iter().map(|&(i, a)| self.remaining[i] / a).fold(f64::INFINITY, f64::min)
    }

    /// Charge `x` units of `item` (assumed admissible).
    pub fn charge(&mut self, item: &Item, x: f64) {
        for &(i, a) in &item.consumption {
            let r = self.remaining[i] - a * x;
            self.remaining[i] = if r < BUDGET_TOL { 0.0 } else { r };
        }
    }
}

/// `FEAS`: `min(x, min_{i∈a⁺(S)} remaining_i / a_i(S))`, charging the result.
pub fn feas_step(state: &mut FeasState, item: &Item, x: f64) -> f64 {
    let y = x.min(state.cap(item)).max(0.0);
    state.charge(item, y);
    y
}

/// `FEAS(X)` on every node of an explicit tree. Node indices are breadth
/// first, so each parent's counters are final before its children are visited.
pub fn feas_patch_tree(tree: &ExplicitScenarioTree, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != tree.len() {
        return Err(Error::Contract(format!("solution has {} entries for {} nodes", x.len(), tree.len())));
    }
    let mut states: Vec<Option<FeasState>> = vec![None; tree.len()];
    let mut out = vec![0.0; tree.len()];
    for k in 0..tree.len() {
        let node = tree.node(k);
        let mut state = match node.parent {
            Some(p) => states[p].clone().ok_or_else(|| Error::Internal("child before parent".into()))?,
            None => FeasState::new(&tree.spec().b),
        };
        out[k] = feas_step(&mut state, &node.item, x[k].clamp(0.0, 1.0));
        states[k] = Some(state);
    }
    Ok(out)
}

/// `ROUND`: 1 with probability `x`, from the keyed stream.
pub fn round_bernoulli(x: f64, key: &DrawKey) -> f64 {
    let u: f64 = key.rng().random();
    if u < x {
        1.0
    } else {
        0.0
    }
}

/// `FLOOR`: 1 only for an exact 1.
pub fn floor_policy(x: f64) -> f64 {
    if x >= 1.0 {
        1.0
    } else {
        0.0
    }
}
