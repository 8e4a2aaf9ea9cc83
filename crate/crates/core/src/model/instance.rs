//! Instance parameters and the per-period readout of a realization.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack allowed when checking `a ∈ {0} ∪ [ι, 1]` and `Z ∈ [0, 1]`.
const VALUE_TOL: f64 = 1e-12;

/// Known structure constants `U`, `V`, `W` (optional common input).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "W")]
    pub w: usize,
}

/// Common input of an online packing instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    /// Horizon `T`.
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Resource count `m`.
    pub m: usize,
    /// Budgets `b_i ≥ 0`.
    pub b: Vec<f64>,
    /// Column-sparsity bound `L`.
    #[serde(rename = "L")]
    pub l: usize,
    /// Lower bound `ι` on nonzero consumption.
    pub iota: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Structure>,
}

impl InstanceSpec {
    pub fn new(horizon: usize, b: Vec<f64>, l: usize, iota: f64) -> Result<Self> {
        let spec = Self { horizon, m: b.len(), b, l, iota, structure: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = Some(structure);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Instance("horizon T must be at least 1".into()));
        }
        if self.b.len() != self.m {
            return Err(Error::Instance(format!("{} budgets given for m = {}", self.b.len(), self.m)));
        }
        if let Some(i) = self.b.iter().position(|&b| !(b >= 0.0 && b.is_finite())) {
            return Err(Error::Instance(format!("budget b_{i} = {} is not a finite non-negative number", self.b[i])));
        }
        if !(self.iota > 0.0 && self.iota <= 1.0) {
            return Err(Error::Instance(format!("iota = {} outside (0, 1]", self.iota)));
        }
        if self.l == 0 {
            return Err(Error::Instance("column-sparsity bound L must be at least 1".into()));
        }
        Ok(())
    }

    /// `ν = min_i b_i / T` (zero when there are no resources).
    pub fn nu(&self) -> f64 {
        if self.b.is_empty() {
            return 0.0;
        }
        self.b.iter().copied().fold(f64::INFINITY, f64::min) / self.horizon as f64
    }

    /// `λ = min(m, L T / min_i b_i)`.
    pub fn lambda(&self) -> f64 {
        let bmin = self.b.iter().copied().fold(f64::INFINITY, f64::min);
        if self.m == 0 {
            return 0.0;
        }
        let ratio = if bmin > 0.0 { self.l as f64 * self.horizon as f64 / bmin } else { f64::INFINITY };
        (self.m as f64).min(ratio)
    }

    /// `min(m, ⌈L/ν⌉)`, the budget-saturation bound on `V` (`m` when `ν = 0`).
    pub fn v_bound(&self) -> usize {
        let nu = self.nu();
        if nu > 0.0 {
            let ceil = (self.l as f64 / nu - 1e-9).ceil().max(1.0);
            self.m.min(ceil as usize)
        } else {
            self.m
        }
    }

    /// `V` as known input, else the budget-saturation bound (clamped to `≥ 1`).
    pub fn v(&self) -> usize {
        self.structure.map(|s| s.v).unwrap_or_else(|| self.v_bound()).max(1)
    }

    /// `U` as known input, else the trivial bound `T` (clamped to `≥ 2`).
    pub fn u(&self) -> usize {
        self.structure.map(|s| s.u).unwrap_or(self.horizon).max(2)
    }

    /// `W` as known input, else the trivial bound `L T`.
    pub fn w(&self) -> usize {
        self.structure.map(|s| s.w).unwrap_or(self.l * self.horizon)
    }

    /// Check one revealed item against the instance invariants.
    pub fn check_item(&self, item: &Item) -> Result<()> {
        if !(item.reward >= -VALUE_TOL && item.reward <= 1.0 + VALUE_TOL) {
            return Err(Error::Instance(format!("reward {} outside [0, 1]", item.reward)));
        }
        if item.consumption.len() > self.l {
            return Err(Error::Instance(format!(
                "{} resources requested, column-sparsity bound is {}",
                item.consumption.len(),
                self.l
            )));
        }
        for &(i, a) in &item.consumption {
            if i >= self.m {
                return Err(Error::Instance(format!("resource index {i} out of range (m = {})", self.m)));
            }
            if !(a >= self.iota - VALUE_TOL && a <= 1.0 + VALUE_TOL) {
                return Err(Error::Instance(format!("consumption a_{i} = {a} outside [{}, 1]", self.iota)));
            }
        }
        Ok(())
    }
}

/// What `ORACLE` reveals for one prefix `S`: the reward `Z(S)` and the sparse
/// r.c.v. `a(S)` (only nonzero entries, distinct resources).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Item {
    pub reward: f64,
    pub consumption: Vec<(usize, f64)>,
}

impl Item {
    pub fn new(reward: f64, mut consumption: Vec<(usize, f64)>) -> Self {
        consumption.retain(|&(_, a)| a != 0.0);
        consumption.sort_by_key(|&(i, _)| i);
        Self { reward, consumption }
    }

    /// A no-show period: zero reward, zero consumption.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn consumption_of(&self, i: usize) -> f64 {
        self.consumption.iter().find(|&&(j, _)| j == i).map_or(0.0, |&(_, a)| a)
    }
}

/// Rewards and r.c.v.s along a complete trajectory, with the per-resource
/// request times `𝒯_i(S)` indexed for constant-time lookup.
#[derive(Clone, Debug, Default)]
pub struct Readout {
    pub items: Vec<Item>,
    by_resource: HashMap<usize, Vec<(usize, f64)>>,
}

impl Readout {
    pub fn new(items: Vec<Item>) -> Self {
        let mut by_resource: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for (p, item) in items.iter().enumerate() {
            for &(i, a) in &item.consumption {
                by_resource.entry(i).or_default().push((p, a));
            }
        }
        Self { items, by_resource }
    }

    pub fn horizon(&self) -> usize {
        self.items.len()
    }

    /// `(p, a_i(S^{p+1}))` for every 0-based period `p` in `𝒯_i(S)`, increasing in `p`.
    pub fn requests(&self, i: usize) -> &[(usize, f64)] {
        self.by_resource.get(&i).map_or(&[], Vec::as_slice)
    }

    /// `Σ_t a_i(S^t)`.
    pub fn total_demand(&self, i: usize) -> f64 {
        self.requests(i).iter().map(|&(_, a)| a).sum()
    }

    pub fn resources(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_resource.keys().copied()
    }
}

/// The block of consecutive periods holding all edges incident to one online
/// node (online-node matching only).
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// First period of the block (0-based).
    pub start: usize,
    /// Last period of the block (0-based, inclusive).
    pub end: usize,
    /// Resource index of the online node.
    pub online: usize,
    /// Resource index of the offline endpoint of each edge, in period order.
    pub offline: Vec<usize>,
    /// `S^{t1}, ..., S^{t2}`.
    pub prefixes: Vec<super::Prefix>,
}
