//! Seeded instance generators.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::DEFAULT_NODE_CAP;
use super::{ExplicitScenarioTree, FiniteProcess, InstanceSpec, Item, NodeSpec, Observation, Prefix, ProcessSimulator};
use crate::keyed::DrawKey;
use crate::{Error, Result};

/// Parameters of the network revenue management generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NrmParams {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub iota: f64,
    /// `ρ`: every budget is `ρ T`.
    pub budget_ratio: f64,
    #[serde(default = "default_products")]
    pub products: usize,
    #[serde(default = "default_regimes")]
    pub regimes: usize,
    /// Restrict consumption to `{0, 1}`.
    #[serde(default)]
    pub integral: bool,
}

fn default_products() -> usize {
    3
}

fn default_regimes() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Explicit,
    Generative,
}

#[derive(Clone, Debug, PartialEq)]
struct Product {
    fare: f64,
    consumption: Vec<(usize, f64)>,
}

/// Markov-modulated demand with history dependence.
///
/// Each period a demand regime is drawn; the regime persists with a
/// probability that grows with the share of past periods that saw an arrival
/// (busy markets stay busy). Given the regime, either nobody shows up or one
/// request for a product arrives. Observation: `[regime, product or −1]`.
#[derive(Clone, Debug)]
pub struct NrmProcess {
    spec: InstanceSpec,
    products: Vec<Product>,
    arrival: Vec<f64>,
    preference: Vec<Vec<f64>>,
    base_stay: f64,
}

impl NrmProcess {
    pub fn new(params: &NrmParams) -> Result<Self> {
        let p = params;
        if p.m == 0 || p.l == 0 || p.products == 0 || p.regimes == 0 {
            return Err(Error::Parameter("m, L, products and regimes must be positive".into()));
        }
        if !(p.budget_ratio >= 0.0 && p.budget_ratio.is_finite()) {
            return Err(Error::Parameter(format!("budget ratio {} must be finite and ≥ 0", p.budget_ratio)));
        }
        let spec = InstanceSpec::new(p.horizon, vec![p.budget_ratio * p.horizon as f64; p.m], p.l, p.iota)?;
        let mut rng = DrawKey::new(p.seed, "nrm").rng();
        let grid = consumption_grid(p.iota, p.integral);
        let products = (0..p.products)
            .map(|_| {
                let k = rng.random_range(1..=p.l.min(p.m));
                let mut res = sample(&mut rng, p.m, k).into_vec();
                res.sort_unstable();
                let consumption = res.into_iter().map(|i| (i, grid[rng.random_range(0..grid.len())])).collect();
                Product { fare: 0.25 * rng.random_range(1..=4u32) as f64, consumption }
            })
            .collect();
        let arrival = (0..p.regimes).map(|_| 0.3 + 0.6 * rng.random::<f64>()).collect();
        let preference = (0..p.regimes)
            .map(|_| {
                let w: Vec<f64> = (0..p.products).map(|_| 0.1 + rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        Ok(Self { spec, products, arrival, preference, base_stay: 0.4 + 0.3 * rng.random::<f64>() })
    }

    pub fn regimes(&self) -> usize {
        self.arrival.len()
    }
}

fn consumption_grid(iota: f64, integral: bool) -> Vec<f64> {
    if integral {
        vec![1.0]
    } else {
        let mut g = vec![iota, 0.5 * (iota + 1.0), 1.0];
        g.dedup();
        g
    }
}

impl FiniteProcess for NrmProcess {
    fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    fn dim(&self) -> usize {
        2
    }

    fn outcomes(&self, prefix: &Prefix) -> Result<Vec<(f64, Observation)>> {
        let t = prefix.len();
        if t >= self.spec.horizon {
            return Ok(Vec::new());
        }
        let r = self.regimes();
        let regime_law: Vec<f64> = match prefix.last() {
            None => vec![1.0 / r as f64; r],
            Some(obs) => {
                let busy = prefix.observations().filter(|o| o[1] >= 0.0).count() as f64 / t as f64;
                let stay = (self.base_stay + 0.25 * busy).min(0.95);
                let cur = obs[0] as usize;
                (0..r)
                    .map(|j| match (r, j == cur) {
                        (1, _) => 1.0,
                        (_, true) => stay,
                        _ => (1.0 - stay) / (r - 1) as f64,
                    })
                    .collect()
            }
        };
        let mut out = Vec::new();
        for (j, &pj) in regime_law.iter().enumerate() {
            let arr = self.arrival[j];
            out.push((pj * (1.0 - arr), vec![j as f64, -1.0]));
            for (q, &pref) in self.preference[j].iter().enumerate() {
                out.push((pj * arr * pref, vec![j as f64, q as f64]));
            }
        }
        out.retain(|(p, _)| *p > 0.0);
        Ok(out)
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        let obs = prefix.last().ok_or_else(|| Error::Support("empty prefix has no item".into()))?;
        if obs[1] < 0.0 {
            return Ok(Item::none());
        }
        let product = self
            .products
            .get(obs[1] as usize)
            .ok_or_else(|| Error::Support(format!("unknown product {}", obs[1])))?;
        Ok(Item::new(product.fare, product.consumption.clone()))
    }
}

/// A generated NRM instance in either representation.
#[derive(Clone, Debug)]
pub enum NrmInstance {
    Explicit(ExplicitScenarioTree),
    Generative(ProcessSimulator<NrmProcess>),
}

/// Generate an NRM instance. Explicit mode enumerates the tree and fails
/// when it would exceed `node_cap` (default `10^5`).
pub fn generate_nrm(params: &NrmParams, mode: GenMode, node_cap: Option<usize>) -> Result<NrmInstance> {
    let process = NrmProcess::new(params)?;
    Ok(match mode {
        GenMode::Explicit => {
            NrmInstance::Explicit(ExplicitScenarioTree::enumerate(&process, node_cap.unwrap_or(DEFAULT_NODE_CAP))?)
        }
        GenMode::Generative => NrmInstance::Generative(ProcessSimulator::new(process)),
    })
}

/// Parameters of the random explicit-tree generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomTreeParams {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub iota: f64,
    /// Every budget is `ρ T`.
    pub budget_ratio: f64,
    /// Maximum number of children per node.
    pub branching: usize,
    /// Stop branching once the tree holds this many nodes.
    pub max_nodes: usize,
    /// Probability that a node requests any resource.
    pub consume_prob: f64,
    /// Restrict consumption to `{0, 1}`.
    pub integral: bool,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: 4,
            m: 2,
            l: 2,
            iota: 0.5,
            budget_ratio: 0.5,
            branching: 2,
            max_nodes: 50,
            consume_prob: 0.7,
            integral: false,
        }
    }
}

/// A random explicit tree: random branching, probabilities, rewards on a
/// 0.05 grid and r.c.v.s satisfying the instance assumptions.
pub fn random_tree(params: &RandomTreeParams) -> Result<ExplicitScenarioTree> {
    let p = params;
    if p.branching == 0 || p.max_nodes < p.horizon {
        return Err(Error::Parameter("need branching ≥ 1 and max_nodes ≥ T".into()));
    }
    let spec = InstanceSpec::new(p.horizon, vec![p.budget_ratio * p.horizon as f64; p.m], p.l, p.iota)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DrawKey::new(p.seed, "random-tree").derive_seed());
    let grid = consumption_grid(p.iota, p.integral);
    let mut specs: Vec<NodeSpec> = Vec::new();
    // Breadth-first growth; the number of pending nodes bounds the final size
    // from below by one chain per open node.
    let mut frontier: Vec<(Option<usize>, f64, usize)> = vec![(None, 1.0, 0)];
    while let Some((parent, mass, depth)) = frontier.pop() {
        if depth == p.horizon {
            continue;
        }
        let reserve: usize = frontier.iter().map(|&(_, _, d)| p.horizon - d).sum();
        let room = p.max_nodes.saturating_sub(specs.len() + reserve);
        let max_kids = p.branching.min((room / (p.horizon - depth)).max(1));
        let kids = rng.random_range(1..=max_kids);
        let w: Vec<f64> = (0..kids).map(|_| 0.2 + rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        for wk in w {
            let reward = (rng.random::<f64>() * 20.0).round() / 20.0;
            let consumption = if p.m > 0 && rng.random::<f64>() < p.consume_prob {
                let k = rng.random_range(1..=p.l.min(p.m));
                sample(&mut rng, p.m, k).into_iter().map(|i| (i, grid[rng.random_range(0..grid.len())])).collect()
            } else {
                Vec::new()
            };
            let id = specs.len();
            specs.push(NodeSpec { parent, prob: mass * wk / s, item: Item::new(reward, consumption) });
            frontier.push((Some(id), mass * wk / s, depth + 1));
        }
    }
    ExplicitScenarioTree::new(spec, specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Simulator;

    fn params(seed: u64) -> NrmParams {
        NrmParams { seed, horizon: 3, m: 2, l: 2, iota: 0.4, budget_ratio: 0.5, products: 3, regimes: 2, integral: false }
    }

    #[test]
    fn nrm_is_reproducible() {
        let a = match generate_nrm(&params(5), GenMode::Explicit, None).unwrap() {
            NrmInstance::Explicit(t) => t.to_records(),
            _ => unreachable!(),
        };
        let b = match generate_nrm(&params(5), GenMode::Explicit, None).unwrap() {
            NrmInstance::Explicit(t) => t.to_records(),
            _ => unreachable!(),
        };
        assert_eq!(a, b);
    }

    #[test]
    fn nrm_budgets_follow_ratio() {
        let p = NrmProcess::new(&params(1)).unwrap();
        assert!(p.spec().b.iter().all(|&b| b == 1.5));
        assert_eq!(p.spec().nu(), 0.5);
    }

    #[test]
    fn nrm_cap_is_enforced() {
        let mut p = params(2);
        p.horizon = 12;
        assert!(matches!(generate_nrm(&p, GenMode::Explicit, Some(1000)), Err(Error::Cap { .. })));
    }

    #[test]
    fn nrm_samples_respect_assumptions() {
        let mut p = params(3);
        p.horizon = 20;
        p.m = 4;
        p.products = 5;
        let sim = ProcessSimulator::new(NrmProcess::new(&p).unwrap());
        let empty = Prefix::empty(2);
        let mut periods = 0;
        for j in 0..500 {
            let traj = sim.complete(&empty, &DrawKey::new(9, "t").with(j)).unwrap();
            for item in sim.readout(&traj).unwrap().items {
                assert!((0.0..=1.0).contains(&item.reward));
                assert!(item.consumption.len() <= p.l);
                assert!(item.consumption.iter().all(|&(_, a)| (p.iota..=1.0).contains(&a)));
                periods += 1;
            }
        }
        assert_eq!(periods, 10_000);
    }

    #[test]
    fn random_tree_respects_size() {
        for seed in 0..20 {
            let t = random_tree(&RandomTreeParams { seed, horizon: 5, max_nodes: 40, branching: 3, ..Default::default() }).unwrap();
            assert!(t.len() <= 40, "{} nodes", t.len());
            assert!((t.total_mass() - 5.0).abs() < 1e-9);
        }
    }
}
