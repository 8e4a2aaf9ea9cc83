//! Fully enumerated finite-support processes.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::simulator::pick;
use super::{FiniteProcess, InstanceSpec, Item, Prefix, Simulator, Trajectory};
use crate::keyed::DrawKey;
use crate::{Error, Result};

/// Largest tree [`ExplicitScenarioTree::enumerate`] will build by default.
pub const DEFAULT_NODE_CAP: usize = 100_000;

const PROB_TOL: f64 = 1e-9;

/// One prefix `S ∈ 𝓔` of an explicit tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Prefix length `t` (1-based).
    pub depth: usize,
    /// `μ(S)`, the unconditional probability of the prefix.
    pub prob: f64,
    pub item: Item,
    pub children: Vec<usize>,
}

/// Input record for building a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub parent: Option<usize>,
    pub prob: f64,
    pub item: Item,
}

/// Serialized node: `{prefix_id, parent_id, prob, Z, a: [[i, value], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub prefix_id: u64,
    #[serde(default)]
    pub parent_id: Option<u64>,
    pub prob: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(default)]
    pub a: Vec<(usize, f64)>,
}

/// A finite process with every prefix, its probability `μ(S)`, reward `Z(S)`
/// and r.c.v. `a(S)` listed explicitly.
///
/// Observations are node indices (`D = 1`): the prefix of node `n` is the
/// sequence of node indices on the path from its root-level ancestor to `n`.
/// Zero-probability nodes are pruned at construction and never sampled.
#[derive(Clone, Debug)]
pub struct ExplicitScenarioTree {
    spec: InstanceSpec,
    nodes: Vec<TreeNode>,
    roots: Vec<usize>,
    leaves: Vec<usize>,
}

/// Exact structure constants of an explicit tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    /// `max |𝒯_i(S)|`, clamped to `≥ 2`.
    #[serde(rename = "U")]
    pub u: usize,
    /// `max |{i : Σ_t a_i(S^t) ≥ b_i}|`, clamped to `≥ 1`.
    #[serde(rename = "V")]
    pub v: usize,
    /// `max_{S, S' ⊆ S} Σ_t |a⁺(S^t) ∩ a⁺(S')|`.
    #[serde(rename = "W")]
    pub w: usize,
    /// Largest `|a⁺(S)|` observed (at most the declared `L`).
    #[serde(rename = "L")]
    pub l: usize,
    /// Smallest nonzero consumption observed (1 when nothing is consumed).
    pub iota: f64,
    pub nu: f64,
    pub lambda: f64,
    /// `min(m, ⌈L/ν⌉)` with the declared `L` (`m` when `ν = 0`).
    pub v_bound: usize,
    /// Unclamped `U` and `V`.
    pub u_raw: usize,
    pub v_raw: usize,
}

impl ExplicitScenarioTree {
    /// Build and validate a tree. Nodes may be listed in any order; indices in
    /// the returned tree follow a breadth-first order of the surviving nodes.
    pub fn new(spec: InstanceSpec, specs: Vec<NodeSpec>) -> Result<Self> {
        spec.validate()?;
        if specs.is_empty() {
            return Err(Error::Instance("empty tree".into()));
        }
        let n = specs.len();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (j, s) in specs.iter().enumerate() {
            match s.parent {
                None => roots.push(j),
                Some(p) if p < n && p != j => children[p].push(j),
                Some(p) => return Err(Error::Instance(format!("node {j} has invalid parent {p}"))),
            }
            if !(s.prob >= 0.0 && s.prob <= 1.0 + PROB_TOL) {
                return Err(Error::Instance(format!("node {j} probability {} outside [0, 1]", s.prob)));
            }
        }

        // Breadth-first over positive-probability nodes; anything unreachable
        // from a root (a cycle) is an error.
        let mut order = Vec::with_capacity(n);
        let mut new_index = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &r in &roots {
            depth[r] = 1;
            queue.push_back(r);
        }
        let mut seen = 0;
        while let Some(j) = queue.pop_front() {
            seen += 1;
            if specs[j].prob > 0.0 {
                new_index[j] = order.len();
                order.push(j);
            }
            for &c in &children[j] {
                depth[c] = depth[j] + 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            return Err(Error::Instance("tree contains a cycle".into()));
        }

        let mut nodes: Vec<TreeNode> = order
            .iter()
            .map(|&j| TreeNode {
                parent: specs[j].parent.map(|p| new_index[p]),
                depth: depth[j],
                prob: specs[j].prob,
                item: Item::new(specs[j].item.reward, specs[j].item.consumption.clone()),
                children: Vec::new(),
            })
            .collect();
        for k in 0..nodes.len() {
            if let Some(p) = nodes[k].parent {
                if p == usize::MAX {
                    return Err(Error::Internal("surviving node with pruned parent".into()));
                }
                nodes[p].children.push(k);
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].parent.is_none()).collect();
        let leaves: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].children.is_empty()).collect();
        let tree = Self { spec, nodes, roots, leaves };
        tree.validate()?;
        Ok(tree)
    }

    /// Build from serialized node records (file format).
    pub fn from_records(spec: InstanceSpec, records: &[NodeRecord]) -> Result<Self> {
        let mut index = std::collections::HashMap::new();
        for (j, r) in records.iter().enumerate() {
            if index.insert(r.prefix_id, j).is_some() {
                return Err(Error::Instance(format!("duplicate prefix_id {}", r.prefix_id)));
            }
        }
        let specs = records
            .iter()
            .map(|r| {
                let parent = match r.parent_id {
                    None => None,
                    Some(pid) => Some(*index.get(&pid).ok_or_else(|| Error::Instance(format!("unknown parent_id {pid}")))?),
                };
                Ok(NodeSpec { parent, prob: r.prob, item: Item::new(r.z, r.a.clone()) })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spec, specs)
    }

    /// Serialize to node records (`prefix_id` = node index).
    pub fn to_records(&self) -> Vec<NodeRecord> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, n)| NodeRecord {
                prefix_id: k as u64,
                parent_id: n.parent.map(|p| p as u64),
                prob: n.prob,
                z: n.item.reward,
                a: n.item.consumption.clone(),
            })
            .collect()
    }

    /// Enumerate a finite process into an explicit tree.
    pub fn enumerate<P: FiniteProcess + ?Sized>(process: &P, cap: usize) -> Result<Self> {
        let spec = process.spec().clone();
        let mut specs: Vec<NodeSpec> = Vec::new();
        let mut queue: VecDeque<(Option<usize>, Prefix, f64)> = VecDeque::new();
        queue.push_back((None, Prefix::empty(process.dim()), 1.0));
        while let Some((parent, prefix, prob)) = queue.pop_front() {
            if prefix.len() == spec.horizon {
                continue;
            }
            for (p, obs) in process.outcomes(&prefix)? {
                if p <= 0.0 {
                    continue;
                }
                let child = prefix.extend(&obs);
                let item = process.item(&child)?;
                spec.check_item(&item)?;
                let id = specs.len();
                if id >= cap {
                    return Err(Error::Cap { what: "explicit tree nodes", size: id + 1, cap });
                }
                specs.push(NodeSpec { parent, prob: prob * p, item });
                queue.push_back((Some(id), child, prob * p));
            }
        }
        Self::new(spec, specs)
    }

    fn validate(&self) -> Result<()> {
        let horizon = self.spec.horizon;
        if self.nodes.is_empty() {
            return Err(Error::Instance("tree has no positive-probability node".into()));
        }
        let root_mass: f64 = self.roots.iter().map(|&r| self.nodes[r].prob).sum();
        if (root_mass - 1.0).abs() > PROB_TOL {
            return Err(Error::Instance(format!("root-level probabilities sum to {root_mass}, not 1")));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            self.spec.check_item(&node.item).map_err(|e| Error::Instance(format!("node {k}: {e}")))?;
            if node.depth > horizon {
                return Err(Error::Instance(format!("node {k} at depth {} beyond horizon {horizon}", node.depth)));
            }
            if node.children.is_empty() {
                if node.depth != horizon {
                    return Err(Error::Instance(format!("leaf {k} at depth {} before horizon {horizon}", node.depth)));
                }
            } else {
                let mass: f64 = node.children.iter().map(|&c| self.nodes[c].prob).sum();
                if (mass - node.prob).abs() > PROB_TOL * node.prob.max(1.0) {
                    return Err(Error::Instance(format!(
                        "children of node {k} carry mass {mass}, node has {}",
                        node.prob
                    )));
                }
            }
        }
        let total = self.total_mass();
        if (total - horizon as f64).abs() > PROB_TOL * horizon as f64 {
            return Err(Error::Instance(format!("Σ μ(S) = {total}, expected T = {horizon}")));
        }
        Ok(())
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn set_structure(&mut self, structure: super::Structure) {
        self.spec.structure = Some(structure);
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, k: usize) -> &TreeNode {
        &self.nodes[k]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Complete trajectories `𝓢`, as leaf node indices.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// `Σ_{S ∈ 𝓔} μ(S)`; equals `T` on a valid tree.
    pub fn total_mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.prob).sum()
    }

    /// Node indices from the root-level ancestor down to `k`.
    pub fn path(&self, k: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.nodes[k].depth);
        let mut cur = Some(k);
        while let Some(j) = cur {
            path.push(j);
            cur = self.nodes[j].parent;
        }
        path.reverse();
        path
    }

    pub fn prefix_of(&self, k: usize) -> Prefix {
        Prefix::from_flat(1, self.path(k).into_iter().map(|j| j as f64).collect())
    }

    /// The node a prefix addresses, checking that it is a path of the tree.
    pub fn node_of(&self, prefix: &Prefix) -> Result<usize> {
        if prefix.dim() != 1 || prefix.is_empty() {
            return Err(Error::Support(format!("{prefix} is not a tree prefix")));
        }
        let vals = prefix.values();
        let mut parent: Option<usize> = None;
        for &v in vals {
            let k = v as usize;
            if v < 0.0 || v.fract() != 0.0 || k >= self.nodes.len() || self.nodes[k].parent != parent {
                return Err(Error::Support(format!("{prefix}")));
            }
            parent = Some(k);
        }
        Ok(parent.expect("non-empty prefix"))
    }

    /// Walk down from `start` (or the root level) to a leaf with `rng`.
    pub fn sample_leaf<R: Rng + ?Sized>(&self, start: Option<usize>, rng: &mut R) -> usize {
        let mut cur = match start {
            Some(k) => k,
            None => self.roots[pick(self.roots.iter().map(|&r| self.nodes[r].prob), rng.random::<f64>())],
        };
        while !self.nodes[cur].children.is_empty() {
            let mass = self.nodes[cur].prob;
            let ch = &self.nodes[cur].children;
            cur = ch[pick(ch.iter().map(|&c| self.nodes[c].prob / mass), rng.random::<f64>())];
        }
        cur
    }

    /// Exact `U, V, W, L, ι, ν, λ` by scanning every trajectory.
    pub fn structure_constants(&self) -> StructureConstants {
        let spec = &self.spec;
        let mut u_raw = 0;
        let mut v_raw = 0;
        let mut w = 0;
        let mut l = 0;
        let mut iota = f64::INFINITY;
        for node in &self.nodes {
            l = l.max(node.item.consumption.len());
            for &(_, a) in &node.item.consumption {
                iota = iota.min(a);
            }
        }
        let mut count = vec![0usize; spec.m];
        let mut total = vec![0f64; spec.m];
        for &leaf in &self.leaves {
            let path = self.path(leaf);
            count.iter_mut().for_each(|c| *c = 0);
            total.iter_mut().for_each(|x| *x = 0.0);
            for &k in &path {
                for &(i, a) in &self.nodes[k].item.consumption {
                    count[i] += 1;
                    total[i] += a;
                }
            }
            u_raw = u_raw.max(count.iter().copied().max().unwrap_or(0));
            let saturated = (0..spec.m).filter(|&i| total[i] >= spec.b[i]).count();
            v_raw = v_raw.max(saturated);
            for &k in &path {
                let overlap: usize = self.nodes[k].item.consumption.iter().map(|&(i, _)| count[i]).sum();
                w = w.max(overlap);
            }
        }
        StructureConstants {
            u: u_raw.max(2),
            v: v_raw.max(1),
            w,
            l,
            iota: if iota.is_finite() { iota } else { 1.0 },
            nu: spec.nu(),
            lambda: spec.lambda(),
            v_bound: spec.v_bound(),
            u_raw,
            v_raw,
        }
    }
}

/// Alias of [`ExplicitScenarioTree::structure_constants`].
pub fn derive_structure_constants(tree: &ExplicitScenarioTree) -> StructureConstants {
    tree.structure_constants()
}

impl Simulator for ExplicitScenarioTree {
    fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    fn dim(&self) -> usize {
        1
    }

    fn complete(&self, prefix: &Prefix, key: &DrawKey) -> Result<Trajectory> {
        let mut rng = key.rng();
        let leaf = if prefix.is_empty() {
            self.sample_leaf(None, &mut rng)
        } else {
            let k = self.node_of(prefix)?;
            self.sample_leaf(Some(k), &mut rng)
        };
        Trajectory::new(self.prefix_of(leaf), self.spec.horizon)
            .ok_or_else(|| Error::Internal("leaf above horizon".into()))
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        Ok(self.nodes[self.node_of(prefix)?].item.clone())
    }
}

/// The tree itself is a simulator; this wraps it in a shareable handle.
pub fn tree_as_simulator(tree: ExplicitScenarioTree) -> std::sync::Arc<dyn Simulator> {
    std::sync::Arc::new(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_completion;

    /// `T = 2, m = 1, b = 1, a ≡ 1`: `Z = 0.5` at `t = 1`, then `Z ∈ {1, 0.2}` w.p. ½.
    fn two_period() -> ExplicitScenarioTree {
        let spec = InstanceSpec::new(2, vec![1.0], 1, 1.0).unwrap();
        let a = || vec![(0, 1.0)];
        ExplicitScenarioTree::new(
            spec,
            vec![
                NodeSpec { parent: None, prob: 1.0, item: Item::new(0.5, a()) },
                NodeSpec { parent: Some(0), prob: 0.5, item: Item::new(1.0, a()) },
                NodeSpec { parent: Some(0), prob: 0.5, item: Item::new(0.2, a()) },
            ],
        )
        .unwrap()
    }

    #[test]
    fn structure_of_two_period_tree() {
        let c = two_period().structure_constants();
        assert_eq!((c.u, c.v, c.w, c.l), (2, 1, 2, 1));
        assert_eq!(c.nu, 0.5);
        assert_eq!(c.v_bound, 1);
    }

    #[test]
    fn structure_clamps_without_consumption() {
        let spec = InstanceSpec::new(2, vec![1.0], 1, 1.0).unwrap();
        let t = ExplicitScenarioTree::new(
            spec,
            vec![
                NodeSpec { parent: None, prob: 1.0, item: Item::none() },
                NodeSpec { parent: Some(0), prob: 1.0, item: Item::new(0.3, vec![]) },
            ],
        )
        .unwrap();
        let c = t.structure_constants();
        assert_eq!((c.u, c.v, c.w, c.u_raw, c.v_raw), (2, 1, 0, 0, 0));
    }

    #[test]
    fn mass_sums_to_horizon() {
        assert!((two_period().total_mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_inconsistent_probabilities() {
        let spec = InstanceSpec::new(2, vec![1.0], 1, 1.0).unwrap();
        let bad = ExplicitScenarioTree::new(
            spec.clone(),
            vec![
                NodeSpec { parent: None, prob: 1.0, item: Item::none() },
                NodeSpec { parent: Some(0), prob: 0.4, item: Item::none() },
            ],
        );
        assert!(bad.is_err());
        let short = ExplicitScenarioTree::new(spec, vec![NodeSpec { parent: None, prob: 1.0, item: Item::none() }]);
        assert!(short.is_err());
    }

    #[test]
    fn one_node_tree_completes_to_itself() {
        let spec = InstanceSpec::new(1, vec![1.0], 1, 1.0).unwrap();
        let t = ExplicitScenarioTree::new(spec, vec![NodeSpec { parent: None, prob: 1.0, item: Item::new(0.5, vec![(0, 1.0)]) }])
            .unwrap();
        let sim = tree_as_simulator(t);
        let traj = simulate_completion(sim.as_ref(), &Prefix::empty(1), &DrawKey::new(0, "x")).unwrap();
        assert_eq!(traj.as_prefix().values(), &[0.0]);
        // A full-length prefix comes back unchanged.
        let again = simulate_completion(sim.as_ref(), traj.as_prefix(), &DrawKey::new(1, "x")).unwrap();
        assert_eq!(again.as_prefix(), traj.as_prefix());
    }

    #[test]
    fn branch_frequencies_match_probabilities() {
        let t = two_period();
        let root = t.prefix_of(0);
        let n = 10_000;
        let up = (0..n)
            .filter(|&j| {
                let traj = simulate_completion(&t, &root, &DrawKey::new(3, "freq").with(j)).unwrap();
                t.node_of(traj.as_prefix()).unwrap() == 1
            })
            .count() as f64
            / n as f64;
        // 3σ = 3·√(0.25/n) = 0.015.
        assert!((up - 0.5).abs() <= 0.015, "up fraction {up}");
    }

    #[test]
    fn zero_probability_branch_is_never_sampled() {
        let spec = InstanceSpec::new(2, vec![1.0], 1, 1.0).unwrap();
        let t = ExplicitScenarioTree::new(
            spec,
            vec![
                NodeSpec { parent: None, prob: 1.0, item: Item::none() },
                NodeSpec { parent: Some(0), prob: 0.0, item: Item::new(1.0, vec![]) },
                NodeSpec { parent: Some(0), prob: 1.0, item: Item::new(0.1, vec![]) },
            ],
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        let empty = Prefix::empty(1);
        for j in 0..100_000u64 {
            let traj = t.complete(&empty, &DrawKey::new(1, "z").with(j)).unwrap();
            assert_eq!(t.item(traj.as_prefix()).unwrap().reward, 0.1);
        }
    }

    #[test]
    fn records_round_trip() {
        let t = two_period();
        let back = ExplicitScenarioTree::from_records(t.spec().clone(), &t.to_records()).unwrap();
        assert_eq!(back.to_records(), t.to_records());
    }

    #[test]
    fn foreign_prefix_is_a_support_error() {
        let t = two_period();
        let p = Prefix::from_flat(1, vec![1.0]);
        assert!(matches!(t.complete(&p, &DrawKey::new(0, "x")), Err(Error::Support(_))));
    }
}
