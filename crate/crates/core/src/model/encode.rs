//! Independent set, matching and online-node matching as packing processes.
//!
//! - Independent set: node `t` arrives at period `t`; one resource per
//!   potential edge slot (`m = ⌊Δn/2⌋`), `b_i = 1`. A candidate edge is
//!   realized or not when its first endpoint arrives, so `Σ_t a_i(S^t) ∈ {0, 2}`.
//! - Matching: potential edge `t` arrives at period `t` (`T = ⌊Δn/2⌋`); one
//!   resource per node, `b_i = 1`. Once an edge is unrealized all later ones are.
//! - Online-node matching: matching where each online node's edges arrive in one
//!   consecutive block whose full content is revealed at its first period.

use serde::{Deserialize, Serialize};

use super::{Block, ExplicitScenarioTree, FiniteProcess, InstanceSpec, Item, Observation, Prefix, ProcessSimulator};
use crate::{Error, Result};

/// Partite of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Markov weight levels: the next level repeats the previous one with
/// probability `persistence`, otherwise it is uniform over all levels.
fn level_law(levels: usize, persistence: f64, prev: Option<usize>) -> Vec<f64> {
    let base = (1.0 - persistence) / levels as f64;
    (0..levels)
        .map(|j| match prev {
            Some(p) if p == j => base + persistence,
            Some(_) => base,
            None => 1.0 / levels as f64,
        })
        .collect()
}

/// A bipartite node-arrival process for online independent set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsGraph {
    /// Partite of node `t` (arrival order), `n = sides.len()`.
    pub sides: Vec<Side>,
    /// Degree bound `Δ`.
    pub delta: usize,
    /// Candidate edges `(u, v)`; the index is the edge's resource slot.
    pub edges: Vec<(usize, usize)>,
    /// Base realization probability of a candidate edge.
    pub edge_prob: f64,
    /// Shift of the realization probability per unit of (realized fraction
    /// so far − ½): positive values make realizations clump.
    #[serde(default)]
    pub correlation: f64,
    /// Node weight levels in `[0, 1]`.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub persistence: f64,
}

/// Independent set as a [`FiniteProcess`].
///
/// Observation of node `t`: `[weight level, flag_1, …, flag_Δ]`, where the
/// flags give the realization of the candidate edges whose first endpoint is
/// `t`, in slot order.
#[derive(Clone, Debug)]
pub struct IsProcess {
    graph: IsGraph,
    spec: InstanceSpec,
    /// Slots whose first endpoint is node `t`.
    opened_by: Vec<Vec<usize>>,
    /// Slots incident to node `t`.
    incident: Vec<Vec<usize>>,
}

impl IsProcess {
    pub fn new(graph: IsGraph) -> Result<Self> {
        let n = graph.sides.len();
        if n == 0 || graph.delta == 0 {
            return Err(Error::Instance("independent set needs n ≥ 1 and Δ ≥ 1".into()));
        }
        if graph.weights.is_empty() || graph.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Instance("weights must be a non-empty list in [0, 1]".into()));
        }
        let m = graph.delta * n / 2;
        if graph.edges.len() > m {
            return Err(Error::Instance(format!("{} candidate edges exceed ⌊Δn/2⌋ = {m}", graph.edges.len())));
        }
        let mut opened_by = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        for (slot, &(u, v)) in graph.edges.iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(Error::Instance(format!("edge {slot} = ({u}, {v}) is not a pair of distinct nodes")));
            }
            if graph.sides[u] == graph.sides[v] {
                return Err(Error::Instance(format!("edge {slot} = ({u}, {v}) joins nodes of the same partite")));
            }
            opened_by[u.min(v)].push(slot);
            incident[u].push(slot);
            incident[v].push(slot);
        }
        if let Some(t) = (0..n).find(|&t| incident[t].len() > graph.delta) {
            return Err(Error::Instance(format!("node {t} has degree {} > Δ = {}", incident[t].len(), graph.delta)));
        }
        let spec = InstanceSpec::new(n, vec![1.0; m], graph.delta, 1.0)?;
        Ok(Self { graph, spec, opened_by, incident })
    }

    pub fn graph(&self) -> &IsGraph {
        &self.graph
    }

    /// Partite of the node revealed at `prefix` (node `t = |prefix|`).
    pub fn partite_of(&self, prefix: &Prefix) -> Result<Side> {
        prefix
            .len()
            .checked_sub(1)
            .and_then(|t| self.graph.sides.get(t).copied())
            .ok_or_else(|| Error::Contract(format!("no node at period {}", prefix.len())))
    }

    fn realized(&self, prefix: &Prefix, slot: usize) -> Option<bool> {
        let (u, v) = self.graph.edges[slot];
        let first = u.min(v);
        if first >= prefix.len() {
            return None;
        }
        let j = self.opened_by[first].iter().position(|&s| s == slot)?;
        Some(prefix.observation(first)[1 + j] == 1.0)
    }
}

impl FiniteProcess for IsProcess {
    fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    fn dim(&self) -> usize {
        1 + self.graph.delta
    }

    fn outcomes(&self, prefix: &Prefix) -> Result<Vec<(f64, Observation)>> {
        let t = prefix.len();
        if t >= self.spec.horizon {
            return Ok(Vec::new());
        }
        let levels = self.graph.weights.len();
        let prev = prefix.last().map(|o| o[0] as usize);
        let level_p = level_law(levels, self.graph.persistence, prev);

        // Realized fraction among edges decided so far drives the next realizations.
        let (mut decided, mut hits) = (0usize, 0usize);
        for s in 0..t {
            for j in 0..self.opened_by[s].len() {
                decided += 1;
                hits += (prefix.observation(s)[1 + j] == 1.0) as usize;
            }
        }
        let frac = if decided > 0 { hits as f64 / decided as f64 } else { 0.5 };
        let p = clamp01(self.graph.edge_prob + self.graph.correlation * (frac - 0.5));
        let k = self.opened_by[t].len();

        let mut out = Vec::new();
        for (lvl, &pl) in level_p.iter().enumerate() {
            for mask in 0..(1usize << k) {
                let mut prob = pl;
                let mut obs = vec![0.0; self.dim()];
                obs[0] = lvl as f64;
                for j in 0..k {
                    let on = mask >> j & 1 == 1;
                    prob *= if on { p } else { 1.0 - p };
                    obs[1 + j] = on as u8 as f64;
                }
                if prob > 0.0 {
                    out.push((prob, obs));
                }
            }
        }
        Ok(out)
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        let t = prefix.len().checked_sub(1).ok_or_else(|| Error::Support("empty prefix has no item".into()))?;
        if t >= self.spec.horizon {
            return Err(Error::Support(format!("{prefix} beyond horizon")));
        }
        let level = prefix.observation(t)[0];
        let reward = *self
            .graph
            .weights
            .get(level as usize)
            .ok_or_else(|| Error::Support(format!("weight level {level} unknown")))?;
        let mut consumption = Vec::new();
        for &slot in &self.incident[t] {
            if self.realized(prefix, slot) == Some(true) {
                consumption.push((slot, 1.0));
            }
        }
        if consumption.len() > self.graph.delta {
            return Err(Error::Instance(format!("node {t} realizes {} edges > Δ", consumption.len())));
        }
        Ok(Item::new(reward, consumption))
    }
}

/// Encode an independent-set process: `T = n`, `m = ⌊Δn/2⌋`, `b ≡ 1`, `ι = 1`.
pub fn encode_is(graph: IsGraph) -> Result<(InstanceSpec, ProcessSimulator<IsProcess>)> {
    let process = IsProcess::new(graph)?;
    Ok((process.spec.clone(), ProcessSimulator::new(process)))
}

/// An edge-arrival process for online bipartite matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwmGraph {
    pub n_nodes: usize,
    pub delta: usize,
    /// Candidate edge for each potential-edge period, in arrival order.
    pub candidates: Vec<(usize, usize)>,
    /// Probability that the graph stops (edge and all later ones unrealized)
    /// at any period.
    pub stop_prob: f64,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub persistence: f64,
}

/// Matching as a [`FiniteProcess`]. Observation: `[realized, u, v, weight level]`.
#[derive(Clone, Debug)]
pub struct MwmProcess {
    graph: MwmGraph,
    spec: InstanceSpec,
}

const UNREALIZED_EDGE: [f64; 4] = [0.0, -1.0, -1.0, -1.0];

impl MwmProcess {
    pub fn new(graph: MwmGraph) -> Result<Self> {
        let n = graph.n_nodes;
        let horizon = graph.delta * n / 2;
        if horizon == 0 {
            return Err(Error::Instance("matching needs ⌊Δn/2⌋ ≥ 1".into()));
        }
        if graph.candidates.len() > horizon {
            return Err(Error::Instance(format!("{} candidates exceed T = ⌊Δn/2⌋ = {horizon}", graph.candidates.len())));
        }
        if graph.weights.is_empty() || graph.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Instance("weights must be a non-empty list in [0, 1]".into()));
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in &graph.candidates {
            if u >= n || v >= n || u == v {
                return Err(Error::Instance(format!("candidate ({u}, {v}) is not a pair of distinct nodes")));
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        if let Some(u) = (0..n).find(|&u| degree[u] > graph.delta) {
            return Err(Error::Instance(format!("node {u} has candidate degree {} > Δ", degree[u])));
        }
        let spec = InstanceSpec::new(horizon, vec![1.0; n], 2, 1.0)?;
        Ok(Self { graph, spec })
    }

    pub fn graph(&self) -> &MwmGraph {
        &self.graph
    }
}

impl FiniteProcess for MwmProcess {
    fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    fn dim(&self) -> usize {
        4
    }

    fn outcomes(&self, prefix: &Prefix) -> Result<Vec<(f64, Observation)>> {
        let t = prefix.len();
        if t >= self.spec.horizon {
            return Ok(Vec::new());
        }
        let stopped = prefix.last().is_some_and(|o| o[0] == 0.0);
        if stopped || t >= self.graph.candidates.len() {
            return Ok(vec![(1.0, UNREALIZED_EDGE.to_vec())]);
        }
        let (u, v) = self.graph.candidates[t];
        let prev = prefix.last().map(|o| o[3] as usize);
        let go = 1.0 - self.graph.stop_prob;
        let mut out = Vec::new();
        if self.graph.stop_prob > 0.0 {
            out.push((self.graph.stop_prob, UNREALIZED_EDGE.to_vec()));
        }
        for (lvl, p) in level_law(self.graph.weights.len(), self.graph.persistence, prev).into_iter().enumerate() {
            if go * p > 0.0 {
                out.push((go * p, vec![1.0, u as f64, v as f64, lvl as f64]));
            }
        }
        Ok(out)
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        let obs = prefix.last().ok_or_else(|| Error::Support("empty prefix has no item".into()))?;
        if obs[0] == 0.0 {
            return Ok(Item::none());
        }
        let (u, v) = (obs[1], obs[2]);
        let n = self.graph.n_nodes as f64;
        if !(u >= 0.0 && v >= 0.0 && u < n && v < n && u != v) {
            return Err(Error::Instance(format!("edge at period {} has unidentified endpoints ({u}, {v})", prefix.len())));
        }
        let reward = *self
            .graph
            .weights
            .get(obs[3] as usize)
            .ok_or_else(|| Error::Support(format!("weight level {} unknown", obs[3])))?;
        Ok(Item::new(reward, vec![(u as usize, 1.0), (v as usize, 1.0)]))
    }
}

/// Encode a matching process: `T = ⌊Δn/2⌋`, `m = n`, `b ≡ 1`, `L = 2`, `ι = 1`.
pub fn encode_mwm(graph: MwmGraph) -> Result<(InstanceSpec, ProcessSimulator<MwmProcess>)> {
    let process = MwmProcess::new(graph)?;
    Ok((process.spec.clone(), ProcessSimulator::new(process)))
}

/// An online-node arrival process. Offline nodes are resources `0..n_offline`,
/// online node `o` is resource `n_offline + o`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmoGraph {
    pub n_offline: usize,
    pub delta: usize,
    /// Candidate offline neighbours of each online node, in arrival order.
    pub neighbors: Vec<Vec<usize>>,
    pub edge_prob: f64,
    /// Shift of the realization probability per unit of (previous block
    /// fill − ½).
    #[serde(default)]
    pub correlation: f64,
}

/// Online-node matching as a [`FiniteProcess`].
///
/// Observation: `[online o, position in block, block length, off_1 … off_Δ]`
/// (`-1` padding); unrealized periods are `[-1, 0, 0, -1 …]`. The whole block
/// is written into every one of its observations, so the block content is
/// known at its first period.
#[derive(Clone, Debug)]
pub struct MmoProcess {
    graph: MmoGraph,
    spec: InstanceSpec,
}

impl MmoProcess {
    pub fn new(graph: MmoGraph) -> Result<Self> {
        let n_online = graph.neighbors.len();
        let n = graph.n_offline + n_online;
        let horizon = graph.delta * n / 2;
        if horizon == 0 || n_online == 0 {
            return Err(Error::Instance("online matching needs online nodes and ⌊Δn/2⌋ ≥ 1".into()));
        }
        let total: usize = graph.neighbors.iter().map(Vec::len).sum();
        if total > horizon {
            return Err(Error::Instance(format!("{total} candidate edges exceed T = ⌊Δn/2⌋ = {horizon}")));
        }
        let mut degree = vec![0usize; graph.n_offline];
        for (o, nb) in graph.neighbors.iter().enumerate() {
            if nb.len() > graph.delta {
                return Err(Error::Instance(format!("online node {o} has degree {} > Δ", nb.len())));
            }
            let mut sorted = nb.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != nb.len() {
                return Err(Error::Instance(format!("online node {o} lists a neighbour twice")));
            }
            for &u in nb {
                if u >= graph.n_offline {
                    return Err(Error::Instance(format!("online node {o} lists unknown offline node {u}")));
                }
                degree[u] += 1;
            }
        }
        if let Some(u) = (0..graph.n_offline).find(|&u| degree[u] > graph.delta) {
            return Err(Error::Instance(format!("offline node {u} has degree {} > Δ", degree[u])));
        }
        let spec = InstanceSpec::new(horizon, vec![1.0; n], 2, 1.0)?;
        Ok(Self { graph, spec })
    }

    pub fn graph(&self) -> &MmoGraph {
        &self.graph
    }

    fn unrealized(&self) -> Observation {
        let mut o = vec![-1.0; self.dim()];
        o[1] = 0.0;
        o[2] = 0.0;
        o
    }

    fn realization_prob(&self, prev_fill: Option<f64>) -> f64 {
        clamp01(self.graph.edge_prob + self.graph.correlation * (prev_fill.unwrap_or(0.5) - 0.5))
    }

    /// Laws of the realized neighbour subsets of online node `o`.
    fn subsets(&self, o: usize, p: f64) -> Vec<(f64, Vec<usize>)> {
        let nb = &self.graph.neighbors[o];
        (0..(1usize << nb.len()))
            .map(|mask| {
                let mut prob = 1.0;
                let mut set = Vec::new();
                for (j, &u) in nb.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        prob *= p;
                        set.push(u);
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                (prob, set)
            })
            .filter(|(prob, _)| *prob > 0.0)
            .collect()
    }
}

impl FiniteProcess for MmoProcess {
    fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    fn dim(&self) -> usize {
        3 + self.graph.delta
    }

    fn outcomes(&self, prefix: &Prefix) -> Result<Vec<(f64, Observation)>> {
        let t = prefix.len();
        if t >= self.spec.horizon {
            return Ok(Vec::new());
        }
        let (next_online, prev_fill) = match prefix.last() {
            None => (0, None),
            Some(obs) if obs[0] < 0.0 => return Ok(vec![(1.0, self.unrealized())]),
            Some(obs) => {
                let (pos, len) = (obs[1] as usize, obs[2] as usize);
                if pos + 1 < len {
                    let mut next = obs.to_vec();
                    next[1] = (pos + 1) as f64;
                    return Ok(vec![(1.0, next)]);
                }
                let nb = self.graph.neighbors[obs[0] as usize].len().max(1);
                (obs[0] as usize + 1, Some(len as f64 / nb as f64))
            }
        };
        // Online nodes with no realized edge occupy no period; fold their
        // probability into the next node's block (or into "unrealized").
        let mut out = Vec::new();
        let mut carry = 1.0;
        let mut fill = prev_fill;
        for o in next_online..self.graph.neighbors.len() {
            let p = self.realization_prob(fill);
            let mut empty = 0.0;
            for (prob, set) in self.subsets(o, p) {
                if set.is_empty() {
                    empty += prob;
                    continue;
                }
                let mut obs = vec![-1.0; self.dim()];
                obs[0] = o as f64;
                obs[1] = 0.0;
                obs[2] = set.len() as f64;
                for (j, &u) in set.iter().enumerate() {
                    obs[3 + j] = u as f64;
                }
                out.push((carry * prob, obs));
            }
            carry *= empty;
            fill = Some(0.0);
            if carry <= 0.0 {
                break;
            }
        }
        if carry > 0.0 {
            out.push((carry, self.unrealized()));
        }
        Ok(out)
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        let obs = prefix.last().ok_or_else(|| Error::Support("empty prefix has no item".into()))?;
        if obs[0] < 0.0 {
            return Ok(Item::none());
        }
        let (o, pos) = (obs[0] as usize, obs[1] as usize);
        let off = obs[3 + pos];
        if off < 0.0 || off as usize >= self.graph.n_offline {
            return Err(Error::Instance(format!("edge at period {} has no offline endpoint", prefix.len())));
        }
        Ok(Item::new(1.0, vec![(off as usize, 1.0), (self.graph.n_offline + o, 1.0)]))
    }

    fn block(&self, prefix: &Prefix) -> Result<Option<Block>> {
        let t = prefix.len();
        let obs = prefix.last().ok_or_else(|| Error::Support("empty prefix has no block".into()))?;
        if obs[0] < 0.0 {
            return Ok(None);
        }
        let (o, pos, len) = (obs[0] as usize, obs[1] as usize, obs[2] as usize);
        if len == 0 || pos >= len || pos + 1 > t || len > self.graph.delta {
            return Err(Error::Instance(format!("malformed block observation at period {t}")));
        }
        let start = t - 1 - pos;
        let end = start + len - 1;
        if end >= self.spec.horizon {
            return Err(Error::Instance(format!("block of online node {o} runs past the horizon")));
        }
        // Every observation in the block must repeat the block header.
        for p in start..t {
            let q = prefix.observation(p);
            if q[0] != obs[0] || q[2] != obs[2] || q[1] as usize != p - start || q[3..] != obs[3..] {
                return Err(Error::Instance(format!("block ordering violated at period {}", p + 1)));
            }
        }
        if start > 0 {
            let before = prefix.observation(start - 1);
            if before[0] < 0.0 || before[0] >= obs[0] || before[1] + 1.0 != before[2] {
                return Err(Error::Instance(format!("block of online node {o} does not follow a finished block")));
            }
        }
        let offline: Vec<usize> = obs[3..3 + len].iter().map(|&u| u as usize).collect();
        let mut prefixes: Vec<Prefix> = (start + 1..=t).map(|s| prefix.truncate(s)).collect();
        let mut cur = prefix.clone();
        for p in pos + 1..len {
            let mut next = obs.to_vec();
            next[1] = p as f64;
            cur = cur.extend(&next);
            prefixes.push(cur.clone());
        }
        Ok(Some(Block { start, end, online: self.graph.n_offline + o, offline, prefixes }))
    }
}

/// Encode an online-node matching process (`m = n`, `L = 2`, `ι = 1`, `b ≡ 1`).
pub fn encode_mmo(graph: MmoGraph) -> Result<(InstanceSpec, ProcessSimulator<MmoProcess>)> {
    let process = MmoProcess::new(graph)?;
    Ok((process.spec.clone(), ProcessSimulator::new(process)))
}

/// Check, on an explicit tree, that each listed resource's (all when
/// `resources` is `None`) whole consumption sequence is determined at the first period it is touched: for every
/// node `S` where resource `i` is first requested along its path, all
/// completions of `S` agree on `a_i` at every period.
///
/// This is the measurability restriction of the "traditional" independent
/// set variant (incident nodes known when an edge first appears) and, for
/// the online-node resources, of the block structure.
pub fn check_first_touch_measurability(tree: &ExplicitScenarioTree, resources: Option<&[usize]>) -> Result<()> {
    use std::collections::HashMap;
    // first[(node, i)] = the consumption sequence seen below the first touch.
    let mut seen: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for &leaf in tree.leaves() {
        let path = tree.path(leaf);
        let mut touched: HashMap<usize, usize> = HashMap::new();
        for &k in &path {
            for &(i, _) in &tree.node(k).item.consumption {
                if resources.is_none_or(|r| r.contains(&i)) {
                    touched.entry(i).or_insert(k);
                }
            }
        }
        for (&i, &at) in &touched {
            let seq: Vec<f64> = path.iter().map(|&k| tree.node(k).item.consumption_of(i)).collect();
            match seen.get(&(at, i)) {
                Some(prev) if *prev != seq => {
                    return Err(Error::Instance(format!(
                        "resource {i} consumption is not determined at its first request (node {at})"
                    )));
                }
                Some(_) => {}
                None => {
                    seen.insert((at, i), seq);
                }
            }
        }
    }
    Ok(())
}
