#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochpack::model::generate::{random_tree, RandomTreeParams};
use stochpack::model::{ExplicitScenarioTree, InstanceSpec, Item, NodeSpec};

/// `T = 1`, `μ = 1`, `Z = 0.5`, `a = 1`, budget `b`, `ι = 1`.
pub fn one_node(b: f64) -> ExplicitScenarioTree {
    let spec = InstanceSpec::new(1, vec![b], 1, 1.0).unwrap();
    ExplicitScenarioTree::new(spec, vec![NodeSpec { parent: None, prob: 1.0, item: Item::new(0.5, vec![(0, 1.0)]) }]).unwrap()
}

/// `T = 2`, `m = 1`, `b = 1`, `a ≡ 1`; `Z = 0.5` at `t = 1`, then `Z = 1` or `0.2` w.p. ½.
pub fn two_period() -> ExplicitScenarioTree {
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

/// Random tree with at most `max_nodes` nodes; integral consumption when `integral`.
pub fn random(seed: u64, max_nodes: usize, max_t: usize, integral: bool) -> ExplicitScenarioTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9));
    random_tree(&RandomTreeParams {
        seed,
        horizon: rng.random_range(2..=max_t),
        m: rng.random_range(1..=3),
        l: 2,
        iota: if integral { 1.0 } else { 0.5 },
        budget_ratio: rng.random_range(0.15..0.6),
        branching: 3,
        max_nodes,
        consume_prob: 0.8,
        integral,
    })
    .unwrap()
}
