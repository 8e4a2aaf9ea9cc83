mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochpack::model::{tree_as_simulator, ExplicitScenarioTree, InstanceSpec, Item, NodeSpec, Prefix, Simulator};
use stochpack::oracle::*;
use stochpack::penalty::{aggregate_violation, expected_reward, f_raw, SmoothingParam};
use stochpack::policies::{EpisodeContext, FnSource, LpPolicy, Policy};
use stochpack::{Error, Result};

/// Best deterministic 0/1 policy by enumerating every decision vector.
fn brute_force(tree: &ExplicitScenarioTree) -> f64 {
    let n = tree.len();
    assert!(n <= 12);
    let paths: Vec<Vec<usize>> = tree.leaves().iter().map(|&l| tree.path(l)).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|k| (mask >> k & 1) as f64).collect();
        let feasible = paths.iter().all(|path| {
            (0..tree.spec().m).all(|i| {
                path.iter().map(|&k| tree.node(k).item.consumption_of(i) * x[k]).sum::<f64>() <= tree.spec().b[i] + 1e-9
            })
        });
        if feasible {
            best = best.max(expected_reward(tree, &x).unwrap());
        }
    }
    best
}

#[test]
fn two_period_instance() {
    let tree = common::two_period();
    let pack = solve_pack_dp(&tree).unwrap();
    assert!((pack.value - 0.6).abs() < 1e-12);
    assert_eq!(pack.decisions, vec![0.0, 1.0, 1.0]);
    assert!(!pack.approximate);
    let lp = solve_lp_explicit(&tree).unwrap();
    assert!((lp.value - 0.6).abs() < 1e-9);
    assert!(lp.x[0].abs() < 1e-9);

    assert!((eval_policy_exact(&tree, &|_| Some(1.0)).unwrap() - 1.1).abs() < 1e-12);
    assert_eq!(eval_policy_exact(&tree, &|_| Some(0.0)).unwrap(), 0.0);
    let replay = eval_policy_exact(&tree, &|p: &Prefix| Some(pack.decisions[tree.node_of(p).unwrap()])).unwrap();
    assert!((replay - pack.value).abs() < 1e-12);
    let partial = |p: &Prefix| (p.len() == 1).then_some(1.0);
    assert!(matches!(eval_policy_exact(&tree, &partial), Err(Error::MissingValue(_))));
}

fn retree(tree: &ExplicitScenarioTree, spec: InstanceSpec, item: impl Fn(&Item) -> Item) -> ExplicitScenarioTree {
    let nodes = tree.nodes().iter().map(|n| NodeSpec { parent: n.parent, prob: n.prob, item: item(&n.item) }).collect();
    ExplicitScenarioTree::new(spec, nodes).unwrap()
}

#[test]
fn degenerate_instances_are_worth_zero() {
    let tree = common::random(3, 50, 4, false);
    let zero = retree(&tree, tree.spec().clone(), |it| Item::new(0.0, it.consumption.clone()));
    assert_eq!(solve_pack_dp(&zero).unwrap().value, 0.0);
    assert!(solve_lp_explicit(&zero).unwrap().value.abs() < 1e-12);

    let spec = InstanceSpec { b: vec![0.0; tree.spec().m], ..tree.spec().clone() };
    let iota = spec.iota;
    let starved = retree(&tree, spec, |it| {
        let c = if it.consumption.is_empty() { vec![(0, iota)] } else { it.consumption.clone() };
        Item::new(it.reward, c)
    });
    assert_eq!(solve_pack_dp(&starved).unwrap().value, 0.0);
    assert!(solve_lp_explicit(&starved).unwrap().value.abs() < 1e-9);
}

#[test]
fn dp_matches_enumeration() {
    let mut checked = 0;
    for seed in 0..200 {
        let tree = common::random(seed, 12, 4, seed % 2 == 1);
        if tree.len() > 12 {
            continue;
        }
        let pack = solve_pack_dp(&tree).unwrap();
        assert!(!pack.approximate);
        let bf = brute_force(&tree);
        assert!((pack.value - bf).abs() < 1e-12, "seed {seed}: dp {} vs enumeration {bf}", pack.value);
        let replay = expected_reward(&tree, &pack.decisions).unwrap();
        assert!((replay - pack.value).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn dp_state_cap_and_approximation() {
    let tree = common::random(9, 300, 6, false);
    assert!(matches!(solve_pack_dp_capped(&tree, 3), Err(Error::Cap { .. })));

    let spec = InstanceSpec::new(2, vec![1.0], 1, 0.3).unwrap();
    let odd = ExplicitScenarioTree::new(
        spec,
        vec![
            NodeSpec { parent: None, prob: 1.0, item: Item::new(1.0, vec![(0, 1.0 / 3.0_f64.sqrt())]) },
            NodeSpec { parent: Some(0), prob: 1.0, item: Item::new(1.0, vec![(0, 0.3)]) },
        ],
    )
    .unwrap();
    let pack = solve_pack_dp(&odd).unwrap();
    assert!(pack.approximate);
    assert!((pack.value - 2.0).abs() < 1e-12);
}

#[test]
fn relaxation_chain() {
    for seed in 0..30 {
        let tree = common::random(500 + seed, 60, 5, seed % 2 == 0);
        let pack = solve_pack_dp(&tree).unwrap().value;
        let lp = solve_lp_explicit(&tree).unwrap();
        let pen = solve_pen_lp(&tree).unwrap().value;
        assert!(pack <= lp.value + 1e-9, "seed {seed}: pack {pack} > lp {}", lp.value);
        assert!(lp.value <= pen + 1e-9, "seed {seed}: lp {} > pen {pen}", lp.value);
        assert!(aggregate_violation(&tree, &lp.x).unwrap() <= 1e-7);
    }
}

#[test]
fn smoothed_optimum_against_lp() {
    for seed in 0..10 {
        let tree = common::random(600 + seed, 40, 4, false);
        let v = tree.structure_constants().v as f64;
        let iota = tree.spec().iota;
        let lp = solve_lp_explicit(&tree).unwrap().value;
        for theta in [0.1, 0.01, 0.001] {
            let pen = solve_pen_explicit(&tree, SmoothingParam::new(theta).unwrap(), 1e-8).unwrap();
            assert!(pen.value >= lp - v * theta / iota - 1e-7, "seed {seed} θ {theta}: {} < {lp}", pen.value);
        }
    }
    let tree = common::two_period();
    let pen = solve_pen_explicit(&tree, SmoothingParam::new(1e-4).unwrap(), 1e-8).unwrap();
    assert!(pen.value >= 0.6 - 1e-4 - 1e-7);
    assert!(pen.value <= solve_pen_lp(&tree).unwrap().value + 1e-4 + 1e-7);
}

#[test]
fn violation_bounded_by_penalty_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..20 {
        let tree = common::random(700 + seed, 60, 5, seed % 2 == 0);
        let opt_pen = solve_pen_lp(&tree).unwrap().value;
        for _ in 0..10 {
            let x: Vec<f64> = (0..tree.len()).map(|_| rng.random::<f64>()).collect();
            let lhs = aggregate_violation(&tree, &x).unwrap();
            let rhs = tree.spec().iota * (opt_pen - f_raw(&tree, &x).unwrap());
            assert!(lhs <= rhs + 1e-9, "seed {seed}: {lhs} > {rhs}");
        }
    }
}

fn lp_factory(value: f64) -> impl Fn(u64) -> Result<Box<dyn Policy>> + Sync {
    move |_| Ok(Box::new(LpPolicy::new(FnSource::constant(value))) as Box<dyn Policy>)
}

#[test]
fn mc_on_deterministic_process_is_exact() {
    let spec = InstanceSpec::new(3, vec![2.0], 1, 1.0).unwrap();
    let tree = ExplicitScenarioTree::new(
        spec,
        (0..3usize)
            .map(|t| NodeSpec { parent: t.checked_sub(1), prob: 1.0, item: Item::new(0.5 + t as f64 * 0.25, vec![(0, 1.0)]) })
            .collect(),
    )
    .unwrap();
    let exact = eval_policy_exact(&tree, &|_| Some(0.5)).unwrap();
    let sim = tree_as_simulator(tree);
    let report = eval_policy_mc(sim.as_ref(), &lp_factory(0.5), 500, 1, &McOptions::default()).unwrap();
    assert_eq!(report.std_error, 0.0);
    assert!((report.mean_reward - exact).abs() < 1e-12);
    assert_eq!(report.violation_count, 0);
}

#[test]
fn mc_is_deterministic_and_scales() {
    let tree = common::random(11, 80, 5, false);
    let sim = tree_as_simulator(tree);
    let factory = lp_factory(0.4);
    let strip = |mut r: EvalReport| {
        r.wall_time_s = 0.0;
        r
    };
    for gs in [1, 7] {
        let opts = McOptions { group_size: gs, ..Default::default() };
        let a = strip(eval_policy_mc(sim.as_ref(), &factory, 2_000, 5, &opts).unwrap());
        let b = strip(eval_policy_mc(sim.as_ref(), &factory, 2_000, 5, &opts).unwrap());
        assert_eq!(a, b);
    }
    let mut ratio = 0.0;
    let reps = 20;
    for s in 0..reps {
        let small = eval_policy_mc(sim.as_ref(), &factory, 2_000, 100 + s, &McOptions::default()).unwrap();
        let large = eval_policy_mc(sim.as_ref(), &factory, 4_000, 100 + s, &McOptions::default()).unwrap();
        ratio += large.std_error / small.std_error / reps as f64;
    }
    assert!((ratio - 0.5f64.sqrt()).abs() < 0.05, "mean SE ratio {ratio}");
}

/// Accepts everything regardless of budgets.
struct Greedy;

impl Policy for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&self, _: &mut EpisodeContext, _: &dyn Simulator, _: &Prefix, _: &Item) -> Result<(f64, f64)> {
        Ok((1.0, 1.0))
    }
}

#[test]
fn audit_catches_infeasible_policies() {
    let sim = tree_as_simulator(common::two_period());
    let factory = |_| Ok(Box::new(Greedy) as Box<dyn Policy>);
    match eval_policy_mc(sim.as_ref(), &factory, 10, 0, &McOptions::default()) {
        Err(Error::Audit { detail, .. }) => {
            assert!(detail.contains("\"decision\""), "{detail}");
        }
        other => panic!("expected audit failure, got {other:?}"),
    }
    let report =
        eval_policy_mc(sim.as_ref(), &factory, 10, 0, &McOptions { audit: AuditMode::Count, ..Default::default() }).unwrap();
    assert_eq!(report.violation_count, 10);
    assert!((report.max_violation[0] - 1.0).abs() < 1e-12);
}
