use super::memo::MemoTable;
use super::sampling::conditional_draws;
use super::{extrapolate, gradient_from_draws, projected_step, SolverConfig};
use crate::model::tree::DEFAULT_NODE_CAP;
use crate::model::ExplicitScenarioTree;
use crate::penalty::SolutionVector;
use crate::{Error, Result};

/// Algorithm 1 over every node of an explicit tree: the iterates
/// `X^1, …, X^K` (node-index order), sharing the keyed sampling streams of
/// the recursive routine.
pub fn run_algorithm1_explicit(tree: &ExplicitScenarioTree, config: &SolverConfig) -> Result<Vec<SolutionVector>> {
    run_algorithm1_explicit_capped(tree, config, DEFAULT_NODE_CAP)
}

pub fn run_algorithm1_explicit_capped(tree: &ExplicitScenarioTree, config: &SolverConfig, cap: usize) -> Result<Vec<SolutionVector>> {
    if tree.len() > cap {
        return Err(Error::Cap { what: "full-sweep tree nodes", size: tree.len(), cap });
    }
    let n = tree.len();
    let prefixes: Vec<_> = (0..n).map(|k| tree.prefix_of(k)).collect();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut out = Vec::with_capacity(config.k);
    for k in 0..config.k {
        let beta = config.beta(k);
        let y: Vec<f64> = cur.iter().zip(&prev).map(|(&c, &p)| extrapolate(beta, c, p)).collect();
        // Draws of iteration k are used once; a fresh table per iteration keeps memory flat.
        let mut memo = MemoTable::new();
        let mut next = vec![0.0; n];
        for s in 0..n {
            let draws = conditional_draws(tree, &mut memo, &prefixes[s], k, config)?;
            let g = gradient_from_draws(&tree.node(s).item, &draws, tree.spec(), config, |p| Ok(y[tree.node_of(p)?]))?;
            next[s] = projected_step(y[s], config.alpha, g);
        }
        prev = std::mem::replace(&mut cur, next);
        out.push(SolutionVector::new(cur.clone())?);
    }
    Ok(out)
}
