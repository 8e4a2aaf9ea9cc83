use std::collections::HashSet;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use crate::model::ExplicitScenarioTree;
use crate::{Error, Result};

/// Largest deterministic-equivalent the dense solver is given.
pub const LP_SIZE_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub constraints: usize,
}

/// One `(leaf, resource)` row: `Σ_{t} a_i(S^t) X(S^t)` over the leaf's path.
/// Rows repeated across leaves (resource touched only on a shared stem) are
/// kept once.
fn rows(tree: &ExplicitScenarioTree) -> Vec<(usize, usize, Vec<(usize, f64)>)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &leaf in tree.leaves() {
        let path = tree.path(leaf);
        for i in 0..tree.spec().m {
            let row: Vec<(usize, f64)> = path
                .iter()
                .filter_map(|&k| {
                    let a = tree.node(k).item.consumption_of(i);
                    (a > 0.0).then_some((k, a))
                })
                .collect();
            if row.is_empty() {
                continue;
            }
            let key: Vec<(usize, u64)> = row.iter().map(|&(k, a)| (k, a.to_bits())).collect();
            if seen.insert((i, key)) {
                out.push((leaf, i, row));
            }
        }
    }
    out
}

fn lp_error(e: minilp::Error) -> Error {
    Error::Lp(e.to_string())
}

fn check_size(tree: &ExplicitScenarioTree, rows: usize, extra_vars: usize) -> Result<()> {
    let vars = tree.len() + extra_vars;
    if vars > LP_SIZE_CAP || rows > LP_SIZE_CAP {
        return Err(Error::Cap { what: "explicit LP size", size: vars.max(rows), cap: LP_SIZE_CAP });
    }
    Ok(())
}

fn reward_vars(problem: &mut Problem, tree: &ExplicitScenarioTree) -> Vec<Variable> {
    tree.nodes().iter().map(|n| problem.add_var(n.prob * n.item.reward, (0.0, 1.0))).collect()
}

/// `OPT_lp`: the deterministic-equivalent LP with `X ∈ [0, 1]`.
pub fn solve_lp_explicit(tree: &ExplicitScenarioTree) -> Result<LpSolution> {
    let rows = rows(tree);
    check_size(tree, rows.len(), 0)?;
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let x = reward_vars(&mut problem, tree);
    for (_, i, row) in &rows {
        let expr: Vec<(Variable, f64)> = row.iter().map(|&(k, a)| (x[k], a)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, tree.spec().b[*i]);
    }
    let sol = problem.solve().map_err(lp_error)?;
    Ok(LpSolution { value: sol.objective(), x: x.iter().map(|&v| sol[v].clamp(0.0, 1.0)).collect(), constraints: rows.len() })
}

/// `OPT_pen = max f`: the non-smooth penalty objective, linearized with one
/// slack per `(leaf, resource)` excess.
pub fn solve_pen_lp(tree: &ExplicitScenarioTree) -> Result<LpSolution> {
    let iota = tree.spec().iota;
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let x = reward_vars(&mut problem, tree);
    let mut rows_added = 0;
    let mut slacks = 0;
    // Every leaf gets its own slack: the penalty is weighted by the leaf mass.
    for &leaf in tree.leaves() {
        let path = tree.path(leaf);
        let mu = tree.node(leaf).prob;
        for i in 0..tree.spec().m {
            let mut expr: Vec<(Variable, f64)> = path
                .iter()
                .filter_map(|&k| {
                    let a = tree.node(k).item.consumption_of(i);
                    (a > 0.0).then_some((x[k], a))
                })
                .collect();
            if expr.is_empty() {
                continue;
            }
            let s = problem.add_var(-2.0 / iota * mu, (0.0, f64::INFINITY));
            slacks += 1;
            expr.push((s, -1.0));
            problem.add_constraint(expr.as_slice(), ComparisonOp::Le, tree.spec().b[i]);
            rows_added += 1;
        }
    }
    check_size(tree, rows_added, slacks)?;
    let sol = problem.solve().map_err(lp_error)?;
    Ok(LpSolution { value: sol.objective(), x: x.iter().map(|&v| sol[v].clamp(0.0, 1.0)).collect(), constraints: rows_added })
}
