//! The one-sided Huber penalty and the penalty objectives
//!
//! ```text
//! f^θ(X) = Σ_{S∈𝓔} μ(S) Z(S) X(S) − 2/ι Σ_{S∈𝓢} μ(S) Σ_i φ_θ(Σ_t a_i(S^t) X(S^t) − b_i)
//! f(X)   = the same with φ_θ replaced by (·)⁺
//! ```
//!
//! over an explicit tree. Solution vectors are dense, indexed by node.

use serde::{Deserialize, Serialize};

use crate::model::{ExplicitScenarioTree, Prefix};
use crate::{Error, Result};

/// Smoothing parameter `θ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(Error::Parameter(format!("smoothing parameter θ = {theta} must be positive and finite")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SmoothingParam {
    type Error = Error;

    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<SmoothingParam> for f64 {
    fn from(theta: SmoothingParam) -> f64 {
        theta.0
    }
}

/// `φ_θ(x)`: 0 for `x ≤ 0`, `x²/(2θ)` on `[0, θ]`, `x − θ/2` above.
#[inline]
pub fn huber(x: f64, theta: SmoothingParam) -> f64 {
    let t = theta.0;
    if x <= 0.0 {
        0.0
    } else if x <= t {
        0.5 * x * x / t
    } else {
        x - 0.5 * t
    }
}

/// `φ'_θ(x) = min(x⁺/θ, 1)`.
#[inline]
pub fn huber_deriv(x: f64, theta: SmoothingParam) -> f64 {
    (x.max(0.0) / theta.0).min(1.0)
}

/// `X̄`, one value in `[0, 1]` per node of a tree (node-index order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionVector {
    values: Vec<f64>,
}

impl SolutionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter(format!("X(node {k}) = {} outside [0, 1]", values[k])));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, x: f64) -> Result<Self> {
        Self::new(vec![x; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X(S)` for a prefix of `tree`.
    pub fn at(&self, tree: &ExplicitScenarioTree, prefix: &Prefix) -> Result<f64> {
        let k = tree.node_of(prefix)?;
        self.values.get(k).copied().ok_or_else(|| Error::MissingValue(prefix.to_string()))
    }
}

fn check_len(tree: &ExplicitScenarioTree, x: &[f64]) -> Result<()> {
    if x.len() != tree.len() {
        let missing = x.len().min(tree.len());
        return Err(Error::MissingValue(if missing < tree.len() {
            tree.prefix_of(missing).to_string()
        } else {
            format!("{} values for {} nodes", x.len(), tree.len())
        }));
    }
    Ok(())
}

/// `Σ_{S∈𝓔} μ(S) Z(S) X(S)`.
pub fn expected_reward(tree: &ExplicitScenarioTree, x: &[f64]) -> Result<f64> {
    check_len(tree, x)?;
    Ok(tree.nodes().iter().zip(x).map(|(n, &v)| n.prob * n.item.reward * v).sum())
}

/// Visit every leaf with its path and the per-resource loads
/// `Σ_t a_i(S^t) X(S^t) − b_i` for the resources requested on the path.
fn for_each_leaf(tree: &ExplicitScenarioTree, x: &[f64], mut visit: impl FnMut(usize, &[usize], &[(usize, f64)])) {
    let b = &tree.spec().b;
    let mut load = vec![0.0; tree.spec().m];
    let mut touched: Vec<usize> = Vec::new();
    let mut excess: Vec<(usize, f64)> = Vec::new();
    for &leaf in tree.leaves() {
        let path = tree.path(leaf);
        for &k in &path {
            for &(i, a) in &tree.node(k).item.consumption {
                if load[i] == 0.0 && !touched.contains(&i) {
                    touched.push(i);
                }
                load[i] += a * x[k];
            }
        }
        excess.clear();
        excess.extend(touched.iter().map(|&i| (i, load[i] - b[i])));
        visit(leaf, &path, &excess);
        for &i in &touched {
            load[i] = 0.0;
        }
        touched.clear();
    }
}

/// `Σ_{S∈𝓢} μ(S) Σ_i g(Σ_t a_i(S^t) X(S^t) − b_i)` for a penalty `g` with `g ≤ 0 ⇒ 0`.
pub fn penalty_sum(tree: &ExplicitScenarioTree, x: &[f64], g: impl Fn(f64) -> f64) -> Result<f64> {
    check_len(tree, x)?;
    let mut total = 0.0;
    for_each_leaf(tree, x, |leaf, _, excess| {
        let mu = tree.node(leaf).prob;
        total += mu * excess.iter().map(|&(_, e)| g(e)).sum::<f64>();
    });
    Ok(total)
}

/// Aggregate violation `Σ_{S∈𝓢} μ(S) Σ_i (Σ_t a_i X − b_i)⁺`.
pub fn aggregate_violation(tree: &ExplicitScenarioTree, x: &[f64]) -> Result<f64> {
    penalty_sum(tree, x, |e| e.max(0.0))
}

/// `f^θ` on raw values (not required to lie in `[0, 1]`).
pub fn f_theta_raw(tree: &ExplicitScenarioTree, x: &[f64], theta: SmoothingParam) -> Result<f64> {
    let iota = tree.spec().iota;
    Ok(expected_reward(tree, x)? - 2.0 / iota * penalty_sum(tree, x, |e| huber(e, theta))?)
}

/// `f` on raw values.
pub fn f_raw(tree: &ExplicitScenarioTree, x: &[f64]) -> Result<f64> {
    let iota = tree.spec().iota;
    Ok(expected_reward(tree, x)? - 2.0 / iota * aggregate_violation(tree, x)?)
}

pub fn eval_f_theta(tree: &ExplicitScenarioTree, x: &SolutionVector, theta: SmoothingParam) -> Result<f64> {
    f_theta_raw(tree, x.values(), theta)
}

pub fn eval_f(tree: &ExplicitScenarioTree, x: &SolutionVector) -> Result<f64> {
    f_raw(tree, x.values())
}

/// The conditional-expectation gradient
///
/// ```text
/// G(S) = Z(S) − 2/ι Σ_{S'∈𝓢, S⊆S'} μ(S')/μ(S) Σ_i a_i(S) φ'_θ(Σ_t a_i(S'^t) X(S'^t) − b_i)
/// ```
///
/// It is the partial derivative of `f^θ` divided by `μ(S)`:
/// `∂f^θ/∂X(S) = μ(S) G(S)`. The stochastic gradient estimates `G`.
pub fn exact_grad_f_theta(tree: &ExplicitScenarioTree, x: &[f64], theta: SmoothingParam) -> Result<Vec<f64>> {
    check_len(tree, x)?;
    let iota = tree.spec().iota;
    let mut acc = vec![0.0; tree.len()];
    let mut deriv = vec![0.0; tree.spec().m];
    for_each_leaf(tree, x, |leaf, path, excess| {
        let mu = tree.node(leaf).prob;
        for &(i, e) in excess {
            deriv[i] = huber_deriv(e, theta);
        }
        for &k in path {
            let s: f64 = tree.node(k).item.consumption.iter().map(|&(i, a)| a * deriv[i]).sum();
            acc[k] += mu * s;
        }
        for &(i, _) in excess {
            deriv[i] = 0.0;
        }
    });
    Ok(tree
        .nodes()
        .iter()
        .zip(acc)
        .map(|(n, a)| n.item.reward - 2.0 / iota * a / n.prob)
        .collect())
}
