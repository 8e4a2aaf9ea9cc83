use super::memo::{DrawSet, MemoTable};
use super::sampling::conditional_draws;
use super::SolverConfig;
use crate::model::{InstanceSpec, Item, Prefix, Simulator};
use crate::penalty::huber_deriv;
use crate::{Error, Result};

/// `Ĝ(Y)_S` from a draw set:
///
/// ```text
/// Z(S) − 2/ι Σ_{i∈a⁺(S)} a_i(S) η₁⁻¹ Σ_{S'} φ'_θ((T/η₂) Σ_{t∈ℵ∩𝒯_i(S')} a_i(S'^t) Y(S'^t) − b_i)
/// ```
///
/// `eval` supplies `Y`, which must lie in `[−1, 2]`. Summation order is
/// fixed (resources ascending, draws in order, periods ascending) so that
/// every caller gets bit-identical results.
pub fn gradient_from_draws(
    item: &Item,
    draws: &DrawSet,
    spec: &InstanceSpec,
    config: &SolverConfig,
    mut eval: impl FnMut(&Prefix) -> Result<f64>,
) -> Result<f64> {
    if item.consumption.is_empty() {
        return Ok(item.reward);
    }
    let scale = spec.horizon as f64 / config.eta2 as f64;
    let eta1 = draws.draws.len() as f64;
    let mut penalty = 0.0;
    for &(i, a_s) in &item.consumption {
        let mut sum = 0.0;
        for d in &draws.draws {
            let mut load = 0.0;
            for (_, p, it) in &d.sampled {
                let a = it.consumption_of(i);
                if a != 0.0 {
                    let y = eval(p)?;
                    if !(-1.0..=2.0).contains(&y) {
                        return Err(Error::Contract(format!("extrapolated value {y} at {p} outside [−1, 2]")));
                    }
                    load += a * y;
                }
            }
            sum += huber_deriv(scale * load - spec.b[i], config.theta);
        }
        penalty += a_s * (sum / eta1);
    }
    Ok(item.reward - 2.0 / spec.iota * penalty)
}

/// `Ĝ^k(Y)_S` for the process behind `sim`, drawing (or reusing) `𝓢^{S,k}`.
pub fn stochastic_grad_component(
    eval: impl FnMut(&Prefix) -> Result<f64>,
    sim: &dyn Simulator,
    memo: &mut MemoTable,
    prefix: &Prefix,
    k: usize,
    config: &SolverConfig,
) -> Result<f64> {
    let item = sim.item(prefix)?;
    memo.stats.oracle_calls += 1;
    let draws = conditional_draws(sim, memo, prefix, k, config)?;
    gradient_from_draws(&item, &draws, sim.spec(), config, eval)
}
