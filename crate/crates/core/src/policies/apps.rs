use super::feas::{feas_step, floor_policy, round_bernoulli};
use super::source::{FractionalSource, PenSource};
use super::{step, EpisodeContext, Policy};
use crate::engine::SolverConfig;
use crate::model::encode::Side;
use crate::model::{InstanceSpec, Item, Prefix, Simulator};
use crate::{Error, Result};

/// `A_lp = FEAS(A)`.
pub struct LpPolicy<S> {
    pub source: S,
}

impl<S: FractionalSource> LpPolicy<S> {
    pub fn new(source: S) -> Self {
        Self { source }
    }
}

impl LpPolicy<PenSource> {
    /// The matching LP policy: `A_lp` with `ε' = 2ε/Δ`.
    pub fn matching(config: &SolverConfig, delta: usize, spec: &InstanceSpec) -> Result<Self> {
        Ok(Self::new(PenSource::for_matching(config, delta, spec)?))
    }
}

impl<S: FractionalSource> Policy for LpPolicy<S> {
    fn name(&self) -> &str {
        "lp"
    }

    fn decide(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, item: &Item) -> Result<(f64, f64)> {
        let f = self.source.fractional(ctx, sim, prefix)?.clamp(0.0, 1.0);
        Ok((f, feas_step(&mut ctx.feas, item, f)))
    }
}

/// `A_nrm = FLOOR(FEAS(ROUND(A)))`.
pub struct NrmPolicy<S> {
    pub source: S,
}

impl<S: FractionalSource> NrmPolicy<S> {
    pub fn new(source: S) -> Self {
        Self { source }
    }
}

impl<S: FractionalSource> Policy for NrmPolicy<S> {
    fn name(&self) -> &str {
        "nrm"
    }

    fn decide(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, item: &Item) -> Result<(f64, f64)> {
        let f = self.source.fractional(ctx, sim, prefix)?.clamp(0.0, 1.0);
        let r = round_bernoulli(f, &ctx.round_key(prefix.len()));
        let y = feas_step(&mut ctx.feas, item, r);
        if y > 0.0 && y < 1.0 {
            ctx.fractional_outputs += 1;
        }
        Ok((f, floor_policy(y)))
    }
}

/// Threshold rounding of an LP policy for independent set: a left node is
/// taken iff its value exceeds the episode's shared uniform `𝒰`, a right
/// node iff it exceeds `1 − 𝒰`. The patched values of an edge's endpoints sum
/// to at most one, so both endpoints never fire together.
pub struct IsPolicy<S> {
    pub source: S,
    pub sides: Vec<Side>,
}

impl<S: FractionalSource> IsPolicy<S> {
    pub fn new(source: S, sides: Vec<Side>) -> Self {
        Self { source, sides }
    }
}

impl<S: FractionalSource> Policy for IsPolicy<S> {
    fn name(&self) -> &str {
        "is"
    }

    fn decide(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, item: &Item) -> Result<(f64, f64)> {
        let side = *self
            .sides
            .get(prefix.len() - 1)
            .ok_or_else(|| Error::Instance(format!("no partite known for period {}", prefix.len())))?;
        let f = self.source.fractional(ctx, sim, prefix)?.clamp(0.0, 1.0);
        let f = feas_step(&mut ctx.feas, item, f);
        let u = ctx.shared_uniform();
        let take = match side {
            Side::Left => f > u,
            Side::Right => f > 1.0 - u,
        };
        Ok((f, if take { 1.0 } else { 0.0 }))
    }
}

/// Greedy baseline for online-node matching.
///
/// At the first period of an online node's block it computes the patched
/// matching-LP values of every edge in the block, then takes the edge of
/// largest positive value whose offline endpoint is still free (ties to the
/// lowest offline index). Periods without a realized edge get 0.
pub struct MmoGreedyPolicy<S> {
    pub source: S,
}

impl<S: FractionalSource> MmoGreedyPolicy<S> {
    pub fn new(source: S) -> Self {
        Self { source }
    }
}

impl<S: FractionalSource> Policy for MmoGreedyPolicy<S> {
    fn name(&self) -> &str {
        "mmo-greedy"
    }

    fn decide(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, _item: &Item) -> Result<(f64, f64)> {
        let Some(block) = sim.block(prefix)? else {
            return Ok((0.0, 0.0));
        };
        let pos = prefix.len() - 1 - block.start;
        if block.prefixes.get(pos) != Some(prefix) {
            return Err(Error::Instance(format!("block lookup at {prefix} returned a foreign window")));
        }
        if !ctx.blocks.contains_key(&block.start) {
            let mut values = Vec::with_capacity(block.prefixes.len());
            for p in &block.prefixes {
                let item = sim.item(p)?;
                let f = self.source.fractional(ctx, sim, p)?.clamp(0.0, 1.0);
                values.push(feas_step(&mut ctx.feas, &item, f));
            }
            let free = |s: usize| ctx.used()[block.offline[s]] == 0.0 && ctx.used()[block.online] == 0.0;
            let mut best: Option<usize> = None;
            for s in 0..values.len() {
                if values[s] > 0.0 && free(s) {
                    best = match best {
                        Some(b) if values[b] > values[s] || (values[b] == values[s] && block.offline[b] < block.offline[s]) => Some(b),
                        _ => Some(s),
                    };
                }
            }
            let decisions = values.iter().enumerate().map(|(s, &f)| (f, if Some(s) == best { 1.0 } else { 0.0 })).collect();
            ctx.blocks.insert(block.start, decisions);
        }
        Ok(ctx.blocks[&block.start][pos])
    }
}

pub fn policy_lp(ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, config: &SolverConfig) -> Result<f64> {
    step(&LpPolicy::new(PenSource::new(config.clone())), ctx, sim, prefix)
}

pub fn policy_nrm(ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, config: &SolverConfig) -> Result<f64> {
    step(&NrmPolicy::new(PenSource::new(config.clone())), ctx, sim, prefix)
}

pub fn policy_is(
    ctx: &mut EpisodeContext,
    sim: &dyn Simulator,
    prefix: &Prefix,
    config: &SolverConfig,
    sides: &[Side],
) -> Result<f64> {
    step(&IsPolicy::new(PenSource::new(config.clone()), sides.to_vec()), ctx, sim, prefix)
}

pub fn policy_mwmlp(ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix, config: &SolverConfig, delta: usize) -> Result<f64> {
    step(&LpPolicy::matching(config, delta, sim.spec())?, ctx, sim, prefix)
}

pub fn policy_mmo_greedy(
    ctx: &mut EpisodeContext,
    sim: &dyn Simulator,
    prefix: &Prefix,
    config: &SolverConfig,
    delta: usize,
) -> Result<f64> {
    step(&MmoGreedyPolicy::new(PenSource::for_matching(config, delta, sim.spec())?), ctx, sim, prefix)
}
