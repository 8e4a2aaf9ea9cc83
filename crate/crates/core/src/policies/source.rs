use std::sync::Arc;

use super::EpisodeContext;
use crate::engine::{decide_pen, theta_default, SolverConfig};
use crate::model::{InstanceSpec, Prefix, Simulator};
use crate::penalty::SmoothingParam;
use crate::Result;

/// Where a policy's fractional values come from.
pub trait FractionalSource: Send + Sync {
    fn fractional(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix) -> Result<f64>;
}

/// `A_pen`: the on-the-fly gradient decision, sharing the episode's memo.
#[derive(Clone, Debug)]
pub struct PenSource {
    pub config: SolverConfig,
}

impl PenSource {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }

    /// The matching LP reduction: `ε' = 2ε/Δ`, with `θ` recomputed from `ε'`.
    pub fn for_matching(config: &SolverConfig, delta: usize, spec: &InstanceSpec) -> Result<Self> {
        let epsilon = 2.0 * config.epsilon / delta as f64;
        let theta = theta_default(epsilon, spec.horizon, spec.iota, spec.v())?;
        Ok(Self { config: SolverConfig { epsilon, theta: SmoothingParam::new(theta)?, ..config.clone() } })
    }
}

impl FractionalSource for PenSource {
    fn fractional(&self, ctx: &mut EpisodeContext, sim: &dyn Simulator, prefix: &Prefix) -> Result<f64> {
        decide_pen(sim, &mut ctx.memo, prefix, &self.config)
    }
}

/// Fractional values from a plain function of the prefix.
#[derive(Clone)]
pub struct FnSource(pub Arc<dyn Fn(&Prefix) -> f64 + Send + Sync>);

impl FnSource {
    pub fn new(f: impl Fn(&Prefix) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(x: f64) -> Self {
        Self::new(move |_| x)
    }
}

impl FractionalSource for FnSource {
    fn fractional(&self, _ctx: &mut EpisodeContext, _sim: &dyn Simulator, prefix: &Prefix) -> Result<f64> {
        Ok(self.0(prefix))
    }
}
