//! The `SIM` + `ORACLE` access model.

use rand::Rng;

use super::{Block, InstanceSpec, Item, Observation, Prefix, Readout, Trajectory};
use crate::keyed::DrawKey;
use crate::{Error, Result};

/// Black-box access to the information process.
///
/// `complete` is `SIM`: a draw of the remaining trajectory from the
/// conditional law given the prefix, addressed by an explicit [`DrawKey`] so
/// that the same key always yields the same trajectory. `item` and `readout`
/// are `ORACLE`.
pub trait Simulator: Send + Sync {
    fn spec(&self) -> &InstanceSpec;

    /// Dimension `D` of one observation.
    fn dim(&self) -> usize;

    /// Draw a complete trajectory whose length-`t` prefix is `prefix`.
    /// The empty prefix draws from the unconditional law.
    fn complete(&self, prefix: &Prefix, key: &DrawKey) -> Result<Trajectory>;

    /// Reward and r.c.v. revealed at `prefix` (non-empty).
    fn item(&self, prefix: &Prefix) -> Result<Item>;

    /// All rewards and r.c.v.s along a complete trajectory.
    fn readout(&self, trajectory: &Trajectory) -> Result<Readout> {
        let items = (1..=trajectory.horizon())
            .map(|t| self.item(&trajectory.prefix(t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Readout::new(items))
    }

    /// Online-node block lookup. `None` for processes without block structure
    /// and for periods that hold no realized edge.
    fn block(&self, _prefix: &Prefix) -> Result<Option<Block>> {
        Ok(None)
    }
}

/// `SIM(S)` with the contract checks: length in `[0, T]`, result extends `S`.
pub fn simulate_completion<S: Simulator + ?Sized>(sim: &S, prefix: &Prefix, key: &DrawKey) -> Result<Trajectory> {
    let horizon = sim.spec().horizon;
    if prefix.len() > horizon {
        return Err(Error::Support(format!("prefix of length {} exceeds horizon {horizon}", prefix.len())));
    }
    if prefix.dim() != sim.dim() {
        return Err(Error::Support(format!("prefix dimension {} != process dimension {}", prefix.dim(), sim.dim())));
    }
    let traj = sim.complete(prefix, key)?;
    if traj.horizon() != horizon || !prefix.is_prefix_of(traj.as_prefix()) {
        return Err(Error::Internal("simulator returned a trajectory that does not extend its prefix".into()));
    }
    Ok(traj)
}

/// A process with finite support given by its one-step conditional laws.
///
/// Every generator in this crate is a `FiniteProcess`; wrapping it in a
/// [`ProcessSimulator`] gives the black-box simulator, and
/// [`super::ExplicitScenarioTree::enumerate`] gives the explicit tree.
pub trait FiniteProcess: Send + Sync {
    fn spec(&self) -> &InstanceSpec;

    fn dim(&self) -> usize;

    /// The law of `M_{t+1}` given `M_[t] = prefix`: `(probability, observation)`
    /// pairs with positive probabilities summing to one. Empty prefix gives the
    /// law of `M_1`.
    fn outcomes(&self, prefix: &Prefix) -> Result<Vec<(f64, Observation)>>;

    fn item(&self, prefix: &Prefix) -> Result<Item>;

    fn block(&self, _prefix: &Prefix) -> Result<Option<Block>> {
        Ok(None)
    }
}

/// Draw one outcome index from `probs` with a uniform `u ∈ [0, 1)`.
pub(crate) fn pick(probs: impl IntoIterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, p) in probs.into_iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = j;
        if u < acc {
            return j;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    last
}

/// Black-box simulator over a [`FiniteProcess`].
#[derive(Clone, Debug)]
pub struct ProcessSimulator<P> {
    process: P,
    check_support: bool,
}

impl<P: FiniteProcess> ProcessSimulator<P> {
    pub fn new(process: P) -> Self {
        Self { process, check_support: true }
    }

    /// Skip the per-call support check of the conditioning prefix.
    pub fn without_support_check(mut self) -> Self {
        self.check_support = false;
        self
    }

    pub fn process(&self) -> &P {
        &self.process
    }

    fn verify_support(&self, prefix: &Prefix) -> Result<()> {
        let mut cur = Prefix::empty(self.process.dim());
        for obs in prefix.observations() {
            let outs = self.process.outcomes(&cur)?;
            let hit = outs.iter().any(|(p, o)| *p > 0.0 && o.len() == obs.len() && o.iter().zip(obs).all(|(a, b)| a.to_bits() == b.to_bits()));
            if !hit {
                return Err(Error::Support(format!("{prefix} (period {} unreachable)", cur.len() + 1)));
            }
            cur = cur.extend(obs);
        }
        Ok(())
    }
}

impl<P: FiniteProcess> Simulator for ProcessSimulator<P> {
    fn spec(&self) -> &InstanceSpec {
        self.process.spec()
    }

    fn dim(&self) -> usize {
        self.process.dim()
    }

    fn complete(&self, prefix: &Prefix, key: &DrawKey) -> Result<Trajectory> {
        if self.check_support {
            self.verify_support(prefix)?;
        }
        let horizon = self.process.spec().horizon;
        let mut rng = key.rng();
        let mut data = prefix.values().to_vec();
        let mut cur = prefix.clone();
        while cur.len() < horizon {
            let outs = self.process.outcomes(&cur)?;
            if outs.is_empty() {
                return Err(Error::Instance(format!("process has no continuation after {cur}")));
            }
            let j = pick(outs.iter().map(|(p, _)| *p), rng.random::<f64>());
            data.extend_from_slice(&outs[j].1);
            cur = Prefix::from_flat(self.process.dim(), data.clone());
        }
        Trajectory::new(cur, horizon).ok_or_else(|| Error::Internal("completion has wrong length".into()))
    }

    fn item(&self, prefix: &Prefix) -> Result<Item> {
        let item = self.process.item(prefix)?;
        self.process.spec().check_item(&item)?;
        Ok(item)
    }

    fn block(&self, prefix: &Prefix) -> Result<Option<Block>> {
        self.process.block(prefix)
    }
}
