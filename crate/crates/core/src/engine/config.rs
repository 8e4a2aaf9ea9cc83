use serde::{Deserialize, Serialize};

use super::params::theory_params;
use crate::model::InstanceSpec;
use crate::penalty::SmoothingParam;
use crate::{Error, Result};

/// Momentum schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Momentum {
    /// `β_k = 0`: projected stochastic gradient ascent.
    Unaccelerated,
    /// `β_0 = 0`, `β_k = (k − 1)/(k + 2)`.
    Accelerated,
}

impl Momentum {
    pub fn beta(self, k: usize) -> f64 {
        match self {
            Momentum::Unaccelerated => 0.0,
            Momentum::Accelerated if k == 0 => 0.0,
            Momentum::Accelerated => (k as f64 - 1.0) / (k as f64 + 2.0),
        }
    }
}

/// Parameters of the gradient engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub theta: SmoothingParam,
    pub alpha: f64,
    pub momentum: Momentum,
    #[serde(rename = "K")]
    pub k: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub master_seed: u64,
    /// Allow `K`, `η₁`, `η₂` below the theory values.
    #[serde(default)]
    pub practical_override: bool,
}

impl SolverConfig {
    /// The theory configuration for `spec` (structure constants from the
    /// spec, `θ` from [`super::theta_default`] unless given).
    pub fn theory(spec: &InstanceSpec, momentum: Momentum, epsilon: f64, theta: Option<f64>, master_seed: u64) -> Result<Self> {
        let theta = match theta {
            Some(t) => t,
            None => super::theta_default(epsilon, spec.horizon, spec.iota, spec.v())?,
        };
        let p = theory_params(momentum, epsilon, spec.l, spec.iota, theta, spec.horizon, spec.u(), spec.w())?;
        let narrow = |v: u64, what: &str| {
            usize::try_from(v).map_err(|_| Error::Parameter(format!("{what} = {v} does not fit in memory")))
        };
        Ok(Self {
            epsilon,
            theta: SmoothingParam::new(theta)?,
            alpha: p.alpha,
            momentum,
            k: narrow(p.k, "K")?,
            eta1: narrow(p.eta1, "eta1")?,
            eta2: narrow(p.eta2, "eta2")?,
            master_seed,
            practical_override: false,
        })
    }

    /// A configuration with explicit small `K`, `η₁`, `η₂`.
    #[allow(clippy::too_many_arguments)]
    pub fn practical(
        epsilon: f64,
        theta: f64,
        alpha: f64,
        momentum: Momentum,
        k: usize,
        eta1: usize,
        eta2: usize,
        master_seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            epsilon,
            theta: SmoothingParam::new(theta)?,
            alpha,
            momentum,
            k,
            eta1,
            eta2,
            master_seed,
            practical_override: true,
        })
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.momentum.beta(k)
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self { master_seed, ..self.clone() }
    }

    /// Check the basic invariants against `spec`; without the practical
    /// override, `K`, `η₁`, `η₂` must also reach the theory values.
    pub fn validate(&self, spec: &InstanceSpec) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("step size α = {} must be positive", self.alpha)));
        }
        if self.k == 0 || self.eta1 == 0 {
            return Err(Error::Parameter("K and η₁ must be at least 1".into()));
        }
        if self.eta2 == 0 || self.eta2 > spec.horizon {
            return Err(Error::Parameter(format!("η₂ = {} outside [1, T = {}]", self.eta2, spec.horizon)));
        }
        if !self.practical_override {
            let p = theory_params(
                self.momentum,
                self.epsilon,
                spec.l,
                spec.iota,
                self.theta.value(),
                spec.horizon,
                spec.u(),
                spec.w(),
            )?;
            if (self.k as u64) < p.k || (self.eta1 as u64) < p.eta1 || (self.eta2 as u64) < p.eta2 {
                return Err(Error::Parameter(format!(
                    "K = {}, η₁ = {}, η₂ = {} are below the theory values ({}, {}, {}); set practical_override to allow",
                    self.k, self.eta1, self.eta2, p.k, p.eta1, p.eta2
                )));
            }
        }
        Ok(())
    }
}
