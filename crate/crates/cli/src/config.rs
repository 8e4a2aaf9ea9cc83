//! Experiment and generator configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stochpack::engine::{theta_default, Momentum, SolverConfig};
use stochpack::model::io::GeneratorSpec;
use stochpack::model::{Family, Instance, InstanceFile, Structure};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
pub enum PolicyName {
    #[serde(rename = "lp")]
    Lp,
    #[serde(rename = "nrm")]
    Nrm,
    #[serde(rename = "is")]
    Is,
    #[serde(rename = "mwmlp")]
    Mwmlp,
    #[serde(rename = "mmo-greedy")]
    MmoGreedy,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Lp => "lp",
            PolicyName::Nrm => "nrm",
            PolicyName::Is => "is",
            PolicyName::Mwmlp => "mwmlp",
            PolicyName::MmoGreedy => "mmo-greedy",
        }
    }
}

/// An instance file, or a generator to instantiate in place.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path {
        path: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
    Generator {
        generator: GeneratorSpec,
        #[serde(default)]
        explicit: bool,
        #[serde(default)]
        structure: Option<Structure>,
        #[serde(default)]
        name: Option<String>,
    },
}

/// How to build the gradient engine's configuration for an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolverSpec {
    /// Theory constants from the instance's `L`, `ι`, `U`, `W`.
    Theory {
        epsilon: f64,
        #[serde(default = "unaccelerated")]
        momentum: Momentum,
        #[serde(default)]
        theta: Option<f64>,
    },
    /// Small explicit `K`, `η₁`, `η₂` (`η₂` defaults to `T`).
    Practical {
        epsilon: f64,
        #[serde(default)]
        theta: Option<f64>,
        alpha: f64,
        #[serde(default = "unaccelerated")]
        momentum: Momentum,
        #[serde(rename = "K")]
        k: usize,
        eta1: usize,
        #[serde(default)]
        eta2: Option<usize>,
    },
}

fn unaccelerated() -> Momentum {
    Momentum::Unaccelerated
}

impl SolverSpec {
    pub fn epsilon(&self) -> f64 {
        match self {
            SolverSpec::Theory { epsilon, .. } | SolverSpec::Practical { epsilon, .. } => *epsilon,
        }
    }

    pub fn build(&self, inst: &Instance, seed: u64) -> stochpack::Result<SolverConfig> {
        let spec = &inst.spec;
        let c = match *self {
            SolverSpec::Theory { epsilon, momentum, theta } => SolverConfig::theory(spec, momentum, epsilon, theta, seed)?,
            SolverSpec::Practical { epsilon, theta, alpha, momentum, k, eta1, eta2 } => {
                let theta = match theta {
                    Some(t) => t,
                    None => theta_default(epsilon, spec.horizon, spec.iota, spec.v())?,
                };
                SolverConfig::practical(epsilon, theta, alpha, momentum, k, eta1, eta2.unwrap_or(spec.horizon), seed)?
            }
        };
        c.validate(spec)?;
        Ok(c)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instances: Vec<InstanceSource>,
    pub policies: Vec<PolicyName>,
    pub solver: SolverSpec,
    pub episodes: usize,
    pub seed: u64,
    /// Episodes per replicate group (one solver seed and memo per group).
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    /// Degree bound for the matching policies; read from the generator when absent.
    #[serde(default)]
    pub delta: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_group_size() -> usize {
    1000
}

/// The input of `gen`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub schema_version: u32,
    pub generator: GeneratorSpec,
    /// Enumerate the process into an explicit tree.
    #[serde(default)]
    pub explicit: bool,
    #[serde(default)]
    pub structure: Option<Structure>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A loaded instance with what the runner needs to know about its origin.
pub struct LoadedInstance {
    pub name: String,
    pub inst: Instance,
    pub generator: Option<GeneratorSpec>,
}

impl LoadedInstance {
    /// `Δ` of a matching generator.
    pub fn delta(&self) -> Option<usize> {
        match &self.generator {
            Some(GeneratorSpec::Mwm(g)) => Some(g.delta),
            Some(GeneratorSpec::Mmo(g)) => Some(g.delta),
            Some(GeneratorSpec::Is(g)) => Some(g.delta),
            _ => None,
        }
    }

    /// The node count `n` the graph guarantees are stated in.
    pub fn graph_size(&self) -> Option<usize> {
        match &self.generator {
            Some(GeneratorSpec::Is(g)) => Some(g.sides.len()),
            Some(GeneratorSpec::Mwm(g)) => Some(g.n_nodes),
            Some(GeneratorSpec::Mmo(g)) => Some(g.n_offline + g.neighbors.len()),
            _ => None,
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut c: Self = read_json(path)?;
        if c.schema_version != CONFIG_SCHEMA_VERSION {
            bail!("unsupported config schema_version {} (expected {CONFIG_SCHEMA_VERSION})", c.schema_version);
        }
        // Relative paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for src in &mut c.instances {
            if let InstanceSource::Path { path, .. } = src {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if let Some(out) = &mut c.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.instances.is_empty() || self.policies.is_empty() {
            bail!("config needs at least one instance and one policy");
        }
        if self.episodes == 0 || self.group_size == 0 {
            bail!("episodes and group_size must be positive");
        }
        for src in &self.instances {
            if let InstanceSource::Path { path, .. } = src {
                if !path.is_file() {
                    bail!("instance file {} does not exist", path.display());
                }
            }
        }
        Ok(())
    }

    pub fn load_instances(&self) -> anyhow::Result<Vec<LoadedInstance>> {
        self.instances.iter().enumerate().map(|(i, src)| load(src, i)).collect()
    }
}

fn load(src: &InstanceSource, index: usize) -> anyhow::Result<LoadedInstance> {
    match src {
        InstanceSource::Path { path, name } => {
            let file = InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))?;
            let inst = file.load().with_context(|| format!("loading {}", path.display()))?;
            let name = name.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format!("instance{index}"))
            });
            Ok(LoadedInstance { name, inst, generator: file.generator })
        }
        InstanceSource::Generator { generator, explicit, structure, name } => {
            let inst = Instance::from_generator(generator, *explicit)?.with_structure(*structure);
            let name = name.clone().unwrap_or_else(|| format!("instance{index}"));
            Ok(LoadedInstance { name, inst, generator: Some(generator.clone()) })
        }
    }
}

/// Reject policy/instance pairs the policy is not defined for.
pub fn check_compatible(policy: PolicyName, li: &LoadedInstance, delta: Option<usize>) -> anyhow::Result<()> {
    let family = li.inst.family;
    let ok = match policy {
        PolicyName::Lp => true,
        PolicyName::Nrm => matches!(family, Family::Nrm | Family::Generic),
        PolicyName::Is => family == Family::IndependentSet && li.inst.sides.is_some(),
        PolicyName::Mwmlp => family == Family::Matching,
        // Greedy needs block windows, which only the generative process exposes.
        PolicyName::MmoGreedy => family == Family::OnlineMatching && li.inst.tree.is_none(),
    };
    if !ok {
        bail!("policy {} is not compatible with instance {} ({family:?}{})", policy.as_str(), li.name, if li.inst.tree.is_some() {
            ", explicit"
        } else {
            ", generative"
        });
    }
    if matches!(policy, PolicyName::Mwmlp | PolicyName::MmoGreedy) && delta.or(li.delta()).is_none() {
        bail!("policy {} needs the degree bound delta", policy.as_str());
    }
    Ok(())
}
