//! Instance files.
//!
//! ```json
//! {"schema_version": 1, "T": 2, "m": 1, "b": [1.0], "L": 1, "iota": 1.0,
//!  "kind": "explicit",
//!  "tree": {"nodes": [{"prefix_id": 0, "parent_id": null, "prob": 1.0, "Z": 0.5, "a": [[0, 1.0]]}, ...]}}
//! ```
//!
//! Generative files carry a `generator` object tagged by `type`
//! (`nrm`, `random_tree`, `is`, `mwm`, `mmo`) instead of a tree.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::encode::{IsGraph, IsProcess, MmoGraph, MmoProcess, MwmGraph, MwmProcess, Side};
use super::generate::{random_tree, NrmParams, NrmProcess, RandomTreeParams};
use super::tree::DEFAULT_NODE_CAP;
use super::{ExplicitScenarioTree, FiniteProcess, InstanceSpec, NodeRecord, ProcessSimulator, Simulator, Structure};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Explicit,
    Generative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Nrm(NrmParams),
    RandomTree(RandomTreeParams),
    Is(IsGraph),
    Mwm(MwmGraph),
    Mmo(MmoGraph),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecords {
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub m: usize,
    pub b: Vec<f64>,
    #[serde(rename = "L")]
    pub l: usize,
    pub iota: f64,
    pub kind: InstanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeRecords>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Structure>,
}

/// Which application an instance encodes; decides the compatible policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Generic,
    Nrm,
    IndependentSet,
    Matching,
    OnlineMatching,
}

/// A loaded instance: its spec, a simulator handle, the explicit tree when
/// there is one, and the family-specific extras the policies need.
#[derive(Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub sim: Arc<dyn Simulator>,
    pub tree: Option<Arc<ExplicitScenarioTree>>,
    pub family: Family,
    /// Partite of node `t` for independent-set instances.
    pub sides: Option<Vec<Side>>,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("spec", &self.spec)
            .field("explicit", &self.tree.is_some())
            .field("family", &self.family)
            .finish()
    }
}

impl Instance {
    pub fn from_tree(tree: ExplicitScenarioTree) -> Self {
        let tree = Arc::new(tree);
        Self { spec: tree.spec().clone(), sim: tree.clone(), tree: Some(tree), family: Family::Generic, sides: None }
    }

    fn from_process<P: FiniteProcess + 'static>(process: P, explicit: bool, family: Family) -> Result<Self> {
        if explicit {
            let tree = ExplicitScenarioTree::enumerate(&process, DEFAULT_NODE_CAP)?;
            return Ok(Self { family, ..Self::from_tree(tree) });
        }
        let spec = process.spec().clone();
        Ok(Self { spec, sim: Arc::new(ProcessSimulator::new(process)), tree: None, family, sides: None })
    }

    /// Instantiate a generator, enumerating it when `explicit`.
    pub fn from_generator(gen: &GeneratorSpec, explicit: bool) -> Result<Self> {
        match gen {
            GeneratorSpec::Nrm(p) => Self::from_process(NrmProcess::new(p)?, explicit, Family::Nrm),
            GeneratorSpec::RandomTree(p) => Ok(Self::from_tree(random_tree(p)?)),
            GeneratorSpec::Is(g) => {
                let mut inst = Self::from_process(IsProcess::new(g.clone())?, explicit, Family::IndependentSet)?;
                inst.sides = Some(g.sides.clone());
                Ok(inst)
            }
            GeneratorSpec::Mwm(g) => Self::from_process(MwmProcess::new(g.clone())?, explicit, Family::Matching),
            GeneratorSpec::Mmo(g) => Self::from_process(MmoProcess::new(g.clone())?, explicit, Family::OnlineMatching),
        }
    }

    pub fn with_structure(mut self, structure: Option<Structure>) -> Self {
        if let Some(s) = structure {
            self.spec.structure = Some(s);
        }
        self
    }

    /// Serialize; explicit instances carry their tree, generative ones
    /// need the generator that produced them.
    pub fn to_file(&self, generator: Option<&GeneratorSpec>) -> Result<InstanceFile> {
        let kind = if self.tree.is_some() { InstanceKind::Explicit } else { InstanceKind::Generative };
        if kind == InstanceKind::Generative && generator.is_none() {
            return Err(Error::Parameter("a generative instance file needs its generator".into()));
        }
        Ok(InstanceFile {
            schema_version: SCHEMA_VERSION,
            horizon: self.spec.horizon,
            m: self.spec.m,
            b: self.spec.b.clone(),
            l: self.spec.l,
            iota: self.spec.iota,
            kind,
            tree: self.tree.as_ref().map(|t| TreeRecords { nodes: t.to_records() }),
            generator: generator.cloned(),
            structure: self.spec.structure,
        })
    }
}

impl InstanceFile {
    fn spec(&self) -> Result<InstanceSpec> {
        let mut spec = InstanceSpec::new(self.horizon, self.b.clone(), self.l, self.iota)?;
        if spec.m != self.m {
            return Err(Error::Instance(format!("m = {} but {} budgets listed", self.m, self.b.len())));
        }
        spec.structure = self.structure;
        Ok(spec)
    }

    pub fn load(&self) -> Result<Instance> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Instance(format!("unsupported schema_version {}", self.schema_version)));
        }
        let spec = self.spec()?;
        let inst = match (self.kind, &self.tree, &self.generator) {
            (InstanceKind::Explicit, Some(tree), gen) => {
                let mut inst = Instance::from_tree(ExplicitScenarioTree::from_records(spec.clone(), &tree.nodes)?);
                // The generator, when present, only tells the family apart.
                if let Some(g) = gen {
                    let meta = Instance::from_generator(g, false)?;
                    inst.family = meta.family;
                    inst.sides = meta.sides;
                }
                inst
            }
            (InstanceKind::Explicit, None, Some(g)) => Instance::from_generator(g, true)?,
            (InstanceKind::Generative, _, Some(g)) => Instance::from_generator(g, false)?,
            (InstanceKind::Explicit, None, None) => return Err(Error::Instance("explicit instance without tree or generator".into())),
            (InstanceKind::Generative, _, None) => return Err(Error::Instance("generative instance without generator".into())),
        };
        let inst = inst.with_structure(self.structure);
        let mut got = inst.spec.clone();
        got.structure = spec.structure;
        if got != spec {
            return Err(Error::Instance(format!(
                "instance header (T={}, m={}, L={}, iota={}) disagrees with its content (T={}, m={}, L={}, iota={})",
                spec.horizon, spec.m, spec.l, spec.iota, got.horizon, got.m, got.l, got.iota
            )));
        }
        Ok(inst)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
