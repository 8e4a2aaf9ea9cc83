//! Instances, realizations and the simulator contract.

pub mod encode;
pub mod generate;
pub mod instance;
pub mod io;
pub mod prefix;
pub mod simulator;
pub mod tree;

pub use instance::{Block, InstanceSpec, Item, Readout, Structure};
pub use io::{Family, Instance, InstanceFile};
pub use prefix::{Observation, Prefix, Trajectory};
pub use simulator::{simulate_completion, FiniteProcess, ProcessSimulator, Simulator};
pub use tree::{
    derive_structure_constants, tree_as_simulator, ExplicitScenarioTree, NodeRecord, NodeSpec, StructureConstants,
    TreeNode,
};
