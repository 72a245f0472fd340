//! Separations, tangles, S-trees, brambles and tree-decompositions of finite graphs.

pub mod bramble;
pub mod cert;
pub mod cli;
pub mod duality;
pub mod error;
pub mod extend;
pub mod family;
pub mod flow;
pub mod graph;
pub mod limits;
pub mod orientation;
pub mod robust;
pub mod search;
pub mod separation;
pub mod star;
pub mod stree;
pub mod system;
pub mod td;
pub mod tot;
pub mod treewidth;
pub mod vset;

pub use error::{Error, Result};
pub use graph::Graph;
pub use separation::Separation;
pub use system::SeparationSystem;
pub use vset::VertexSet;
