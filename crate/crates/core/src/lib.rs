//! Fault-tolerant and fully dynamic depth-first search trees.

pub mod apps;
pub mod bench;
pub mod graph;
pub mod maintainer;
pub mod oracle;
pub mod partition;
pub mod query;
pub mod rebuild;
pub mod tree;

pub use graph::{EdgeId, Graph, GraphError, Update, UpdateBatch, Vertex, ROOT};
pub use maintainer::{Config, Maintainer, Mode, Schedule};
pub use query::{Hit, QueryError, QueryStructure};
pub use rebuild::{apply_single_update, rebuild_batch, RebuildOptions, RebuildTrace};
pub use tree::{build_tree, DfsTree, TreeError, TreePath, VisitOrder};
