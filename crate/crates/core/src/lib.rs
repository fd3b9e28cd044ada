//! Laboratory for Bigtable merge compaction (BMC): a stack of files where every
//! flush pushes a new file, an optional merge collapses a top segment, and reads
//! pay for the number of files on the stack.
//!
//! The crate provides the cost model and simulator, the schedule/merge-tree
//! bijection, exact and approximate offline solvers, online policies, an adaptive
//! lower-bound adversary, seeded workloads and an experiment harness.

pub mod adversary;
pub mod bench;
pub mod error;
pub mod io;
pub mod model;
pub mod opt;
pub mod plot;
pub mod policy;
pub mod tree;
pub mod workload;

pub use error::{Error, ErrorClass, Result};
pub use model::{
    cost_of, simulate, validate_schedule, Arrival, CostModel, Instance, ReadCostFn, Schedule, SimulationTrace,
    StackSim, Validity,
};
pub use tree::{schedule_to_tree, tree_cost, tree_lower_bound, tree_to_schedule, Insertion, MergeTree};
