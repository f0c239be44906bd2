//! k-priority graph sparsification.
//!
//! Every vertex of a weighted undirected graph carries a priority in
//! `0..=k`. A solution assigns each kept edge an integer rate so that for
//! every level `i`, the edges of rate at least `i` sparsify the vertices of
//! priority at least `i`: spanning them as a tree, or preserving their
//! pairwise distances up to a multiplicative or additive allowance. Rates
//! nest the levels into a chain H_k ⊆ ... ⊆ H_1, and an edge's cost scales
//! with its rate, so high rates are only worth paying for where high
//! priorities demand them.
//!
//! The [`pipeline`] module implements the approximation scheme: round
//! priorities up to powers of two, split the terminals per level with a
//! [`pipeline::PartitionStrategy`], solve each active level independently
//! with a [`solvers::SolverKind`], and merge the results top-down. The
//! total weight stays within 4ρ of optimal for a ρ-approximate level
//! solver, at most one solver call per active level. The [`oracle`] module
//! checks exactly that on small instances, and [`generate`] plus [`format`]
//! supply the instances and the on-disk formats.

pub mod format;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod solvers;
pub mod validity;
pub mod weight;

pub use format::{InstanceFile, SolutionFile};
pub use graph::{EdgeId, PriorityGraph, Subgraph, VertexId};
pub use oracle::{
    certify_ratio, exact_k_priority, exact_single_priority, Certification, OracleBudget, Verdict,
};
pub use pipeline::{
    merge, partition, round_up_priorities, run, run_with_options, PartitionStrategy,
    Partitioning, RunOptions, RunReport,
};
pub use solvers::SolverKind;
pub use validity::{
    constraint_count, is_valid_k_priority, is_valid_single, solution_weight, ConstraintFamily,
    KPrioritySolution, ValidityReport,
};
pub use weight::Weight;
