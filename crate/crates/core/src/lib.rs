//! Graph edit distance estimation under arbitrary node-edit costs.
//!
//! Two labeled graphs are padded to a common order with isolated dummy
//! nodes, and the edit distance under a node mapping is written as
//! `½‖ÃP − PB̃‖²_F + tr(PᵀD)` over permutation matrices `P`. The solver
//! relaxes `P` to the doubly-stochastic polytope, pushes it back towards a
//! permutation with the `λ·tr(Pᵀ(J − P))` regularizer, and rounds with an
//! exact linear assignment after every outer round. The returned distance
//! is always realized by an explicit node mapping, so it is an upper bound
//! on the true distance and comes with an edit path.
//!
//! Modules:
//! - [`graph`]: labeled graphs, padding, adjacency, JSON I/O.
//! - [`cost`]: edit-cost models and the node-cost matrix.
//! - [`kernel`]: relaxed objective, gradient, relabeling, spectral bound.
//! - [`assignment`]: permutations and the Hungarian solver.
//! - [`solver`]: the modified Adam outer/inner loop.
//! - [`edit_path`]: exact accounting under a mapping and the brute-force oracle.
//! - [`bench`]: synthetic corpora and MAE/SI reporting.

pub mod assignment;
pub mod bench;
pub mod cost;
pub mod edit_path;
mod error;
pub mod graph;
pub mod kernel;
pub mod solver;
pub mod spectral;

pub use assignment::{round_to_permutation, solve_assignment, Permutation, Sense};
pub use cost::{build_cost_matrix, BuiltinCost, CostMatrix, CostModel};
pub use edit_path::{exact_ged, extract_edit_path, ged_under_mapping, EditOp, EditPath, ExactResult};
pub use error::{Error, Result};
pub use graph::{pad_pair, AdjacencyMatrix, GraphPair, LabeledGraph, DUMMY_LABEL};
pub use kernel::{ObjectiveParams, ScaledPair};
pub use solver::{estimate_ged, m_adam, SolveReport, SolverConfig};

/// Dense row-major-agnostic real matrix used throughout the numerical core.
pub type Matrix = nalgebra::DMatrix<f64>;
