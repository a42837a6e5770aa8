//! Competitive influence maximization on signed directed networks under
//! voter-model opinion dynamics.
//!
//! Two external controllers spread opposing opinions by continuously
//! allocating budgeted influence onto nodes; negative ties invert copied
//! opinions. The crate provides the exact steady-state evaluation, gradient
//! ascent on the budget simplex under three observability modes, synthetic
//! signed-network generation, degree-based mean-field analysis and
//! best-response game dynamics, plus the experiment runner behind the `svim`
//! command-line interface.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod graph;
pub mod meanfield;
pub mod netgen;
pub mod optimize;
pub mod sparse;

pub use dynamics::{steady_state, AllocationVector, SteadySolver, SteadyStateSolution};
pub use error::{Error, Result};
pub use graph::{SignedGraph, SignedLaplacian, Transform};
pub use netgen::Family;
pub use optimize::{gradient_ascent, ObservabilityMode, OptimizerOptions};
