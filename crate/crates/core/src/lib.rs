//! Solver library for discrete-time stationary mean-field games under
//! infinite-horizon discounted cost.
//!
//! The crate computes mean-field equilibria by iterating the scaled
//! equilibrium operator (a Bellman-style value update paired with an
//! ergodicity pushforward), certifies the contraction conditions that
//! guarantee convergence, builds quantized and extended approximations of a
//! continuous-state game, and runs the empirical robustness studies exposed
//! by the companion CLI.

pub mod conditions;
pub mod error;
pub mod golden;
pub mod grid;
pub mod harness;
pub mod measure;
pub mod metrics;
pub mod models;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod quantizer;
pub mod table;

pub use error::{Error, Result};
pub use grid::{make_grid, quantize, StateGrid};
pub use measure::{lift_measure, project_atoms, project_measure, DiscreteMeasure};
pub use models::{
    estimate_constants, eval_cost, eval_kernel_row, perturb, DeclaredConstants, Family,
    ModelParams, ModelSpec, PerturbationKind, PerturbationSpec,
};
pub use table::{PolicyTable, ValueTable};
