//! Structured-grid finite-volume wave propagation with pluggable Riemann
//! kernels, traversal strategies and parallel backends.
//!
//! A step fills ghost cells, solves every cell interface with a
//! [`riemann::PointwiseSolver`], then applies the first-order update. The
//! sweep writes each interface slot exactly once, so every
//! strategy/backend combination produces bitwise-identical results.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backend;
pub mod bench;
pub mod driver;
pub mod grid;
pub mod ic;
pub mod oracle;
pub mod riemann;
pub mod sweep;
pub mod verify;

pub use backend::{Backend, BackendKind};
pub use driver::{run, Simulation, SimulationConfig, StopCondition, TimestepController};
pub use grid::{BoundaryCondition, CellField, FluctuationField, GridSpec};
pub use ic::InitialCondition;
pub use riemann::{Kernel, KernelKind};
pub use sweep::TraversalStrategy;
