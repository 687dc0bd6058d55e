//! Simulation and verification toolkit for the 1-D diffusion-aggregation
//! equation `u_t + 2b (u_x u)_x = a u_xx` and the stochastic interacting
//! particle system it approximates.

// `!(x > 0.0)` is the NaN-rejecting form used in every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod macro_solver;
pub mod output;
pub mod particle;
pub mod rng;
pub mod runner;
pub mod sampling;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::{Grid, GridDensity};
pub use kernel::KernelSpec;
pub use sampling::{BarenblattComponent, InitialDensity};
