//! Virtual nonholonomic constraints for the acrobot: models, constraint
//! enforcement, constrained dynamics, energy analysis and regulation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod integrator;
pub mod mechanics;
pub mod models;
pub mod simulation;
pub mod scenario;
pub mod supervisor;
pub mod transforms;
pub mod vnhc;

pub use error::{Error, Result};
