//! Simulation engine for autonomous bit-flip correction by engineered
//! dissipation: repetition-code Lindblad models, their propagation, and the
//! analyses used to check correction rates and convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod hilbert;
pub mod integrator;
pub mod models;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use error::{Error, Result};
