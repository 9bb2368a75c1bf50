//! Derivative-free minimization with the stochastic three points method and its
//! heavy-ball momentum variant, including an importance-sampling coordinate version.

pub mod diagnostics;
pub mod directions;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod schedules;

pub use error::{Error, Result};
