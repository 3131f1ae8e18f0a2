//! Evolving surface finite elements with linearly implicit BDF time stepping for
//! generalized mean curvature flows `v = -V(H) nu` of closed surfaces in R^3.

pub mod assembly;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod flow;
pub mod init;
pub mod mesh;
pub mod stepper;

pub use error::{Error, Result};
