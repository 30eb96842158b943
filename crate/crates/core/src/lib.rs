//! Periodic waves of the fractional KdV and NLS equations: construction by
//! constrained energy minimization, linear stability analysis and
//! pseudospectral time evolution.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
mod dense;
pub mod analysis;
pub mod curves;
pub mod error;
pub mod evolution;
pub mod io;
pub mod profile;
pub mod spectral;

pub use error::{Error, Result};
pub use profile::{SolverOptions, StepRule, WaveProfile};
pub use spectral::{make_grid, ComplexField, Grid, RealField, SobolevIndex};
