//! Kernels for overlaying LTE small cells on a sectorised GSM macro network
//! that keeps a few punctured PRBs for its own users.
//!
//! - [`geometry`]: hexagonal layout, guard radii and GSM link geometry.
//! - [`radio`]: path loss, antenna pattern, fading and noise.
//! - [`analysis`]: PPP interference Laplace transforms, LTE rates, GSM outage.
//! - [`simulator`]: per-drop Monte Carlo kernels and their sequential drivers.
//! - [`plan`]: carrier grid, PRB puncturing, cell-ID restriction, power rule.
//!
//! The crate is `no_std` with `alloc`. All float math goes through `libm`.

#![cfg_attr(not(test), no_std)]
// `ensure!` writes `!(x >= y)` so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
mod error;
pub mod geometry;
pub mod math;
pub mod plan;
pub mod quadrature;
pub mod radio;
pub mod simulator;

pub use error::{Error, QuadratureFailure, Result};
pub use quadrature::QuadratureSpec;
