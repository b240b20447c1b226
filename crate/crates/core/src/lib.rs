//! Numerical kernels for the planar rarefaction laboratory.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computations:
//! grids and quadrature on the cylinder `ℝ × T^{n-1}` truncated in `x₁`,
//! the 1-d viscous rarefaction profile, periodic far-field solutions,
//! the ansatz and its source term, the full multi-dimensional solver,
//! the torus-average decomposition, interpolation-inequality studies and
//! power-law rate fitting. File formats, configuration and the command line
//! live in the `rarefaction-lab` crate.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod ansatz;
pub mod decomp;
pub mod domain;
pub mod error;
pub mod fit;
pub mod flux;
pub mod imex;
pub mod ineq;
pub mod math;
pub mod periodic;
pub mod profile;
pub mod rates;
pub mod solver;
pub mod torus;
pub mod tridiag;
pub mod trig;

pub use domain::{DomainSpec, Field, Grid};
pub use error::{Error, Result};
pub use flux::{Flux, FluxSet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
