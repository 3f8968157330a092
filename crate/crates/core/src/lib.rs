//! Sensitive dependence of zero-temperature Gibbs measures.
//!
//! The crate is split into four layers:
//!
//! * [`numerics`]: log-domain quadrature on the circle, Perron data of sparse
//!   nonnegative matrices, and exact dyadic interval arithmetic.
//! * [`circle_xy`]: the one-dimensional XY construction, its exact marginal
//!   density and zero-temperature diagnostics.
//! * [`proof_checker`]: exact replay of the mass-inequality chains for the
//!   XY construction at its literal (astronomical) constants.
//! * [`symbolic`]: subshifts of finite type, distance potentials and
//!   equilibrium states computed from transfer matrices.

pub mod circle_xy;
pub mod error;
pub mod numerics;
pub mod proof_checker;
pub mod symbolic;

pub use error::{Error, Result};
