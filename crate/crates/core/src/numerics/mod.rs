//! Shared numeric kernels.

pub mod dyadic;
mod log_scalar;
pub mod perron;
pub mod quadrature;

pub use dyadic::{compare, exp_neg_upper, multiply, sum_enclose, Dyadic, DyadicBound, GeometricTail, Round};
pub use log_scalar::LogScalar;
pub use perron::{perron, PerronData, SparseNonnegMatrix};
pub use quadrature::{log_integrate_exp, log_integrate_exp_over, PanelPartition};
