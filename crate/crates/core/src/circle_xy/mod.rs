//! XY chains on the circle: the potential family `U(ς)`, its Gibbs
//! marginals, sign scheduling and zero-temperature limits.

mod bump;
mod calibrate;
mod density;
mod laplace;
mod potential;
mod schedule;
mod signs;

pub use bump::{bump_on_interval, master_bump, master_bump_cr_norm};
pub use calibrate::calibrate_desk;
pub use density::{
    interval_mass, marginal_density, marginal_density_with, verify_xy_statement, window_mass,
    MarginalDensity, XyVerdict, DEFAULT_TOLERANCE,
};
pub use laplace::{critical_points, laplace_limit, LaplaceAtom, MAX_ORDER};
pub use potential::{
    build_u, family_modulus, wrap, BumpTerm, CircleFunction, CircleInterval, CirclePotential, Sign,
    SignSequence, TrigPolynomial,
};
pub use schedule::{
    default_desk_halfwidths, geometric_halfwidths, interval_system, m_set_inclusion_holds, Annulus,
    IntervalSystem, Schedule, ScheduleKind,
};
pub use signs::schedule_signs;
