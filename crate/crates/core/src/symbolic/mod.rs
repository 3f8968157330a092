//! Finite-alphabet lattice systems on `N_0`: subshifts of finite type,
//! distance potentials, equilibrium states from transfer matrices, and the
//! sensitive family `φ(ς)`.

mod calibrate;
mod equilibrium;
mod ladder;
mod orbits;
mod potential;
mod sft;

pub use orbits::{
    fixed_point_ladder, marginal_entropy, marginal_entropy_argmax, maximizing_orbit_check, MarginalEntropy, OrbitReport};
pub use calibrate::*;
pub use equilibrium::{
    clopen_mass, equilibrium_state, pressure, transfer_matrix, u_minus, u_plus, CylinderMeasure, PERRON_TOLERANCE,
};
pub use ladder::{entropy_ladder, Ladder, LadderSpec};
pub use potential::{
    build_phi, dist_to_union, truncate_depth, y_set, CombinedPotential, Distance, DistancePotential,
    LocallyConstantPotential,
};
pub use sft::{
    all_words, fibonacci_oracle, fibonacci_word, index_word, runlength_sft, sft_entropy, sft_word_approximants,
    word_index, Extender, Presentation, Sft, Word,
};
