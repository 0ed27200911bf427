//! Grid-based set calculus for the sets appearing in invariance principles.

mod grid;
mod invariant;
mod sets;

pub use grid::{GridSet, MAX_CELLS, MAX_GRID_DIM};
pub use invariant::{largest_invariant_subset, InvariancePruneTrace, InvarianceOptions, MAX_SWEEPS};
pub use sets::{
    e_s_set, e_set, halving_schedule, m_alpha, potential_of, qi_set, sublevel_band, w_zero_set, zero_set,
    BandOptions, MAlphaOptions, TOL_LEVEL,
};
