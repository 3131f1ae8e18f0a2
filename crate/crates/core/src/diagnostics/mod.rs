//! Exact sphere solutions, monotone quantities, error norms and convergence rates.

mod errors;
mod exact;
mod monotone;
mod series;

pub use errors::{eoc, error_norms, ErrorPair, ErrorRecord};
pub use exact::{maximal_time, sphere_exact_state, sphere_radius};
pub use monotone::{
    hawking_mass, schulze_from_invariants, schulze_from_kappa, schulze_point, schulze_quantity,
    SchulzeValue,
};
pub use series::{monotonicity, Direction, MonotoneVerdict, TimeSeries};

use crate::stepper::State;

/// `max_j ||nu_j| - 1|`
pub fn max_normal_defect(state: &State) -> f64 {
    (0..state.num_nodes())
        .map(|j| (state.u.vector(j, 0).norm() - 1.0).abs())
        .fold(0.0, f64::max)
}
