//! Comparison controllers for the reaching benchmark: a constrained
//! third-order sliding mode law and a numerically optimal bang-off-bang
//! steering profile.

mod extended;
mod hosm;
mod optimal;

pub use extended::{reach_distance_closed_loop, ExtendedState, ReachOutcome, ReachSample};
pub use hosm::{hosm_control, switching_surface, HosmParams};
pub use optimal::{
    dp_reach_distance, optimal_reach, optimal_reach_with, DpOptions, OptimalReach,
    OptimalReachSpec, SolverOptions,
};
