//! Analytical throughput model under the energy decoupling approximation.

mod fixed_point;
mod queue;
mod throughput;

pub use fixed_point::{
    psi, solve_fixed_point, wet_probability, FixedPoint, FixedPointMethod, DEFAULT_MAX_ITERS,
    DEFAULT_TOL, MAX_WET_PROB,
};
pub use queue::{
    balance_matrix, outage_probability, stationary_matrix, stationary_recursive, ChainParams,
    StationaryDistribution,
};
pub use throughput::{
    analyze, benchmark_unlimited, slot_probabilities, throughput, Analysis, SlotProbabilities,
    ThroughputReport,
};
