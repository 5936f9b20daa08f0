//! Throughput analysis and validation tools for distributed energy/information
//! scheduling in wireless powered communication networks.
//!
//! A hybrid access point (HAP) charges a population of wireless devices (WDs)
//! over the air. A device whose battery runs empty broadcasts an energy request
//! buzz (ERB), which turns the next slot into an energy transfer (WET) slot;
//! otherwise devices contend for the channel with p-persistent CSMA.
//!
//! The crate is organized in four layers:
//!
//! * [`model`]: radio and timing parameters, the harvest formula, energy
//!   quantization and slot durations.
//! * [`analysis`]: the per-device birth-death energy queue, the coupled fixed
//!   point for outage probabilities, slot probabilities and throughput.
//! * [`simulator`]: a seeded slot-level simulation of the protocol.
//! * [`oracle`]: the exact joint Markov chain over all battery levels, usable
//!   for small populations.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod error;
pub mod markov;
pub mod model;
pub mod oracle;
pub mod simulator;

pub use analysis::{
    benchmark_unlimited, slot_probabilities, solve_fixed_point, throughput, ChainParams,
    FixedPoint, SlotProbabilities, StationaryDistribution, ThroughputReport,
};
pub use error::{Error, Result};
pub use model::{DeviceProfile, NetworkConfig, ProtocolTiming, RadioParams, SlotDurations};
pub use oracle::ExactResult;
pub use simulator::{SimReport, SlotOutcome, SlotTally};
