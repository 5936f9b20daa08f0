//! Exact joint Markov chain over all battery levels.
//!
//! Tracks the full vector `(B_1, …, B_N)` so no decoupling approximation is
//! involved. Only small populations fit: the state space has `(C+1)^N` points.

use crate::analysis::{
    throughput, ChainParams, SlotProbabilities, StationaryDistribution, ThroughputReport,
};
use crate::error::{Error, Result};
use crate::markov::{power_iteration, stationary_direct, SparseChain};
use crate::model::{NetworkConfig, SlotDurations};

pub const MAX_JOINT_STATES: u128 = 1_000_000;
/// Bound on stored transitions; WIT rows hold `2^N` entries each.
pub const MAX_JOINT_TRANSITIONS: u128 = 10_000_000;

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 10_000_000;
/// Largest chain the dense fallback solver will take on.
const DIRECT_SOLVE_LIMIT: usize = 3_000;
const BALANCE_TOL: f64 = 1e-9;

/// Mixed-radix encoding of battery vectors; device 0 is the least significant
/// digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointStateCodec {
    devices: usize,
    radix: usize,
}

impl JointStateCodec {
    pub fn new(devices: usize, capacity: u32) -> Self {
        Self {
            devices,
            radix: capacity as usize + 1,
        }
    }

    pub fn num_states(&self) -> usize {
        self.radix.pow(self.devices as u32)
    }

    pub fn encode(&self, batteries: &[u32]) -> usize {
        debug_assert_eq!(batteries.len(), self.devices);
        batteries
            .iter()
            .rev()
            .fold(0, |acc, &b| acc * self.radix + b as usize)
    }

    pub fn decode_into(&self, mut index: usize, batteries: &mut [u32]) {
        for b in batteries.iter_mut() {
            *b = (index % self.radix) as u32;
            index /= self.radix;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<u32> {
        let mut batteries = vec![0; self.devices];
        self.decode_into(index, &mut batteries);
        batteries
    }
}

fn check_size(config: &NetworkConfig) -> Result<()> {
    let n = config.len() as u32;
    let c = config.capacity() as u128;
    let states = (c + 1).checked_pow(n).unwrap_or(u128::MAX);
    if states > MAX_JOINT_STATES {
        return Err(Error::StateSpaceTooLarge {
            what: "states",
            size: states,
            limit: MAX_JOINT_STATES,
        });
    }
    let transitions = (2 * c).pow(n) + (states - c.pow(n));
    if transitions > MAX_JOINT_TRANSITIONS {
        return Err(Error::StateSpaceTooLarge {
            what: "transitions",
            size: transitions,
            limit: MAX_JOINT_TRANSITIONS,
        });
    }
    Ok(())
}

/// Transition structure of the joint battery chain.
pub fn build_joint_chain(config: &NetworkConfig) -> Result<SparseChain> {
    check_size(config)?;
    let n = config.len();
    let capacity = config.capacity();
    let p_t = config.transmit_prob();
    let units: Vec<u32> = config.harvest_units().collect();
    let codec = JointStateCodec::new(n, capacity);
    let states = codec.num_states();

    let mut chain = SparseChain::with_capacity(states, states);
    let mut batteries = vec![0u32; n];
    let mut next = vec![0u32; n];
    let mut row = Vec::with_capacity(1 << n);
    for index in 0..states {
        codec.decode_into(index, &mut batteries);
        row.clear();
        if batteries.contains(&0) {
            for ((nb, &b), &e) in next.iter_mut().zip(&batteries).zip(&units) {
                *nb = (b + e).min(capacity);
            }
            row.push((codec.encode(&next), 1.0));
        } else {
            for mask in 0u64..(1 << n) {
                let senders = mask.count_ones() as i32;
                let p = p_t.powi(senders) * (1.0 - p_t).powi(n as i32 - senders);
                for (k, (nb, &b)) in next.iter_mut().zip(&batteries).enumerate() {
                    *nb = if mask >> k & 1 == 1 { b - 1 } else { b };
                }
                row.push((codec.encode(&next), p));
            }
        }
        chain.push_row(row.iter().copied());
    }
    Ok(chain)
}

/// One device's battery chain with a constant WET probability.
pub fn single_device_chain(params: &ChainParams) -> SparseChain {
    let c = params.capacity() as usize;
    let e = params.harvest_units() as usize;
    let p_e = params.wet_prob();
    let down = params.departure_rate();
    let mut chain = SparseChain::with_capacity(c + 1, 3 * (c + 1));
    chain.push_row([(e, 1.0)]);
    for i in 1..c {
        chain.push_row([
            ((i + e).min(c), p_e),
            (i - 1, down),
            (i, (1.0 - params.transmit_prob()) * (1.0 - p_e)),
        ]);
    }
    chain.push_row([(c - 1, down), (c, 1.0 - down)]);
    chain
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// Stationary probability of every joint state, indexed by [`JointStateCodec`].
    pub stationary: Vec<f64>,
    pub slot_probs: SlotProbabilities,
    pub report: ThroughputReport,
    /// Marginal battery distribution of each device.
    pub marginals: Vec<StationaryDistribution>,
    /// `wet_conditionals[n][i]` is P(some other battery is empty | B_n = i)
    /// for `i ≥ 1`; entry 0 and levels with zero mass are `None`.
    pub wet_conditionals: Vec<Vec<Option<f64>>>,
    /// `max_j |(πP)_j - π_j|`.
    pub balance_residual: f64,
    /// Power-iteration steps, or 0 when the direct solve was used.
    pub iterations: usize,
}

pub fn exact_analysis(config: &NetworkConfig, durations: &SlotDurations) -> Result<ExactResult> {
    let chain = build_joint_chain(config)?;
    let n = config.len();
    let capacity = config.capacity();
    let codec = JointStateCodec::new(n, capacity);

    let mut start = vec![0.0; codec.num_states()];
    start[codec.encode(&vec![capacity; n])] = 1.0;
    let (stationary, iterations) = match power_iteration(&chain, start, POWER_TOL, POWER_MAX_ITERS)
    {
        Ok(result) => (result.dist, result.iterations),
        Err(err @ Error::Convergence { .. }) if chain.num_states() > DIRECT_SOLVE_LIMIT => {
            return Err(err)
        }
        Err(Error::Convergence { .. }) => (stationary_direct(&chain)?, 0),
        Err(err) => return Err(err),
    };
    let balance_residual = chain.balance_residual(&stationary);
    if balance_residual > BALANCE_TOL {
        return Err(Error::Convergence {
            solver: "joint stationary solve",
            iterations,
            residual: balance_residual,
        });
    }

    let levels = capacity as usize + 1;
    let mut p_ene = 0.0;
    let mut marginals = vec![vec![0.0; levels]; n];
    // Mass at (device, level) where some other device is empty.
    let mut other_empty = vec![vec![0.0; levels]; n];
    let mut batteries = vec![0u32; n];
    for (index, &mass) in stationary.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        codec.decode_into(index, &mut batteries);
        let empties = batteries.iter().filter(|&&b| b == 0).count();
        if empties > 0 {
            p_ene += mass;
        }
        for (k, &b) in batteries.iter().enumerate() {
            marginals[k][b as usize] += mass;
            let others_empty = empties - usize::from(b == 0);
            if others_empty > 0 {
                other_empty[k][b as usize] += mass;
            }
        }
    }

    let p_t = config.transmit_prob();
    let p_it = 1.0 - p_ene;
    let p_suc = p_it * n as f64 * p_t * (1.0 - p_t).powi(n as i32 - 1);
    let p_idl = p_it * (1.0 - p_t).powi(n as i32);
    let slot_probs = SlotProbabilities {
        p_ene,
        p_suc,
        p_idl,
        p_col: (p_it - p_suc - p_idl).max(0.0),
    };
    let report = throughput(&slot_probs, durations, n)?;

    let wet_conditionals = marginals
        .iter()
        .zip(&other_empty)
        .map(|(marginal, empty)| {
            (0..levels)
                .map(|i| (i > 0 && marginal[i] > 0.0).then(|| empty[i] / marginal[i]))
                .collect()
        })
        .collect();
    let marginals = marginals
        .into_iter()
        .map(StationaryDistribution::from_weights)
        .collect::<Result<_>>()?;

    Ok(ExactResult {
        stationary,
        slot_probs,
        report,
        marginals,
        wet_conditionals,
        balance_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_round_trip() {
        let codec = JointStateCodec::new(3, 4);
        assert_eq!(codec.num_states(), 125);
        for index in 0..codec.num_states() {
            assert_eq!(codec.encode(&codec.decode(index)), index);
        }
        assert_eq!(codec.encode(&[1, 0, 0]), 1);
        assert_eq!(codec.encode(&[0, 1, 0]), 5);
    }

    #[test]
    fn single_device_joint_chain() {
        let config = NetworkConfig::from_groups(&[(1, 1)], 0.3, 2).unwrap();
        let chain = build_joint_chain(&config).unwrap();
        assert_eq!(chain.num_states(), 3);
        assert_eq!(chain.row(0).collect::<Vec<_>>(), vec![(1, 1.0)]);
        let mut row1: Vec<_> = chain.row(1).collect();
        row1.sort_by_key(|t| t.0);
        assert_eq!(row1, vec![(0, 0.3), (1, 0.7)]);
        let mut row2: Vec<_> = chain.row(2).collect();
        row2.sort_by_key(|t| t.0);
        assert_eq!(row2, vec![(1, 0.3), (2, 0.7)]);
    }

    #[test]
    fn forced_wet_respects_cap() {
        let config = NetworkConfig::from_groups(&[(2, 1)], 0.5, 3).unwrap();
        let chain = build_joint_chain(&config).unwrap();
        let codec = JointStateCodec::new(2, 3);
        let row: Vec<_> = chain.row(codec.encode(&[0, 3])).collect();
        assert_eq!(row, vec![(codec.encode(&[1, 3]), 1.0)]);
    }

    #[test]
    fn rows_are_stochastic() {
        let config = NetworkConfig::from_groups(&[(1, 1), (1, 2), (1, 1)], 0.27, 4).unwrap();
        let chain = build_joint_chain(&config).unwrap();
        for s in 0..chain.num_states() {
            assert!((chain.row_sum(s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_device_exact() {
        let config = NetworkConfig::from_groups(&[(1, 1)], 0.5, 2).unwrap();
        let exact = exact_analysis(&config, &SlotDurations::table1()).unwrap();
        // Level 2 is transient: a lone device is only recharged from empty,
        // which lifts it to 1.
        let expected = [1.0 / 3.0, 2.0 / 3.0, 0.0];
        for (a, b) in exact.stationary.iter().zip(expected) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!((exact.slot_probs.p_ene - 1.0 / 3.0).abs() < 1e-11);
        assert!((exact.slot_probs.total() - 1.0).abs() < 1e-12);
        // A lone device only ever sees its own energy requests.
        assert_eq!(exact.wet_conditionals[0][1], Some(0.0));
    }

    #[test]
    fn size_guard() {
        let big = NetworkConfig::reference_population();
        assert!(matches!(
            build_joint_chain(&big),
            Err(Error::StateSpaceTooLarge { what: "states", .. })
        ));
        // 3^12 states fit but 4^12 transitions do not.
        let wide = NetworkConfig::from_groups(&[(12, 1)], 0.1, 2).unwrap();
        assert!(matches!(
            build_joint_chain(&wide),
            Err(Error::StateSpaceTooLarge {
                what: "transitions",
                ..
            })
        ));
    }

    #[test]
    fn explicit_single_device_chain_is_stochastic() {
        let params = ChainParams::new(3, 7, 0.4, 0.25).unwrap();
        let chain = single_device_chain(&params);
        assert_eq!(chain.num_states(), 8);
        for s in 0..8 {
            assert!((chain.row_sum(s) - 1.0).abs() < 1e-15);
        }
    }
}
