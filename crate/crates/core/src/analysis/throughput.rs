//! Slot-type probabilities and normalized throughput.

use super::fixed_point::{solve_fixed_point, FixedPoint};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, SlotDurations};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    pub p_ene: f64,
    pub p_suc: f64,
    pub p_idl: f64,
    pub p_col: f64,
}

impl SlotProbabilities {
    pub fn total(&self) -> f64 {
        self.p_ene + self.p_suc + self.p_idl + self.p_col
    }
}

/// Slot probabilities given each device's outage probability.
///
/// A slot carries energy when at least one device is empty. Otherwise all
/// `N` devices contend, so success, idle and collision follow the binomial
/// transmit count.
pub fn slot_probabilities(outage: &[f64], transmit_prob: f64) -> SlotProbabilities {
    let n = outage.len() as i32;
    let p_it: f64 = outage.iter().map(|w| 1.0 - w).product();
    let p_ene = 1.0 - p_it;
    let p_suc = p_it * n as f64 * transmit_prob * (1.0 - transmit_prob).powi(n - 1);
    let p_idl = p_it * (1.0 - transmit_prob).powi(n);
    let p_col = (p_it - p_suc - p_idl).max(0.0);
    SlotProbabilities {
        p_ene,
        p_suc,
        p_idl,
        p_col,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    pub slot_probs: SlotProbabilities,
    pub durations: SlotDurations,
    /// Fraction of air time carrying successful payloads.
    pub psi: f64,
    /// `psi / N`; every device wins a WIT slot equally often.
    pub per_user_rate: f64,
}

pub fn throughput(
    probs: &SlotProbabilities,
    durations: &SlotDurations,
    devices: usize,
) -> Result<ThroughputReport> {
    if devices == 0 {
        return Err(Error::Domain("population is empty".into()));
    }
    let useful = probs.p_suc * durations.t_suc;
    let air_time = useful
        + probs.p_col * durations.t_col
        + probs.p_idl * durations.t_idl
        + probs.p_ene * durations.t_ene;
    if !(air_time > 0.0) {
        return Err(Error::Domain("expected slot length is zero".into()));
    }
    let psi = useful / air_time;
    Ok(ThroughputReport {
        slot_probs: *probs,
        durations: *durations,
        psi,
        per_user_rate: psi / devices as f64,
    })
}

/// Throughput of the same CSMA population with unlimited batteries.
pub fn benchmark_unlimited(
    devices: usize,
    transmit_prob: f64,
    durations: &SlotDurations,
) -> Result<ThroughputReport> {
    if devices == 0 {
        return Err(Error::Domain("population is empty".into()));
    }
    if !(transmit_prob > 0.0 && transmit_prob < 1.0) {
        return Err(Error::Domain(format!(
            "transmit probability must lie in (0, 1), got {transmit_prob}"
        )));
    }
    let probs = slot_probabilities(&vec![0.0; devices], transmit_prob);
    throughput(&probs, durations, devices)
}

/// Fixed point plus throughput for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub fixed_point: FixedPoint,
    pub report: ThroughputReport,
}

pub fn analyze(
    config: &NetworkConfig,
    durations: &SlotDurations,
    tol: f64,
    max_iters: usize,
) -> Result<Analysis> {
    let fixed_point = solve_fixed_point(config, tol, max_iters)?;
    let probs = slot_probabilities(&fixed_point.outage, config.transmit_prob());
    let report = throughput(&probs, durations, config.len())?;
    Ok(Analysis {
        fixed_point,
        report,
    })
}
