//! Single-device energy queue.
//!
//! With a state-independent WET probability `p_e`, one device's battery is a
//! birth-death chain on `{0, ..., C}`: a transfer slot lifts it by `e` units
//! (capped at `C`), a transmission drops it by one, and an empty battery is
//! recharged in the very slot it requests. Cutting the chain between `i - 1`
//! and `i` and equating flows gives, with `α = p_t (1 - p_e)`,
//!
//! ```text
//! α w_1 = w_0
//! α w_i = w_0 + p_e (w_1 + … + w_{i-1})          2 ≤ i ≤ e
//! α w_i = p_e (w_{i-e} + … + w_{i-1})            e < i ≤ C
//! ```

use crate::error::{Error, Result};
use crate::markov::gaussian_solve;

/// Parameters of one device's energy queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    harvest_units: u32,
    capacity: u32,
    transmit_prob: f64,
    wet_prob: f64,
}

impl ChainParams {
    pub fn new(
        harvest_units: u32,
        capacity: u32,
        transmit_prob: f64,
        wet_prob: f64,
    ) -> Result<Self> {
        if harvest_units < 1 || harvest_units >= capacity {
            return Err(Error::Domain(format!(
                "harvest units must lie in [1, {capacity}), got {harvest_units}"
            )));
        }
        if !(transmit_prob > 0.0 && transmit_prob < 1.0) {
            return Err(Error::Domain(format!(
                "transmit probability must lie in (0, 1), got {transmit_prob}"
            )));
        }
        if !(0.0..1.0).contains(&wet_prob) {
            return Err(Error::Domain(format!(
                "WET probability must lie in [0, 1), got {wet_prob}"
            )));
        }
        Ok(Self {
            harvest_units,
            capacity,
            transmit_prob,
            wet_prob,
        })
    }

    pub fn harvest_units(&self) -> u32 {
        self.harvest_units
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn transmit_prob(&self) -> f64 {
        self.transmit_prob
    }

    pub fn wet_prob(&self) -> f64 {
        self.wet_prob
    }

    /// Per-slot probability of spending one unit from a non-empty battery.
    pub fn departure_rate(&self) -> f64 {
        self.transmit_prob * (1.0 - self.wet_prob)
    }
}

/// Limiting probabilities of one battery, indexed by energy level.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
}

impl StationaryDistribution {
    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { probs: weights })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of an empty battery.
    pub fn outage(&self) -> f64 {
        self.probs[0]
    }

    pub fn capacity(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Rescaling threshold for the forward recursion. The ratios `w_i / w_0` grow
/// geometrically when charging outpaces spending and would overflow for large
/// capacities.
const RESCALE: f64 = 1e200;

/// Stationary distribution by forward substitution of the flow balance.
pub fn stationary_recursive(params: &ChainParams) -> StationaryDistribution {
    let alpha = params.departure_rate();
    let p_e = params.wet_prob;
    let e = params.harvest_units as usize;
    let c = params.capacity as usize;
    debug_assert!(alpha > 0.0);

    let mut w = vec![0.0; c + 1];
    w[0] = 1.0;
    for i in 1..=c {
        let lo = if i <= e { 1 } else { i - e };
        let window: f64 = w[lo..i].iter().sum();
        let inflow = if i <= e {
            w[0] + p_e * window
        } else {
            p_e * window
        };
        w[i] = inflow / alpha;
        if w[i] > RESCALE {
            w[..=i].iter_mut().for_each(|x| *x /= RESCALE);
        }
    }
    StationaryDistribution::from_weights(w).expect("recursion yields positive weights")
}

/// Stationary distribution by solving the full `(C+1) × (C+1)` balance system
/// with the last row replaced by total probability.
pub fn stationary_matrix(params: &ChainParams) -> Result<StationaryDistribution> {
    let h = balance_matrix(params);
    let n = params.capacity as usize + 1;
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut w = gaussian_solve(h, b)?;
    // Unreachable levels come back as tiny negatives.
    w.iter_mut().for_each(|x| *x = x.max(0.0));
    StationaryDistribution::from_weights(w)
}

/// Row-major balance matrix `H` with `H w = (0, …, 0, 1)ᵀ`.
pub fn balance_matrix(params: &ChainParams) -> Vec<f64> {
    let alpha = params.departure_rate();
    let p_e = params.wet_prob;
    let e = params.harvest_units as usize;
    let c = params.capacity as usize;
    let n = c + 1;
    let mut h = vec![0.0; n * n];
    // Row i - 1 balances the cut below level i.
    for i in 1..=c {
        let row = &mut h[(i - 1) * n..i * n];
        if i <= e {
            row[0] = 1.0;
        }
        let lo = if i <= e { 1 } else { i - e };
        row[lo..i].iter_mut().for_each(|x| *x = p_e);
        row[i] = -alpha;
    }
    h[c * n..].iter_mut().for_each(|x| *x = 1.0);
    h
}

/// Energy-outage probability `w_0` as a function of the WET probability.
pub fn outage_probability(params: &ChainParams) -> f64 {
    stationary_recursive(params).outage()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_e2_c3(p_t: f64, p_e: f64) -> f64 {
        let a = p_t * (1.0 - p_e);
        let num = a.powi(3);
        num / (num + 2.0 * a * a + 3.0 * a * p_e + p_e * p_e)
    }

    #[test]
    fn zero_wet_probability_e2_c3() {
        for p_t in [0.05, 0.2, 0.5, 0.9] {
            let params = ChainParams::new(2, 3, p_t, 0.0).unwrap();
            for dist in [
                stationary_recursive(&params),
                stationary_matrix(&params).unwrap(),
            ] {
                let w = dist.probs();
                assert!((w[0] - p_t / (p_t + 2.0)).abs() < 1e-14);
                assert!((w[1] - 1.0 / (p_t + 2.0)).abs() < 1e-14);
                assert!((w[2] - 1.0 / (p_t + 2.0)).abs() < 1e-14);
                assert_eq!(w[3], 0.0);
            }
        }
        let f = outage_probability(&ChainParams::new(2, 3, 0.2, 0.0).unwrap());
        assert!((f - 0.2 / 2.2).abs() < 1e-15);
    }

    #[test]
    fn general_e2_c3_matches_polynomial() {
        for &(p_t, p_e) in &[(0.3, 0.4), (0.9, 0.05), (0.01, 0.99), (0.5, 0.5)] {
            let params = ChainParams::new(2, 3, p_t, p_e).unwrap();
            let f = outage_probability(&params);
            assert!(
                (f - closed_form_e2_c3(p_t, p_e)).abs() < 1e-14,
                "{p_t} {p_e}"
            );
            let m = stationary_matrix(&params).unwrap();
            assert!((m.outage() - f).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized() {
        let params = ChainParams::new(3, 17, 0.1, 0.3).unwrap();
        let sum: f64 = stationary_recursive(&params).probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_balance_holds() {
        let params = ChainParams::new(4, 25, 0.35, 0.2).unwrap();
        let w = stationary_recursive(&params).into_vec();
        let h = balance_matrix(&params);
        let n = w.len();
        for row in 0..n - 1 {
            let lhs: f64 = (0..n).map(|j| h[row * n + j] * w[j]).sum();
            assert!(lhs.abs() < 1e-12, "row {row}: {lhs}");
        }
    }

    #[test]
    fn extreme_growth_does_not_overflow() {
        let params = ChainParams::new(1, 200, 0.01, 0.99).unwrap();
        let dist = stationary_recursive(&params);
        assert!(dist.probs().iter().all(|p| p.is_finite()));
        assert!((dist.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(dist.probs()[200] > 0.9);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ChainParams::new(0, 3, 0.5, 0.1).is_err());
        assert!(ChainParams::new(3, 3, 0.5, 0.1).is_err());
        assert!(ChainParams::new(1, 3, 0.0, 0.1).is_err());
        assert!(ChainParams::new(1, 3, 0.5, 1.0).is_err());
        assert!(ChainParams::new(1, 3, 0.5, -0.1).is_err());
    }
}
