//! Coupling between device queues.
//!
//! A non-empty device sees a transfer slot whenever some other device is empty,
//! so its WET probability is `g_n(w⁰) = 1 - Π_{i≠n} (1 - w_i⁰)`. Feeding that
//! back into each queue's outage function gives the fixed point
//! `w⁰ = f(g(w⁰)) = Ψ(w⁰)`. `f` is decreasing and `g` non-decreasing, so `Ψ`
//! is non-increasing and `w - Ψ(w)` is increasing.

use super::queue::{outage_probability, ChainParams};
use crate::error::{Error, Result};
use crate::markov::{gaussian_solve, max_abs_diff};
use crate::model::NetworkConfig;

/// Upper clamp on the WET probability; keeps the departure rate positive.
pub const MAX_WET_PROB: f64 = 1.0 - 1e-12;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

const FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointMethod {
    /// Scalar bisection on a homogeneous population.
    Bisection,
    /// Newton's method over device types.
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    /// Energy-outage probability of each device.
    pub outage: Vec<f64>,
    /// WET probability seen by each device.
    pub wet_prob: Vec<f64>,
    /// `‖w⁰ - Ψ(w⁰)‖_∞` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub method: FixedPointMethod,
}

/// WET probability observed by device `n`, given everyone's outage probability.
pub fn wet_probability(outage: &[f64], n: usize) -> f64 {
    let idle: f64 = outage
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != n)
        .map(|(_, w)| 1.0 - w)
        .product();
    1.0 - idle
}

fn clamp_wet(p: f64) -> f64 {
    p.clamp(0.0, MAX_WET_PROB)
}

fn outage_at(config: &NetworkConfig, harvest_units: u32, wet_prob: f64) -> f64 {
    let params = ChainParams::new(
        harvest_units,
        config.capacity(),
        config.transmit_prob(),
        clamp_wet(wet_prob),
    )
    .expect("network config upholds chain invariants");
    outage_probability(&params)
}

/// `Ψ(w⁰)` evaluated device by device.
pub fn psi(config: &NetworkConfig, outage: &[f64]) -> Vec<f64> {
    config
        .harvest_units()
        .enumerate()
        .map(|(n, e)| outage_at(config, e, wet_probability(outage, n)))
        .collect()
}

/// Population collapsed to `(harvest_units, count)` types.
struct TypeModel<'a> {
    config: &'a NetworkConfig,
    types: Vec<(u32, Vec<usize>)>,
}

impl TypeModel<'_> {
    fn psi(&self, w: &[f64]) -> Vec<f64> {
        let idle_all: Vec<f64> = self
            .types
            .iter()
            .zip(w)
            .map(|((_, members), &wk)| (1.0 - wk).powi(members.len() as i32))
            .collect();
        self.types
            .iter()
            .enumerate()
            .map(|(k, (e, members))| {
                let own = (1.0 - w[k]).powi(members.len() as i32 - 1);
                let others: f64 = idle_all
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, x)| x)
                    .product();
                outage_at(self.config, *e, 1.0 - own * others)
            })
            .collect()
    }

    fn expand(&self, w: &[f64]) -> Vec<f64> {
        let mut outage = vec![0.0; self.config.len()];
        for ((_, members), &wk) in self.types.iter().zip(w) {
            for &n in members {
                outage[n] = wk;
            }
        }
        outage
    }
}

/// Solves `w⁰ = Ψ(w⁰)` to `tol` in max norm.
///
/// Homogeneous populations use bisection on the scalar residual. Mixed
/// populations run Newton's method with a finite-difference Jacobian and
/// backtracking over one unknown per device type, starting from `w = 1/2`.
/// Plain damped iteration is not used: `Ψ` is steep enough that
/// `w ← (w + Ψ(w)) / 2` settles into a two-cycle on realistic populations.
pub fn solve_fixed_point(config: &NetworkConfig, tol: f64, max_iters: usize) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let model = TypeModel {
        config,
        types: config.device_types(),
    };
    let (type_outage, iterations, method) = if model.types.len() == 1 {
        let (w, it) = bisect(&model, tol, max_iters)?;
        (vec![w], it, FixedPointMethod::Bisection)
    } else {
        let (w, it) = newton(&model, tol, max_iters)?;
        (w, it, FixedPointMethod::Newton)
    };

    let outage = model.expand(&type_outage);
    let residual = max_abs_diff(&outage, &psi(config, &outage));
    if residual > tol {
        return Err(Error::Convergence {
            solver: "fixed point",
            iterations,
            residual,
        });
    }
    let wet_prob = (0..outage.len())
        .map(|n| clamp_wet(wet_probability(&outage, n)))
        .collect();
    Ok(FixedPoint {
        outage,
        wet_prob,
        residual,
        iterations,
        method,
    })
}

fn bisect(model: &TypeModel<'_>, tol: f64, max_iters: usize) -> Result<(f64, usize)> {
    let residual = |w: f64| w - model.psi(&[w])[0];
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = (f64::INFINITY, 0.5);
    for iteration in 1..=max_iters {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() < best.0 {
            best = (r.abs(), mid);
        }
        if r.abs() <= 0.5 * tol {
            return Ok((mid, iteration));
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok((best.1, iteration));
        }
    }
    Err(Error::Convergence {
        solver: "bisection",
        iterations: max_iters,
        residual: best.0,
    })
}

fn newton(model: &TypeModel<'_>, tol: f64, max_iters: usize) -> Result<(Vec<f64>, usize)> {
    let k = model.types.len();
    let residual =
        |w: &[f64]| -> Vec<f64> { w.iter().zip(model.psi(w)).map(|(x, y)| x - y).collect() };
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sup = |r: &[f64]| r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut w = vec![0.5; k];
    let mut r = residual(&w);
    for iteration in 1..=max_iters {
        if sup(&r) <= 0.5 * tol {
            return Ok((w, iteration));
        }
        // Forward-difference Jacobian of w - Ψ(w), row-major.
        let mut jac = vec![0.0; k * k];
        for j in 0..k {
            let h = if w[j] > 0.5 { -FD_STEP } else { FD_STEP };
            let mut shifted = w.clone();
            shifted[j] += h;
            let rs = residual(&shifted);
            for i in 0..k {
                jac[i * k + j] = (rs[i] - r[i]) / h;
            }
        }
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = gaussian_solve(jac, rhs)?;

        // Backtrack until the residual norm drops.
        let current = norm(&r);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = w
                .iter()
                .zip(&delta)
                .map(|(x, d)| (x + t * d).clamp(0.0, 1.0 - f64::EPSILON))
                .collect();
            let rt = residual(&trial);
            if norm(&rt) < current {
                w = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Convergence {
                    solver: "Newton",
                    iterations: iteration,
                    residual: sup(&r),
                });
            }
        }
    }
    Err(Error::Convergence {
        solver: "Newton",
        iterations: max_iters,
        residual: sup(&r),
    })
}
