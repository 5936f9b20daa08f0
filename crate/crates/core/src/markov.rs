//! Sparse row-stochastic chains, power iteration and a dense Gaussian solver.

use crate::error::{Error, Result};

/// Transition matrix stored row by row in compressed form.
#[derive(Debug, Clone, Default)]
pub struct SparseChain {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
}

impl SparseChain {
    pub fn with_capacity(states: usize, transitions: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(states + 1);
        row_ptr.push(0);
        Self {
            row_ptr,
            cols: Vec::with_capacity(transitions),
            probs: Vec::with_capacity(transitions),
        }
    }

    /// Appends the next row. Rows must be pushed in state order.
    pub fn push_row<I>(&mut self, transitions: I)
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        for (to, p) in transitions {
            self.cols.push(to);
            self.probs.push(p);
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn num_states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_transitions(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[state]..self.row_ptr[state + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.probs[span].iter().copied())
    }

    pub fn row_sum(&self, state: usize) -> f64 {
        self.row(state).map(|(_, p)| p).sum()
    }

    /// `out = dist · P`.
    pub fn apply(&self, dist: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (from, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (to, p) in self.row(from) {
                out[to] += mass * p;
            }
        }
    }

    /// `max_j |(dist · P)_j - dist_j|`.
    pub fn balance_residual(&self, dist: &[f64]) -> f64 {
        let mut next = vec![0.0; dist.len()];
        self.apply(dist, &mut next);
        max_abs_diff(&next, dist)
    }

    /// Dense `n × n` copy, row-major. Only sensible for small chains.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.num_states();
        let mut dense = vec![0.0; n * n];
        for from in 0..n {
            for (to, p) in self.row(from) {
                dense[from * n + to] += p;
            }
        }
        dense
    }
}

#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub dist: Vec<f64>,
    pub iterations: usize,
    /// Max-norm change over the last iteration.
    pub last_step: f64,
}

/// Iterates `π ← π·P` from `start` until successive iterates differ by at most
/// `tol` in max norm.
pub fn power_iteration(
    chain: &SparseChain,
    start: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<PowerIteration> {
    assert_eq!(start.len(), chain.num_states(), "start vector length");
    let mut dist = start;
    let mut next = vec![0.0; dist.len()];
    let mut last_step = f64::INFINITY;
    for iteration in 1..=max_iters {
        chain.apply(&dist, &mut next);
        // Renormalize to keep rounding drift out of the total mass.
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        last_step = max_abs_diff(&next, &dist);
        std::mem::swap(&mut dist, &mut next);
        if last_step <= tol {
            return Ok(PowerIteration {
                dist,
                iterations: iteration,
                last_step,
            });
        }
    }
    Err(Error::Convergence {
        solver: "power iteration",
        iterations: max_iters,
        residual: last_step,
    })
}

/// Stationary vector by solving `(Pᵀ - I)π = 0` with the last equation
/// replaced by `Σπ = 1`. Requires a single recurrent class.
pub fn stationary_direct(chain: &SparseChain) -> Result<Vec<f64>> {
    let n = chain.num_states();
    let mut a = vec![0.0; n * n];
    for from in 0..n {
        for (to, p) in chain.row(from) {
            a[to * n + from] += p;
        }
        a[from * n + from] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    gaussian_solve(a, b)
}

/// Solves `A x = b` for a dense row-major `A` by Gaussian elimination with
/// partial pivoting.
pub fn gaussian_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix must be {n}x{n}");
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty column");
        let pivot_val = a[pivot * n + col];
        if pivot_val.abs() < f64::MIN_POSITIVE || !pivot_val.is_finite() {
            return Err(Error::Singular(col));
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot_val;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for j in col + 1..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|j| a[row * n + j] * x[j]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Ok(x)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
