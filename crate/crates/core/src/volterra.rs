//! Explicit time-marching solution of the coupled absorption-rate system
//!
//! ```text
//! n_k(t) = N_T f(r_k, t) - sum_{j != k} (n_j * f(d_kj, .))(t)
//! ```
//!
//! for any number of cells, where `d_kj` is the distance from cell j's
//! negative source to cell k's center and `f` uses cell k's radius.
//!
//! The convolution uses the trapezoidal rule over past samples. Since every
//! kernel vanishes at t = 0 the newest sample carries no weight and each step
//! is explicit.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::analytic::{kernel, TimeGrid};
use crate::error::{Error, Result};
use crate::geometry::{
    kernel_distances, predict_barycenters_with, BarycenterCoefficients, BarycenterSet, Scenario,
    SourceModel,
};
use crate::peak::grid_argmax;

/// Largest number of time steps accepted by the solver (work is quadratic in it).
pub const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Replace negative rates by zero in the returned solution (cumulative
    /// values are re-accumulated from the clamped rates).
    pub clamp_negative: bool,
    /// Fail when a rate drops below `-1e-6` times the largest rate. Off by
    /// default: a receiver shadowed by a closer interferer gets a negative
    /// early rate from the center and barycenter models themselves, at any
    /// step size.
    pub reject_negative: bool,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            clamp_negative: false,
            reject_negative: false,
            max_steps: MAX_STEPS,
        }
    }
}

/// Relative size of the negative excursion that counts as non-convergence.
pub const NEGATIVE_RATE_TOLERANCE: f64 = 1e-6;

/// Per-cell absorption rates (molecules/s) and cumulative absorptions
/// (molecules) sampled at `t_0 = 0, t_1, ..., t_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    grid: TimeGrid,
    labels: Vec<String>,
    rates: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    min_rate: Vec<f64>,
    negative_points: Vec<usize>,
    clamped: bool,
}

impl RateSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.rates.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rates(&self, cell: usize) -> &[f64] {
        &self.rates[cell]
    }

    pub fn cumulative(&self, cell: usize) -> &[f64] {
        &self.cumulative[cell]
    }

    pub fn final_cumulative(&self, cell: usize) -> f64 {
        *self.cumulative[cell].last().unwrap_or(&0.0)
    }

    /// Time of the largest rate of `cell`, refined by a parabola through the
    /// neighbouring samples.
    pub fn peak_time(&self, cell: usize) -> f64 {
        grid_argmax(&self.rates[cell], self.grid.dt())
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }
}

/// Negative-rate report of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampDiagnostics {
    /// Minimum rate per cell before any clamping.
    pub min_rate: Vec<f64>,
    /// Fraction of grid points per cell with a negative rate (these are the
    /// points set to zero when clamping is enabled).
    pub clamped_fraction: Vec<f64>,
    /// Fraction over all cells.
    pub total_fraction: f64,
}

pub fn negative_rate_clamp_policy(solution: &RateSolution) -> ClampDiagnostics {
    let points = solution.grid.steps() as f64;
    let clamped_fraction: Vec<f64> = solution
        .negative_points
        .iter()
        .map(|&n| n as f64 / points)
        .collect();
    let total = solution.negative_points.iter().sum::<usize>() as f64;
    ClampDiagnostics {
        min_rate: solution.min_rate.clone(),
        clamped_fraction,
        total_fraction: total / (points * solution.cells() as f64),
    }
}

/// Solve with the given source model, default coefficients and options.
pub fn solve(scenario: &Scenario, model: SourceModel, grid: TimeGrid) -> Result<RateSolution> {
    let sources = predict_barycenters_with(scenario, model, &BarycenterCoefficients::default())?;
    solve_with_sources(scenario, &sources, grid, SolverOptions::default())
}

/// Solve with explicit negative-source points (predicted or measured).
pub fn solve_with_sources(
    scenario: &Scenario,
    sources: &BarycenterSet,
    grid: TimeGrid,
    options: SolverOptions,
) -> Result<RateSolution> {
    let steps = grid.steps();
    if steps > options.max_steps {
        return Err(Error::GridTooLarge {
            steps,
            cap: options.max_steps,
        });
    }
    let cells = scenario.cells();
    let k_count = cells.len();
    let diffusion = scenario.diffusion();
    let emitted = scenario.emitted() as f64;
    let dt = grid.dt();

    let t_peak = scenario.min_peak_time();
    if dt > t_peak / 20.0 {
        log::warn!(
            "time step {dt} s is coarse against the earliest peak time {t_peak} s (want <= {})",
            t_peak / 20.0
        );
    }

    let distances = kernel_distances(scenario, sources);
    // kernels[k * K + j][m] = f(d_kj, t_m) with cell k's radius
    let mut kernels: Vec<Vec<f64>> = Vec::with_capacity(k_count * k_count);
    for (k, cell) in cells.iter().enumerate() {
        for j in 0..k_count {
            if j == k {
                kernels.push(Vec::new());
                continue;
            }
            let d = distances.get(k, j);
            if !(d > cell.radius()) {
                return Err(Error::SourceInsideReceiver {
                    receiver: k,
                    source_cell: j,
                    distance: d,
                    radius: cell.radius(),
                });
            }
            let gap = d - cell.radius();
            let ratio = cell.radius() / d;
            kernels.push(
                (0..=steps)
                    .map(|m| kernel(gap, ratio, diffusion, grid.time(m)))
                    .collect(),
            );
        }
    }

    let mut rates = vec![vec![0.0; steps + 1]; k_count];
    for (k, cell) in cells.iter().enumerate() {
        let gap = cell.distance() - cell.radius();
        let ratio = cell.radius() / cell.distance();
        for (m, rate) in rates[k].iter_mut().enumerate().skip(1) {
            *rate = emitted * kernel(gap, ratio, diffusion, grid.time(m));
        }
    }

    for m in 2..=steps {
        for k in 0..k_count {
            let mut interference = 0.0;
            for j in 0..k_count {
                if j != k {
                    interference += history_dot(&rates[j], &kernels[k * k_count + j], m);
                }
            }
            rates[k][m] -= dt * interference;
        }
    }

    let mut min_rate = vec![f64::INFINITY; k_count];
    let mut negative_points = vec![0usize; k_count];
    let mut max_rate = 0.0f64;
    for k in 0..k_count {
        for &r in &rates[k][1..] {
            min_rate[k] = min_rate[k].min(r);
            max_rate = max_rate.max(r);
            if r < 0.0 {
                negative_points[k] += 1;
            }
        }
    }
    let threshold = -NEGATIVE_RATE_TOLERANCE * max_rate;
    if let Some((cell, &min)) = min_rate.iter().enumerate().find(|(_, &r)| r < threshold) {
        if options.reject_negative {
            return Err(Error::NonConvergence {
                cell,
                min_rate: min,
                threshold,
            });
        }
        log::warn!(
            "rate of `{}` dips to {min:.4e} molecules/s ({} negative points)",
            cells[cell].label(),
            negative_points[cell]
        );
    }
    if options.clamp_negative {
        for series in &mut rates {
            for r in series.iter_mut() {
                if *r < 0.0 {
                    *r = 0.0;
                }
            }
        }
    }

    let cumulative = rates
        .iter()
        .map(|series| {
            let mut acc = Vec::with_capacity(series.len());
            let mut total = 0.0;
            acc.push(0.0);
            for w in series.windows(2) {
                total += 0.5 * dt * (w[0] + w[1]);
                acc.push(total);
            }
            acc
        })
        .collect();

    Ok(RateSolution {
        grid,
        labels: cells.iter().map(|c| String::from(c.label())).collect(),
        rates,
        cumulative,
        min_rate,
        negative_points,
        clamped: options.clamp_negative,
    })
}

/// `sum_{i=1}^{m-1} rate[i] * kern[m - i]` with four fixed accumulators, so the
/// summation order (and hence the result) never depends on scheduling.
#[inline]
fn history_dot(rate: &[f64], kern: &[f64], m: usize) -> f64 {
    let past = &rate[1..m];
    let lagged = &kern[1..m];
    let mut acc = [0.0f64; 4];
    let chunks = past.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        let n = lagged.len();
        acc[0] += past[i] * lagged[n - 1 - i];
        acc[1] += past[i + 1] * lagged[n - 2 - i];
        acc[2] += past[i + 2] * lagged[n - 3 - i];
        acc[3] += past[i + 3] * lagged[n - 4 - i];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..past.len() {
        tail += past[i] * lagged[lagged.len() - 1 - i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
