//! Closed-form responses of fully-absorbing spheres to an impulsive point
//! emitter: free-space concentration, single-receiver hitting rate and its
//! integral, and the two-receiver series obtained from the Laplace-domain
//! solution of the coupled system.
//!
//! All responses are defined to be exactly zero at `t <= 0`.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{BarycenterSet, Scenario};
use crate::special::erfc;

/// Default relative truncation tolerance of the two-receiver series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-10;
/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;

/// Uniform time grid `t_m = m dt`, `m = 1..=steps`. Index 0 (t = 0) is kept in
/// every sampled series as the zero initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                what: "time step",
                value: dt,
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter {
                what: "step count",
                value: 0.0,
            });
        }
        Ok(TimeGrid { dt, steps })
    }

    /// Grid covering `[0, horizon]` with step `dt` (the horizon is rounded to
    /// the nearest whole number of steps).
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= dt) {
            return Err(Error::InvalidParameter {
                what: "horizon",
                value: horizon,
            });
        }
        TimeGrid::new(dt, libm::round(horizon / dt) as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    /// Evaluation times `t_1..=t_steps`.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.steps).map(move |m| self.time(m))
    }
}

/// Concentration `Q / sqrt(4 pi D t^3) * exp(-r^2 / (4 D t))` around a point
/// source releasing `q` molecules at t = 0, normalized as in the channel
/// literature this crate follows.
pub fn free_space_concentration(q: f64, r: f64, t: f64, diffusion: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    q / libm::sqrt(4.0 * PI * diffusion * t * t * t) * libm::exp(-r * r / (4.0 * diffusion * t))
}

/// Hitting-rate kernel without argument checks; `gap = r - R`.
#[inline]
pub(crate) fn kernel(gap: f64, ratio: f64, diffusion: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    ratio * gap / libm::sqrt(4.0 * PI * diffusion * t * t * t)
        * libm::exp(-gap * gap / (4.0 * diffusion * t))
}

fn check_outside(r: f64, radius: f64) -> Result<()> {
    if !(radius > 0.0) || !(r > radius) {
        return Err(Error::InsideReceiver {
            distance: r,
            radius,
        });
    }
    Ok(())
}

/// First-passage density onto a sphere of radius `radius` whose center is `r`
/// away from the emitter: `R (r - R) / (r sqrt(4 pi D t^3)) exp(-(r - R)^2 / (4 D t))`.
/// Integrates to `R / r` over `(0, inf)`.
pub fn hitting_rate(r: f64, radius: f64, diffusion: f64, t: f64) -> Result<f64> {
    check_outside(r, radius)?;
    Ok(kernel(r - radius, radius / r, diffusion, t))
}

/// Expected absorptions up to `t`: `N_T (R / r) erfc((r - R) / (2 sqrt(D t)))`.
pub fn cumulative_single(emitted: f64, r: f64, radius: f64, diffusion: f64, t: f64) -> Result<f64> {
    check_outside(r, radius)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(emitted * radius / r * erfc((r - radius) / (2.0 * libm::sqrt(diffusion * t))))
}

/// Argmax of [`hitting_rate`] over t: `(r - R)^2 / (6 D)`.
pub fn single_peak_time(r: f64, radius: f64, diffusion: f64) -> f64 {
    let gap = r - radius;
    gap * gap / (6.0 * diffusion)
}

/// Parameters of the two-receiver Laplace solution
/// `N(s) = N_T (alpha e^{-beta sqrt s} - delta e^{-epsilon sqrt s}) / (s (1 - kappa e^{-gamma_s sqrt s}))`.
///
/// `d_to_target` is the distance from the other cell's source point to the
/// target center, `d_to_other` the converse. They coincide for the center model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub gamma_s: f64,
}

impl SeriesParams {
    pub fn new(
        r_target: f64,
        r_other: f64,
        d_to_target: f64,
        d_to_other: f64,
        radius: f64,
        diffusion: f64,
    ) -> Result<Self> {
        if !(diffusion.is_finite() && diffusion > 0.0) {
            return Err(Error::InvalidDiffusion(diffusion));
        }
        check_outside(r_target, radius)?;
        check_outside(r_other, radius)?;
        for d in [d_to_target, d_to_other] {
            if !(d >= radius) {
                return Err(Error::InsideReceiver {
                    distance: d,
                    radius,
                });
            }
        }
        let sqrt_d = libm::sqrt(diffusion);
        let params = SeriesParams {
            alpha: radius / r_target,
            beta: (r_target - radius) / sqrt_d,
            delta: radius * radius / (d_to_target * r_other),
            epsilon: (d_to_target + r_other - 2.0 * radius) / sqrt_d,
            kappa: radius * radius / (d_to_target * d_to_other),
            gamma_s: (d_to_target + d_to_other - 2.0 * radius) / sqrt_d,
        };
        if !(params.kappa > 0.0 && params.kappa < 1.0) {
            return Err(Error::KappaOutOfRange(params.kappa));
        }
        Ok(params)
    }

    /// Parameters for cell `target` of a two-cell, equal-radius scenario with
    /// the given negative-source points.
    pub fn from_scenario(
        scenario: &Scenario,
        sources: &BarycenterSet,
        target: usize,
    ) -> Result<Self> {
        let cells = scenario.cells();
        if cells.len() != 2 {
            return Err(Error::NotTwoCells(cells.len()));
        }
        if target > 1 {
            return Err(Error::CellIndex {
                index: target,
                len: 2,
            });
        }
        let other = 1 - target;
        let (t, o) = (&cells[target], &cells[other]);
        if t.radius() != o.radius() {
            return Err(Error::UnequalRadii(t.radius(), o.radius()));
        }
        let d_to_target = t.center().distance(sources.points[other]);
        let d_to_other = o.center().distance(sources.points[target]);
        SeriesParams::new(
            t.distance(),
            o.distance(),
            d_to_target,
            d_to_other,
            t.radius(),
            scenario.diffusion(),
        )
    }
}

/// `N_T alpha sum kappa^n erfc((beta + n gamma_s) / (2 sqrt t)) - N_T delta sum kappa^n erfc((epsilon + n gamma_s) / (2 sqrt t))`.
///
/// Terms are added until the next term of both sums drops below `tol` times
/// its partial sum (at most [`MAX_SERIES_TERMS`]).
pub fn two_receiver_cumulative(
    params: &SeriesParams,
    emitted: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    check_series(params, tol)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let scale = 1.0 / (2.0 * libm::sqrt(t));
    let (mut direct, mut mirrored) = (0.0, 0.0);
    let mut weight = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let shift = n as f64 * params.gamma_s;
        let a = weight * erfc((params.beta + shift) * scale);
        let b = weight * erfc((params.epsilon + shift) * scale);
        direct += a;
        mirrored += b;
        // erfc terms shrink monotonically in n, so the next term is bounded by
        // the current one times kappa.
        if a * params.kappa <= tol * direct && b * params.kappa <= tol * mirrored {
            break;
        }
        weight *= params.kappa;
    }
    Ok(emitted * (params.alpha * direct - params.delta * mirrored))
}

/// Time derivative of [`two_receiver_cumulative`] per emitted molecule (1/s).
pub fn two_receiver_cir(params: &SeriesParams, t: f64, tol: f64) -> Result<f64> {
    check_series(params, tol)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let norm = 1.0 / (2.0 * libm::sqrt(PI) * t * libm::sqrt(t));
    let shifted = |a: f64| norm * a * libm::exp(-a * a / (4.0 * t));
    // a exp(-a^2 / 4t) peaks at a = sqrt(2t): a bound for every remaining term
    let bound = shifted(libm::sqrt(2.0 * t));
    let (mut direct, mut mirrored) = (0.0, 0.0);
    let mut weight = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let shift = n as f64 * params.gamma_s;
        direct += weight * shifted(params.beta + shift);
        mirrored += weight * shifted(params.epsilon + shift);
        weight *= params.kappa;
        let tail = weight * bound / (1.0 - params.kappa);
        if tail <= tol * direct && tail <= tol * mirrored {
            break;
        }
    }
    Ok(params.alpha * direct - params.delta * mirrored)
}

fn check_series(params: &SeriesParams, tol: f64) -> Result<()> {
    if !(params.kappa > 0.0 && params.kappa < 1.0) {
        return Err(Error::KappaOutOfRange(params.kappa));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            what: "series tolerance",
            value: tol,
        });
    }
    Ok(())
}
