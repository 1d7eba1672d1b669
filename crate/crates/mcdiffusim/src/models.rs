//! Model curves from either the closed-form series or the time-marching solver.

use mcdiff_core::analytic::DEFAULT_SERIES_TOL;
use mcdiff_core::peak::grid_argmax;
use mcdiff_core::volterra::{negative_rate_clamp_policy, solve_with_sources, SolverOptions};
use mcdiff_core::{
    two_receiver_cir, two_receiver_cumulative, BarycenterCoefficients, BarycenterSet, Scenario,
    SeriesParams, SourceModel, TimeGrid,
};

use crate::error::{HarnessError, Result};
use crate::spec::Solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Volterra,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Volterra => "volterra",
        }
    }
}

/// Rates (molecules/s) and cumulative counts per cell on `times`, which
/// starts at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTrace {
    pub model: SourceModel,
    pub method: Method,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub rates: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    /// Minimum rate per cell before clamping.
    pub min_rate: Vec<f64>,
    pub clamped: bool,
}

impl ModelTrace {
    pub fn final_count(&self, cell: usize) -> f64 {
        self.cumulative[cell].last().copied().unwrap_or(0.0)
    }

    pub fn peak_time(&self, cell: usize) -> f64 {
        let dt = self.times.get(1).copied().unwrap_or(0.0);
        grid_argmax(&self.rates[cell], dt)
    }

    pub fn cumulative_at(&self, cell: usize, t: f64) -> f64 {
        let dt = self.times[1];
        let m = ((t / dt).round() as usize).min(self.times.len() - 1);
        self.cumulative[cell][m]
    }
}

fn series_applies(scenario: &Scenario) -> bool {
    let cells = scenario.cells();
    cells.len() == 2 && cells[0].radius() == cells[1].radius()
}

pub fn choose_method(scenario: &Scenario, solver: Solver) -> Result<Method> {
    match solver {
        Solver::Volterra => Ok(Method::Volterra),
        Solver::Series if !series_applies(scenario) => Err(HarnessError::Spec(
            "the series solver needs exactly two cells of equal radius".into(),
        )),
        Solver::Series => Ok(Method::Series),
        Solver::Auto if series_applies(scenario) => Ok(Method::Series),
        Solver::Auto => Ok(Method::Volterra),
    }
}

pub fn evaluate(
    scenario: &Scenario,
    model: SourceModel,
    coefficients: &BarycenterCoefficients,
    grid: TimeGrid,
    solver: Solver,
    clamp: bool,
) -> Result<ModelTrace> {
    let sources = mcdiff_core::predict_barycenters_with(scenario, model, coefficients)?;
    evaluate_with_sources(scenario, &sources, grid, solver, clamp)
}

/// Evaluate with explicit negative-source points.
pub fn evaluate_with_sources(
    scenario: &Scenario,
    sources: &BarycenterSet,
    grid: TimeGrid,
    solver: Solver,
    clamp: bool,
) -> Result<ModelTrace> {
    let labels: Vec<String> = scenario
        .cells()
        .iter()
        .map(|c| c.label().to_owned())
        .collect();
    let times: Vec<f64> = (0..=grid.steps()).map(|m| grid.time(m)).collect();
    match choose_method(scenario, solver)? {
        Method::Volterra => {
            let options = SolverOptions {
                clamp_negative: clamp,
                ..SolverOptions::default()
            };
            let solution = solve_with_sources(scenario, sources, grid, options)?;
            let k = solution.cells();
            Ok(ModelTrace {
                model: sources.model,
                method: Method::Volterra,
                labels,
                times,
                rates: (0..k).map(|c| solution.rates(c).to_vec()).collect(),
                cumulative: (0..k).map(|c| solution.cumulative(c).to_vec()).collect(),
                min_rate: negative_rate_clamp_policy(&solution).min_rate,
                clamped: clamp,
            })
        }
        Method::Series => {
            let emitted = scenario.emitted() as f64;
            let mut rates = Vec::with_capacity(2);
            let mut cumulative = Vec::with_capacity(2);
            let mut min_rate = Vec::with_capacity(2);
            for target in 0..2 {
                let params = SeriesParams::from_scenario(scenario, sources, target)?;
                let mut r = Vec::with_capacity(times.len());
                let mut n = Vec::with_capacity(times.len());
                for &t in &times {
                    r.push(emitted * two_receiver_cir(&params, t, DEFAULT_SERIES_TOL)?);
                    n.push(two_receiver_cumulative(
                        &params,
                        emitted,
                        t,
                        DEFAULT_SERIES_TOL,
                    )?);
                }
                min_rate.push(r.iter().copied().fold(f64::INFINITY, f64::min));
                if clamp {
                    clamp_trace(&mut r, &mut n, grid.dt());
                }
                rates.push(r);
                cumulative.push(n);
            }
            Ok(ModelTrace {
                model: sources.model,
                method: Method::Series,
                labels,
                times,
                rates,
                cumulative,
                min_rate,
                clamped: clamp,
            })
        }
    }
}

// Same convention as the solver's clamp: zero the negative rates and
// re-accumulate by the trapezoid rule.
fn clamp_trace(rates: &mut [f64], cumulative: &mut [f64], dt: f64) {
    for r in rates.iter_mut() {
        *r = r.max(0.0);
    }
    let mut total = 0.0;
    cumulative[0] = 0.0;
    for m in 1..rates.len() {
        total += 0.5 * dt * (rates[m - 1] + rates[m]);
        cumulative[m] = total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_single_interferer_scenario;

    #[test]
    fn auto_picks_series_for_two_equal_cells() {
        let s = build_single_interferer_scenario(6.0, 3.0, 75.0, 1.0, 79.4, 10_000).unwrap();
        assert_eq!(choose_method(&s, Solver::Auto).unwrap(), Method::Series);
        let one = s.with_emitted(10).unwrap();
        assert_eq!(
            choose_method(&one, Solver::Volterra).unwrap(),
            Method::Volterra
        );
    }

    #[test]
    fn series_and_solver_agree() {
        let s = build_single_interferer_scenario(6.0, 3.0, 75.0, 1.0, 79.4, 10_000).unwrap();
        let grid = TimeGrid::with_horizon(1e-4, 1.0).unwrap();
        let c = BarycenterCoefficients::default();
        let a = evaluate(&s, SourceModel::Center, &c, grid, Solver::Series, false).unwrap();
        let b = evaluate(&s, SourceModel::Center, &c, grid, Solver::Volterra, false).unwrap();
        for k in 0..2 {
            let rel = (a.final_count(k) - b.final_count(k)).abs() / a.final_count(k);
            assert!(rel < 5e-3, "cell {k}: {rel}");
        }
        assert_eq!(a.times.len(), grid.steps() + 1);
        assert_eq!(a.rates[0].len(), b.rates[0].len());
    }

    #[test]
    fn clamping_keeps_rates_nonnegative() {
        // shadowed receiver: the center model gives it a negative early rate
        let s = build_single_interferer_scenario(6.0, 3.0, 0.0, 1.0, 79.4, 10_000).unwrap();
        let grid = TimeGrid::with_horizon(1e-4, 0.5).unwrap();
        let c = BarycenterCoefficients::default();
        let raw = evaluate(&s, SourceModel::Center, &c, grid, Solver::Series, false).unwrap();
        assert!(raw.min_rate[0] < 0.0);
        let clamped = evaluate(&s, SourceModel::Center, &c, grid, Solver::Series, true).unwrap();
        assert!(clamped.rates[0].iter().all(|&r| r >= 0.0));
        assert!(clamped.final_count(0) > raw.final_count(0));
    }
}
