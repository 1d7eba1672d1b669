//! Peak-shift, barycenter and model-vs-simulation reports.

use mcdiff_core::particle::{SimConfig, SimResult};
use mcdiff_core::peak::smoothed_argmax;
use mcdiff_core::{
    predict_barycenters_with, single_peak_time, BarycenterCoefficients, Scenario, SourceModel,
    TimeGrid, Vec3,
};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::models::{evaluate, ModelTrace};
use crate::output::{csv_bytes, num};
use crate::runner;
use crate::spec::Solver;

/// Fewer target events than this make the smoothed argmax unreliable.
pub const MIN_PEAK_EVENTS: usize = 500;

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPeak {
    pub molecules: u64,
    pub events: usize,
    pub peak_s: Option<f64>,
    /// Same seed, target cell alone.
    pub single_events: usize,
    pub single_peak_s: Option<f64>,
    pub shift_s: Option<f64>,
    pub shift_sign: Option<i8>,
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakShiftReport {
    pub schema: u32,
    pub target: String,
    pub theory_peak_s: f64,
    pub model_method: &'static str,
    pub model_peak_s: f64,
    pub model_shift_s: f64,
    pub model_shift_sign: i8,
    pub simulation: Option<SimPeak>,
}

fn target_times(result: &SimResult, cell: usize) -> Vec<f64> {
    result
        .events()
        .iter()
        .filter(|e| e.cell == cell)
        .map(|e| e.time)
        .collect()
}

/// Theory peak of the target alone, B-model rate argmax and, given a
/// simulation config, the kernel-smoothed peak of simulated absorption times
/// against a run of the target alone on the same random streams.
pub fn peak_shift_report(
    scenario: &Scenario,
    target: usize,
    coefficients: &BarycenterCoefficients,
    grid: TimeGrid,
    solver: Solver,
    simulation: Option<(&SimConfig, f64)>,
) -> Result<PeakShiftReport> {
    let cell = scenario
        .cells()
        .get(target)
        .ok_or_else(|| HarnessError::Spec(format!("no cell {target}")))?;
    let theory = single_peak_time(cell.distance(), cell.radius(), scenario.diffusion());
    let trace = evaluate(
        scenario,
        SourceModel::Barycenter,
        coefficients,
        grid,
        solver,
        false,
    )?;
    let model_peak = trace.peak_time(target);
    let simulation = match simulation {
        None => None,
        Some((config, bandwidth)) => {
            let config = SimConfig {
                keep_events: true,
                ..config.clone()
            };
            let alone =
                Scenario::new(scenario.diffusion(), scenario.emitted(), vec![cell.clone()])?;
            let full = runner::simulate(scenario, &config)?;
            let single = runner::simulate(&alone, &config)?;
            let times = target_times(&full, target);
            let single_times = target_times(&single, 0);
            let peak = smoothed_argmax(&times, bandwidth, config.horizon);
            let single_peak = smoothed_argmax(&single_times, bandwidth, config.horizon);
            let noisy = times.len() < MIN_PEAK_EVENTS || single_times.len() < MIN_PEAK_EVENTS;
            if noisy {
                log::warn!(
                    "only {} / {} target absorptions: simulated peak time is unreliable",
                    times.len(),
                    single_times.len()
                );
            }
            let shift = peak.zip(single_peak).map(|(a, b)| a - b);
            Some(SimPeak {
                molecules: full.molecules(),
                events: times.len(),
                peak_s: peak,
                single_events: single_times.len(),
                single_peak_s: single_peak,
                shift_s: shift,
                shift_sign: shift.map(sign),
                noisy,
            })
        }
    };
    Ok(PeakShiftReport {
        schema: crate::SCHEMA_VERSION,
        target: cell.label().to_owned(),
        theory_peak_s: theory,
        model_method: trace.method.name(),
        model_peak_s: model_peak,
        model_shift_s: model_peak - theory,
        model_shift_sign: sign(model_peak - theory),
        simulation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarycenterRow {
    pub cell: String,
    pub center: Vec3Json,
    pub radius_um: f64,
    pub distance_um: f64,
    pub gamma: f64,
    pub predicted: Vec3Json,
    pub absorbed: u64,
    pub measured: Option<Vec3Json>,
    /// `|B - C| / R` of the measured point.
    pub measured_offset_r: Option<f64>,
    pub error_um: Option<f64>,
    pub error_r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vec3Json(pub [f64; 3]);

impl From<Vec3> for Vec3Json {
    fn from(v: Vec3) -> Self {
        Vec3Json(v.to_array())
    }
}

/// Predicted barycenters next to the ones measured in `result`. Cells without
/// absorptions have no measured point.
pub fn barycenter_report(
    scenario: &Scenario,
    coefficients: &BarycenterCoefficients,
    result: &SimResult,
) -> Result<Vec<BarycenterRow>> {
    let predicted = predict_barycenters_with(scenario, SourceModel::Barycenter, coefficients)?;
    let measured = result.barycenters();
    let mut rows = Vec::with_capacity(scenario.len());
    for (k, cell) in scenario.cells().iter().enumerate() {
        let b = predicted.points[k];
        let m = measured.get(k).copied().flatten();
        if m.is_none() {
            log::warn!(
                "cell `{}` absorbed nothing: barycenter undefined",
                cell.label()
            );
        }
        let r = cell.radius();
        rows.push(BarycenterRow {
            cell: cell.label().to_owned(),
            center: cell.center().into(),
            radius_um: r,
            distance_um: cell.distance(),
            gamma: coefficients.gamma(cell.distance(), r),
            predicted: b.into(),
            absorbed: result.absorbed(k),
            measured: m.map(Into::into),
            measured_offset_r: m.map(|m| m.distance(cell.center()) / r),
            error_um: m.map(|m| m.distance(b)),
            error_r: m.map(|m| m.distance(b) / r),
        });
    }
    Ok(rows)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn barycenter_csv(context: &RunContext, rows: &[BarycenterRow]) -> Result<Vec<u8>> {
    let mut header = context.header();
    header.extend(
        [
            "cell",
            "cx_um",
            "cy_um",
            "cz_um",
            "radius_um",
            "distance_um",
            "gamma",
            "bx_pred_um",
            "by_pred_um",
            "bz_pred_um",
            "absorbed",
            "bx_meas_um",
            "by_meas_um",
            "bz_meas_um",
            "offset_meas_r",
            "error_um",
            "error_r",
        ]
        .map(String::from),
    );
    let body = rows.iter().map(|r| {
        let mut row = context.values();
        row.push(r.cell.clone());
        row.extend(r.center.0.map(num));
        row.push(num(r.radius_um));
        row.push(num(r.distance_um));
        row.push(num(r.gamma));
        row.extend(r.predicted.0.map(num));
        row.push(r.absorbed.to_string());
        match r.measured {
            Some(m) => row.extend(m.0.map(num)),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        row.push(opt(r.measured_offset_r));
        row.push(opt(r.error_um));
        row.push(opt(r.error_r));
        row
    });
    csv_bytes(&header, body)
}

/// Run parameters repeated on every report row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub experiment: String,
    pub seed: u64,
    pub diffusion: f64,
    pub emitted: u64,
    pub horizon_s: f64,
    pub model_dt_s: f64,
    pub sim_dt_s: Option<f64>,
    pub molecules: Option<u64>,
    pub detection: Option<&'static str>,
}

impl RunContext {
    pub fn header(&self) -> Vec<String> {
        Self::columns()
    }

    pub fn columns() -> Vec<String> {
        [
            "experiment",
            "seed",
            "diffusion_um2_per_s",
            "emitted",
            "horizon_s",
            "model_dt_s",
            "sim_dt_s",
            "molecules",
            "detection",
        ]
        .map(String::from)
        .to_vec()
    }

    pub fn values(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.seed.to_string(),
            num(self.diffusion),
            self.emitted.to_string(),
            num(self.horizon_s),
            num(self.model_dt_s),
            opt(self.sim_dt_s),
            self.molecules.map(|m| m.to_string()).unwrap_or_default(),
            self.detection.unwrap_or_default().to_owned(),
        ]
    }
}

/// One row per cell and model, with the simulated count when available.
pub fn comparison_csv(
    context: &RunContext,
    scenario: &Scenario,
    traces: &[(String, ModelTrace)],
    sim: Option<&SimResult>,
) -> Result<Vec<u8>> {
    let mut header = context.header();
    header.extend(
        [
            "source",
            "method",
            "cell",
            "cx_um",
            "cy_um",
            "cz_um",
            "radius_um",
            "n_final",
            "peak_s",
            "sim_n_final",
            "rel_diff",
        ]
        .map(String::from),
    );
    let mut rows = Vec::new();
    for (name, trace) in traces {
        for (k, cell) in scenario.cells().iter().enumerate() {
            let n = trace.final_count(k);
            let s = sim.map(|r| r.absorbed(k) as f64);
            let mut row = context.values();
            row.push(name.clone());
            row.push(trace.method.name().to_owned());
            row.push(cell.label().to_owned());
            row.extend(cell.center().to_array().map(num));
            row.push(num(cell.radius()));
            row.push(num(n));
            row.push(num(trace.peak_time(k)));
            row.push(opt(s));
            row.push(opt(s.filter(|&s| s > 0.0).map(|s| (n - s) / s)));
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_single_interferer_scenario;
    use mcdiff_core::SphericalCell;

    fn grid() -> TimeGrid {
        TimeGrid::with_horizon(1e-4, 0.5).unwrap()
    }

    #[test]
    fn lone_cell_peaks_at_theory() {
        let cell = SphericalCell::new("R", Vec3::new(0.0, 0.0, 6.0), 1.0).unwrap();
        let s = Scenario::new(79.4, 10_000, vec![cell]).unwrap();
        let c = BarycenterCoefficients::default();
        let r = peak_shift_report(&s, 0, &c, grid(), Solver::Auto, None).unwrap();
        assert!(r.model_shift_s.abs() <= 1e-4, "{r:?}");
        assert_eq!(r.model_method, "volterra");
    }

    #[test]
    fn model_shift_signs() {
        let c = BarycenterCoefficients::default();
        let between = build_single_interferer_scenario(6.0, 3.0, 0.0, 1.0, 79.4, 10_000).unwrap();
        let r = peak_shift_report(&between, 0, &c, grid(), Solver::Auto, None).unwrap();
        assert_eq!(r.model_shift_sign, 1, "{r:?}");
        // I at z = -3, behind the transmitter
        let behind = build_single_interferer_scenario(6.0, 9.0, 0.0, 1.0, 79.4, 10_000).unwrap();
        let r = peak_shift_report(&behind, 0, &c, grid(), Solver::Auto, None).unwrap();
        assert_eq!(r.model_shift_sign, -1, "{r:?}");
    }

    #[test]
    fn few_events_are_flagged() {
        let s = build_single_interferer_scenario(6.0, 3.0, 0.0, 1.0, 79.4, 200).unwrap();
        let c = BarycenterCoefficients::default();
        let config = SimConfig::new(1e-4, 0.5, 3);
        let r = peak_shift_report(&s, 0, &c, grid(), Solver::Auto, Some((&config, 4e-3))).unwrap();
        assert!(r.simulation.unwrap().noisy);
    }
}
