//! Mode dispatch. Every mode writes into `<out>/<name>/`.

use std::path::{Path, PathBuf};

use mcdiff_core::particle::SimResult;
use mcdiff_core::{predict_barycenters_with, BarycenterSet, Scenario, SourceModel};
use serde::Serialize;

use crate::error::Result;
use crate::models::{evaluate, evaluate_with_sources, ModelTrace};
use crate::output::{events_csv, sim_csv, solution_csv, write_atomic};
use crate::reports::{
    barycenter_csv, barycenter_report, comparison_csv, peak_shift_report, BarycenterRow,
    PeakShiftReport, RunContext, Vec3Json,
};
use crate::scenario_file::ScenarioFile;
use crate::spec::{DetectionName, ExperimentSpec, Mode, Solver};
use crate::sweep::run_sweep;
use crate::{runner, SCHEMA_VERSION};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// Failed sweep points.
    pub failures: usize,
}

pub fn run(mode: Mode, spec: &ExperimentSpec, options: &RunOptions) -> Result<RunOutcome> {
    spec.validate(mode)?;
    let out = options
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = options.seed.unwrap_or(spec.seed);
    runner::with_threads(options.threads, || {
        if mode == Mode::Sweep {
            let o = run_sweep(spec, &out, seed)?;
            return Ok(RunOutcome {
                dir: o.dir,
                failures: o.failures,
            });
        }
        let dir = out.join(&spec.name);
        let scenario = spec.base_scenario()?;
        match mode {
            Mode::Simulate => simulate(spec, &scenario, seed, &dir)?,
            Mode::Model => models(spec, &scenario, spec.solver, "model", &dir)?,
            Mode::Solve => models(spec, &scenario, Solver::Volterra, "solve", &dir)?,
            Mode::Compare => compare(spec, &scenario, seed, &dir)?,
            Mode::Barycenter => barycenters(spec, &scenario, seed, &dir)?,
            Mode::Sweep => unreachable!(),
        }
        Ok(RunOutcome { dir, failures: 0 })
    })?
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

fn detection_name(d: DetectionName) -> &'static str {
    match d {
        DetectionName::Endpoint => "endpoint",
        DetectionName::Segment => "segment",
    }
}

fn context(spec: &ExperimentSpec, scenario: &Scenario, seed: u64, with_sim: bool) -> RunContext {
    let sim = with_sim.then(|| spec.simulation_or_default());
    RunContext {
        experiment: spec.name.clone(),
        seed,
        diffusion: scenario.diffusion(),
        emitted: scenario.emitted(),
        horizon_s: spec.time.horizon_s,
        model_dt_s: spec.time.dt_s,
        sim_dt_s: sim.as_ref().map(|s| s.dt_s),
        molecules: sim
            .as_ref()
            .map(|s| s.molecules.unwrap_or(scenario.emitted())),
        detection: sim.as_ref().map(|s| detection_name(s.detection)),
    }
}

#[derive(Serialize)]
struct SimSummary<'a> {
    schema: u32,
    experiment: &'a str,
    seed: u64,
    scenario: ScenarioFile,
    dt_s: f64,
    horizon_s: f64,
    detection: &'static str,
    molecules: u64,
    survivors: u64,
    absorbed: Vec<u64>,
    barycenters: Vec<Option<Vec3Json>>,
}

fn sim_summary<'a>(
    spec: &'a ExperimentSpec,
    scenario: &Scenario,
    seed: u64,
    result: &SimResult,
) -> SimSummary<'a> {
    let settings = spec.simulation_or_default();
    SimSummary {
        schema: SCHEMA_VERSION,
        experiment: &spec.name,
        seed,
        scenario: ScenarioFile::from_scenario(scenario),
        dt_s: settings.dt_s,
        horizon_s: settings.horizon_s,
        detection: detection_name(settings.detection),
        molecules: result.molecules(),
        survivors: result.survivors(),
        absorbed: (0..scenario.len()).map(|k| result.absorbed(k)).collect(),
        barycenters: result
            .barycenters()
            .into_iter()
            .map(|b| b.map(Into::into))
            .collect(),
    }
}

fn run_sim(spec: &ExperimentSpec, scenario: &Scenario, seed: u64, dir: &Path) -> Result<SimResult> {
    let config = spec.simulation_or_default().config(seed);
    let result = runner::simulate(scenario, &config)?;
    write_atomic(&dir.join("sim.csv"), &sim_csv(&result)?)?;
    if config.keep_events {
        write_atomic(&dir.join("events.csv"), &events_csv(&result)?)?;
    }
    Ok(result)
}

fn simulate(spec: &ExperimentSpec, scenario: &Scenario, seed: u64, dir: &Path) -> Result<()> {
    let result = run_sim(spec, scenario, seed, dir)?;
    write_atomic(
        &dir.join("summary.json"),
        &json_bytes(&sim_summary(spec, scenario, seed, &result)),
    )
}

#[derive(Serialize)]
struct ModelSummary {
    model: char,
    method: &'static str,
    clamped: bool,
    sources: Vec<Vec3Json>,
    n_final: Vec<f64>,
    peak_s: Vec<f64>,
    min_rate: Vec<f64>,
}

#[derive(Serialize)]
struct ModelsSummary<'a> {
    schema: u32,
    experiment: &'a str,
    scenario: ScenarioFile,
    dt_s: f64,
    horizon_s: f64,
    models: Vec<ModelSummary>,
}

fn model_summary(trace: &ModelTrace, sources: &BarycenterSet) -> ModelSummary {
    let k = trace.labels.len();
    ModelSummary {
        model: trace.model.letter(),
        method: trace.method.name(),
        clamped: trace.clamped,
        sources: sources.points.iter().map(|&p| p.into()).collect(),
        n_final: (0..k).map(|c| trace.final_count(c)).collect(),
        peak_s: (0..k).map(|c| trace.peak_time(c)).collect(),
        min_rate: trace.min_rate.clone(),
    }
}

fn models(
    spec: &ExperimentSpec,
    scenario: &Scenario,
    solver: Solver,
    prefix: &str,
    dir: &Path,
) -> Result<()> {
    let grid = spec.time.grid()?;
    let coefficients = spec.coefficients();
    let mut summaries = Vec::new();
    for model in spec.source_models()? {
        let sources = predict_barycenters_with(scenario, model, &coefficients)?;
        let trace = evaluate_with_sources(scenario, &sources, grid, solver, spec.clamp_negative)?;
        write_atomic(
            &dir.join(format!("{prefix}_{}.csv", model.letter())),
            &solution_csv(&trace)?,
        )?;
        summaries.push(model_summary(&trace, &sources));
    }
    let summary = ModelsSummary {
        schema: SCHEMA_VERSION,
        experiment: &spec.name,
        scenario: ScenarioFile::from_scenario(scenario),
        dt_s: spec.time.dt_s,
        horizon_s: spec.time.horizon_s,
        models: summaries,
    };
    write_atomic(&dir.join("summary.json"), &json_bytes(&summary))
}

fn compare(spec: &ExperimentSpec, scenario: &Scenario, seed: u64, dir: &Path) -> Result<()> {
    let grid = spec.time.grid()?;
    let coefficients = spec.coefficients();
    let result = run_sim(spec, scenario, seed, dir)?;
    let mut traces = Vec::new();
    for model in spec.source_models()? {
        let trace = evaluate(
            scenario,
            model,
            &coefficients,
            grid,
            spec.solver,
            spec.clamp_negative,
        )?;
        traces.push((model.letter().to_string(), trace));
    }
    if spec.measured_barycenters {
        let points = (0..scenario.len())
            .map(|k| mcdiff_core::particle::estimate_barycenter(&result, k))
            .collect::<mcdiff_core::Result<Vec<_>>>()?;
        let sources = BarycenterSet::from_points(scenario, SourceModel::Barycenter, points)?;
        let trace =
            evaluate_with_sources(scenario, &sources, grid, spec.solver, spec.clamp_negative)?;
        traces.push(("B_measured".to_owned(), trace));
    }
    let ctx = context(spec, scenario, seed, true);
    write_atomic(
        &dir.join("comparison.csv"),
        &comparison_csv(&ctx, scenario, &traces, Some(&result))?,
    )?;
    for (name, trace) in &traces {
        write_atomic(
            &dir.join(format!("model_{name}.csv")),
            &solution_csv(trace)?,
        )?;
    }
    write_atomic(
        &dir.join("summary.json"),
        &json_bytes(&sim_summary(spec, scenario, seed, &result)),
    )?;
    if spec.peak_shift {
        let target = spec.target_index(scenario)?;
        let config = spec.simulation_or_default().config(seed);
        let report: PeakShiftReport = peak_shift_report(
            scenario,
            target,
            &coefficients,
            grid,
            spec.solver,
            Some((&config, spec.peak_bandwidth_s)),
        )?;
        write_atomic(&dir.join("peak_shift.json"), &json_bytes(&report))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BarycenterSummary<'a> {
    schema: u32,
    experiment: &'a str,
    seed: u64,
    scenario: ScenarioFile,
    cells: Vec<BarycenterRow>,
}

fn barycenters(spec: &ExperimentSpec, scenario: &Scenario, seed: u64, dir: &Path) -> Result<()> {
    let coefficients = spec.coefficients();
    let result = run_sim(spec, scenario, seed, dir)?;
    let rows = barycenter_report(scenario, &coefficients, &result)?;
    let ctx = context(spec, scenario, seed, true);
    write_atomic(&dir.join("barycenters.csv"), &barycenter_csv(&ctx, &rows)?)?;
    let summary = BarycenterSummary {
        schema: SCHEMA_VERSION,
        experiment: &spec.name,
        seed,
        scenario: ScenarioFile::from_scenario(scenario),
        cells: rows,
    };
    write_atomic(&dir.join("summary.json"), &json_bytes(&summary))
}
