//! Cartesian sweeps over target angle, interferer distance and angle, and
//! simulation step.
//!
//! Each point writes `<out>/<experiment>/<axis-values>.csv` in long format
//! (one row per source and cell). `summary.csv` holds one wide row per point
//! and `manifest.jsonl` records the status of every point.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use mcdiff_core::particle::SimResult;
use mcdiff_core::peak::smoothed_argmax;
use mcdiff_core::Scenario;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders::place_at_alpha;
use crate::error::{io_err, HarnessError, Result};
use crate::models::{evaluate, ModelTrace};
use crate::output::{csv_bytes, num, write_atomic};
use crate::reports::RunContext;
use crate::runner;
use crate::spec::{ExperimentSpec, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepPoint {
    pub index: usize,
    pub alpha_deg: Option<f64>,
    pub d_um: Option<f64>,
    pub theta_deg: Option<f64>,
    pub dt_s: Option<f64>,
}

impl SweepPoint {
    /// Deterministic file stem, e.g. `d=2_theta=15`.
    pub fn name(&self) -> String {
        let parts: Vec<String> = [
            ("alpha", self.alpha_deg),
            ("d", self.d_um),
            ("theta", self.theta_deg),
            ("dt", self.dt_s),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
        .collect();
        parts.join("_")
    }

    /// Seed of the point's simulation. The step is left out so that a step
    /// sweep reuses the same random streams.
    pub fn seed(&self, base: u64) -> u64 {
        let mut h = splitmix(base);
        for v in [self.alpha_deg, self.d_um, self.theta_deg] {
            h = splitmix(h ^ v.map_or(u64::MAX, f64::to_bits));
        }
        h
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn axis(values: &[f64]) -> Vec<Option<f64>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Points in the order alpha, d, theta, dt (last axis fastest).
pub fn sweep_points(spec: &ExperimentSpec) -> Vec<SweepPoint> {
    let axes = spec.sweep.clone().unwrap_or_default();
    let mut points = Vec::new();
    for &alpha_deg in &axis(&axes.alpha_deg) {
        for &d_um in &axis(&axes.d_um) {
            for &theta_deg in &axis(&axes.theta_deg) {
                for &dt_s in &axis(&axes.dt_s) {
                    points.push(SweepPoint {
                        index: points.len(),
                        alpha_deg,
                        d_um,
                        theta_deg,
                        dt_s,
                    });
                }
            }
        }
    }
    points
}

fn point_scenario(spec: &ExperimentSpec, point: &SweepPoint) -> Result<Scenario> {
    if let Some(si) = &spec.single_interferer {
        let mut si = si.clone();
        if let Some(d) = point.d_um {
            si.d_um = d;
        }
        if let Some(t) = point.theta_deg {
            si.theta_deg = t;
        }
        return si.build();
    }
    let base = spec.base_scenario()?;
    match point.alpha_deg {
        None => Ok(base),
        Some(alpha) => {
            let label = spec.sweep.as_ref().and_then(|s| s.alpha_target.clone());
            let target = match label {
                Some(l) => base
                    .cells()
                    .iter()
                    .position(|c| c.label() == l)
                    .ok_or_else(|| HarnessError::Spec(format!("no cell labelled `{l}`")))?,
                None => spec.target_index(&base)?,
            };
            place_at_alpha(&base, target, alpha)
        }
    }
}

struct SimPart {
    result: SimResult,
    peaks: Vec<Option<f64>>,
}

struct PointResult {
    scenario: Scenario,
    traces: Vec<(String, ModelTrace)>,
    sim: Option<SimPart>,
}

fn run_point(spec: &ExperimentSpec, point: &SweepPoint, seed: u64) -> Result<PointResult> {
    let scenario = point_scenario(spec, point)?;
    let grid = spec.time.grid()?;
    let coefficients = spec.coefficients();
    let mut traces = Vec::new();
    for model in spec.source_models()? {
        let trace = evaluate(
            &scenario,
            model,
            &coefficients,
            grid,
            spec.solver,
            spec.clamp_negative,
        )?;
        traces.push((model.letter().to_string(), trace));
    }
    let sim = match &spec.simulation {
        None => None,
        Some(settings) => {
            let mut config = settings.config(point.seed(seed));
            config.keep_events = true;
            if let Some(dt) = point.dt_s {
                config.dt = dt;
            }
            let result = runner::simulate(&scenario, &config)?;
            let peaks = (0..scenario.len())
                .map(|k| {
                    let times: Vec<f64> = result
                        .events()
                        .iter()
                        .filter(|e| e.cell == k)
                        .map(|e| e.time)
                        .collect();
                    smoothed_argmax(&times, spec.peak_bandwidth_s, config.horizon)
                })
                .collect();
            Some(SimPart { result, peaks })
        }
    };
    Ok(PointResult {
        scenario,
        traces,
        sim,
    })
}

fn context(
    spec: &ExperimentSpec,
    experiment: &str,
    point: &SweepPoint,
    seed: u64,
    s: &Scenario,
) -> RunContext {
    let sim = spec.simulation.as_ref();
    RunContext {
        experiment: experiment.to_owned(),
        seed: point.seed(seed),
        diffusion: s.diffusion(),
        emitted: s.emitted(),
        horizon_s: spec.time.horizon_s,
        model_dt_s: spec.time.dt_s,
        sim_dt_s: sim.map(|c| point.dt_s.unwrap_or(c.dt_s)),
        molecules: sim.map(|c| c.molecules.unwrap_or(s.emitted())),
        detection: sim.map(|c| match c.detection {
            crate::spec::DetectionName::Endpoint => "endpoint",
            crate::spec::DetectionName::Segment => "segment",
        }),
    }
}

fn axis_values(point: &SweepPoint) -> Vec<String> {
    [point.alpha_deg, point.d_um, point.theta_deg, point.dt_s]
        .map(|v| v.map(num).unwrap_or_default())
        .to_vec()
}

const AXIS_HEADER: [&str; 4] = ["alpha_deg", "d_um", "theta_deg", "dt_s"];

fn point_csv(
    ctx: &RunContext,
    point: &SweepPoint,
    target: usize,
    r: &PointResult,
) -> Result<Vec<u8>> {
    let mut header = ctx.header();
    header.extend(AXIS_HEADER.map(String::from));
    header.extend(
        [
            "source",
            "method",
            "cell",
            "cx_um",
            "cy_um",
            "cz_um",
            "radius_um",
            "is_target",
            "n_final",
            "peak_s",
        ]
        .map(String::from),
    );
    let mut rows = Vec::new();
    let mut push = |source: &str, method: &str, k: usize, n: String, peak: String| {
        let cell = &r.scenario.cells()[k];
        let mut row = ctx.values();
        row.extend(axis_values(point));
        row.push(source.to_owned());
        row.push(method.to_owned());
        row.push(cell.label().to_owned());
        row.extend(cell.center().to_array().map(num));
        row.push(num(cell.radius()));
        row.push(u8::from(k == target).to_string());
        row.push(n);
        row.push(peak);
        rows.push(row);
    };
    for (name, trace) in &r.traces {
        for k in 0..r.scenario.len() {
            push(
                name,
                trace.method.name(),
                k,
                num(trace.final_count(k)),
                num(trace.peak_time(k)),
            );
        }
    }
    if let Some(sim) = &r.sim {
        for k in 0..r.scenario.len() {
            let peak = sim.peaks[k].map(num).unwrap_or_default();
            push(
                "sim",
                "particle",
                k,
                sim.result.absorbed(k).to_string(),
                peak,
            );
        }
    }
    csv_bytes(&header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub schema: u32,
    pub point: usize,
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub points: usize,
    pub failures: usize,
}

fn append(manifest: &Mutex<File>, path: &Path, entry: &ManifestEntry) -> Result<()> {
    let mut line = serde_json::to_string(entry).expect("manifest entry serializes");
    line.push('\n');
    let mut f = manifest.lock().unwrap_or_else(|e| e.into_inner());
    f.write_all(line.as_bytes()).map_err(io_err(path))
}

pub fn run_sweep(spec: &ExperimentSpec, out: &Path, seed: u64) -> Result<SweepOutcome> {
    spec.validate(Mode::Sweep)?;
    let experiment = spec
        .sweep
        .as_ref()
        .and_then(|s| s.experiment.clone())
        .unwrap_or_else(|| spec.name.clone());
    let dir = out.join(&experiment);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let manifest_path = dir.join("manifest.jsonl");
    let manifest = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&manifest_path)
        .map_err(io_err(&manifest_path))?;
    let manifest = Mutex::new(manifest);

    let models = spec.source_models()?;
    let points = sweep_points(spec);
    // the unswept base placement may itself be invalid, so take the cell
    // labels from the first point that builds
    let probe = points
        .iter()
        .find_map(|p| point_scenario(spec, p).ok())
        .map_or_else(|| spec.base_scenario(), Ok)?;
    let target = spec.target_index(&probe)?;
    let labels: Vec<String> = probe.cells().iter().map(|c| c.label().to_owned()).collect();

    let results: Vec<(ManifestEntry, Option<Vec<String>>)> = points
        .par_iter()
        .map(|point| {
            let name = point.name();
            let outcome = run_point(spec, point, seed).and_then(|r| {
                if r.scenario.len() != labels.len() {
                    return Err(HarnessError::Spec(
                        "cell count changed across the sweep".into(),
                    ));
                }
                let ctx = context(spec, &experiment, point, seed, &r.scenario);
                let file = format!("{name}.csv");
                write_atomic(&dir.join(&file), &point_csv(&ctx, point, target, &r)?)?;
                Ok((file, summary_values(&ctx, point, target, &r)))
            });
            let (entry, row) = match outcome {
                Ok((file, row)) => (
                    ManifestEntry {
                        schema: crate::SCHEMA_VERSION,
                        point: point.index,
                        name,
                        status: "ok".into(),
                        file: Some(file),
                        error: None,
                    },
                    Some(row),
                ),
                Err(e) => {
                    log::error!("sweep point {name}: {e}");
                    (
                        ManifestEntry {
                            schema: crate::SCHEMA_VERSION,
                            point: point.index,
                            name,
                            status: "error".into(),
                            file: None,
                            error: Some(e.to_string()),
                        },
                        None,
                    )
                }
            };
            if let Err(e) = append(&manifest, &manifest_path, &entry) {
                log::error!("{e}");
            }
            (entry, row)
        })
        .collect();
    drop(manifest);

    // rewrite in point order so reruns are byte-identical
    let mut text = String::new();
    for (entry, _) in &results {
        text.push_str(&serde_json::to_string(entry).expect("manifest entry serializes"));
        text.push('\n');
    }
    write_atomic(&manifest_path, text.as_bytes())?;

    let sources: Vec<String> = models
        .iter()
        .map(|m| m.letter().to_string())
        .chain(spec.simulation.as_ref().map(|_| "sim".to_owned()))
        .collect();
    let mut header: Vec<String> = vec!["point".into(), "status".into()];
    header.extend(RunContext::columns());
    header.extend(AXIS_HEADER.map(String::from));
    for s in &sources {
        header.extend(labels.iter().map(|l| format!("n_{l}_{s}")));
        header.push(format!("peak_{}_{s}", labels[target]));
    }
    let width = header.len();
    let rows = results.iter().zip(&points).map(|((entry, row), point)| {
        let mut out = vec![entry.point.to_string(), entry.status.clone()];
        match row {
            Some(values) => out.extend(values.iter().cloned()),
            None => {
                out.extend(std::iter::repeat_n(
                    String::new(),
                    RunContext::columns().len(),
                ));
                out.extend(axis_values(point));
            }
        }
        out.resize(width, String::new());
        out
    });
    write_atomic(&dir.join("summary.csv"), &csv_bytes(&header, rows)?)?;

    let failures = results.iter().filter(|(e, _)| e.status != "ok").count();
    Ok(SweepOutcome {
        dir,
        points: points.len(),
        failures,
    })
}

fn summary_values(
    ctx: &RunContext,
    point: &SweepPoint,
    target: usize,
    r: &PointResult,
) -> Vec<String> {
    let mut row = ctx.values();
    row.extend(axis_values(point));
    for (_, trace) in &r.traces {
        row.extend((0..r.scenario.len()).map(|k| num(trace.final_count(k))));
        row.push(num(trace.peak_time(target)));
    }
    if let Some(sim) = &r.sim {
        row.extend((0..r.scenario.len()).map(|k| sim.result.absorbed(k).to_string()));
        row.push(sim.peaks[target].map(num).unwrap_or_default());
    }
    row
}
