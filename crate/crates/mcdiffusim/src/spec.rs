//! Experiment spec JSON.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "theta_sweep",
//!   "single_interferer": { "r_r_um": 6, "d_um": 2, "theta_deg": 0 },
//!   "models": ["C", "S", "B"],
//!   "time": { "dt_s": 1e-4, "horizon_s": 2 },
//!   "simulation": { "dt_s": 1e-5, "molecules": 100000 },
//!   "sweep": { "theta_deg": [0, 15, 30] },
//!   "seed": 7
//! }
//! ```
//!
//! The scenario comes from exactly one of `scenario` (inline object or path
//! relative to the spec file) and `single_interferer`.

use std::path::{Path, PathBuf};

use mcdiff_core::particle::{Detection, SimConfig};
use mcdiff_core::{BarycenterCoefficients, Scenario, SourceModel, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::builders::build_single_interferer_scenario;
use crate::error::{io_err, HarnessError, Result};
use crate::scenario_file::{check_schema, load_scenario, ScenarioFile, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Model,
    Solve,
    Compare,
    Barycenter,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Model => "model",
            Mode::Solve => "solve",
            Mode::Compare => "compare",
            Mode::Barycenter => "barycenter",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Closed-form series for two equal cells, time marching otherwise.
    #[default]
    Auto,
    Series,
    Volterra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionName {
    Endpoint,
    #[default]
    Segment,
}

impl From<DetectionName> for Detection {
    fn from(d: DetectionName) -> Self {
        match d {
            DetectionName::Endpoint => Detection::Endpoint,
            DetectionName::Segment => Detection::Segment,
        }
    }
}

fn default_r_r() -> f64 {
    6.0
}
fn default_radius() -> f64 {
    1.0
}
fn default_diffusion() -> f64 {
    79.4
}
fn default_emitted() -> u64 {
    10_000
}
fn default_horizon() -> f64 {
    2.0
}
fn default_model_dt() -> f64 {
    1e-4
}
fn default_sim_dt() -> f64 {
    1e-5
}
fn default_bin_width() -> f64 {
    1e-3
}
fn default_true() -> bool {
    true
}
fn default_name() -> String {
    "experiment".to_owned()
}
fn default_seed() -> u64 {
    1
}
fn default_models() -> Vec<char> {
    vec!['C', 'S', 'B']
}
fn default_bandwidth() -> f64 {
    4e-3
}
fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Target on the z axis at `r_r_um`, interferer `d_um` from it at angle
/// `theta_deg` seen from the target (0 puts the interferer towards the
/// transmitter), in the y = 0 plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleInterferer {
    #[serde(default = "default_r_r")]
    pub r_r_um: f64,
    pub d_um: f64,
    pub theta_deg: f64,
    #[serde(default = "default_radius")]
    pub radius_um: f64,
    #[serde(default = "default_diffusion")]
    pub diffusion_um2_per_s: f64,
    #[serde(default = "default_emitted")]
    pub emitted: u64,
}

impl SingleInterferer {
    pub fn build(&self) -> Result<Scenario> {
        build_single_interferer_scenario(
            self.r_r_um,
            self.d_um,
            self.theta_deg,
            self.radius_um,
            self.diffusion_um2_per_s,
            self.emitted,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Path(PathBuf),
    Inline(ScenarioFile),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSettings {
    #[serde(default = "default_model_dt")]
    pub dt_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
}

impl Default for TimeSettings {
    fn default() -> Self {
        TimeSettings {
            dt_s: default_model_dt(),
            horizon_s: default_horizon(),
        }
    }
}

impl TimeSettings {
    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::with_horizon(self.dt_s, self.horizon_s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default = "default_sim_dt")]
    pub dt_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    /// Defaults to the scenario's emitted count.
    #[serde(default)]
    pub molecules: Option<u64>,
    #[serde(default)]
    pub detection: DetectionName,
    #[serde(default = "default_bin_width")]
    pub bin_width_s: f64,
    #[serde(default)]
    pub keep_events: bool,
    #[serde(default = "default_true")]
    pub crossing_correction: bool,
    #[serde(default = "default_true")]
    pub far_field_leap: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl SimSettings {
    pub fn config(&self, seed: u64) -> SimConfig {
        SimConfig {
            dt: self.dt_s,
            horizon: self.horizon_s,
            seed,
            molecules: self.molecules,
            detection: self.detection.into(),
            bin_width: self.bin_width_s,
            keep_events: self.keep_events,
            far_field_leap: self.far_field_leap,
            crossing_correction: self.crossing_correction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Output subdirectory; the spec name when absent.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub theta_deg: Vec<f64>,
    #[serde(default)]
    pub d_um: Vec<f64>,
    /// Moves the `alpha_target` cell to `|C| (cos a, sin a, 0)`.
    #[serde(default)]
    pub alpha_deg: Vec<f64>,
    #[serde(default)]
    pub alpha_target: Option<String>,
    /// Simulation time steps.
    #[serde(default)]
    pub dt_s: Vec<f64>,
}

/// Overrides of the empirical barycenter law.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientOverrides {
    pub gamma_floor: Option<f64>,
    pub gamma_near: Option<f64>,
    pub gamma_near_scale: Option<f64>,
    pub gamma_far: Option<f64>,
    pub gamma_far_scale: Option<f64>,
    pub delta_amplitude: Option<f64>,
    pub delta_decay: Option<f64>,
}

impl CoefficientOverrides {
    pub fn resolve(&self) -> BarycenterCoefficients {
        let d = BarycenterCoefficients::default();
        BarycenterCoefficients {
            gamma_floor: self.gamma_floor.unwrap_or(d.gamma_floor),
            gamma_near: self.gamma_near.unwrap_or(d.gamma_near),
            gamma_near_scale: self.gamma_near_scale.unwrap_or(d.gamma_near_scale),
            gamma_far: self.gamma_far.unwrap_or(d.gamma_far),
            gamma_far_scale: self.gamma_far_scale.unwrap_or(d.gamma_far_scale),
            delta_amplitude: self.delta_amplitude.unwrap_or(d.delta_amplitude),
            delta_decay: self.delta_decay.unwrap_or(d.delta_decay),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default = "default_name")]
    pub name: String,
    /// When present it must match the mode given on the command line.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub scenario: Option<ScenarioRef>,
    #[serde(default)]
    pub single_interferer: Option<SingleInterferer>,
    /// Label of the observed cell; the first cell when absent.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default = "default_models")]
    pub models: Vec<char>,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub time: TimeSettings,
    #[serde(default)]
    pub simulation: Option<SimSettings>,
    #[serde(default)]
    pub sweep: Option<SweepAxes>,
    #[serde(default)]
    pub clamp_negative: bool,
    #[serde(default)]
    pub coefficients: CoefficientOverrides,
    /// Compare mode: also evaluate the barycenter model with the simulated
    /// barycenters as negative sources.
    #[serde(default)]
    pub measured_barycenters: bool,
    /// Compare mode: add the peak-shift report, which reruns the simulation
    /// with the target alone.
    #[serde(default)]
    pub peak_shift: bool,
    /// Kernel bandwidth of the simulated peak-time estimate.
    #[serde(default = "default_bandwidth")]
    pub peak_bandwidth_s: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory relative scenario paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentSpec {
    /// Parse spec text read from `origin`; relative scenario paths resolve
    /// against its directory.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|source| HarnessError::Json {
                path: origin.to_owned(),
                source,
            })?;
        check_schema(spec.schema)?;
        spec.base_dir = origin.parent().map(Path::to_owned).unwrap_or_default();
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, path)
    }

    pub fn source_models(&self) -> Result<Vec<SourceModel>> {
        self.models
            .iter()
            .map(|&c| {
                SourceModel::from_letter(c).ok_or_else(|| {
                    HarnessError::Spec(format!("unknown model `{c}` (use C, S or B)"))
                })
            })
            .collect()
    }

    pub fn base_scenario(&self) -> Result<Scenario> {
        match (&self.scenario, &self.single_interferer) {
            (Some(_), Some(_)) => Err(HarnessError::Spec(
                "give either `scenario` or `single_interferer`, not both".into(),
            )),
            (None, None) => Err(HarnessError::Spec(
                "no scenario: add `scenario` or `single_interferer`".into(),
            )),
            (Some(ScenarioRef::Inline(file)), None) => file.to_scenario(),
            (Some(ScenarioRef::Path(p)), None) => load_scenario(&self.base_dir.join(p)),
            (None, Some(si)) => si.build(),
        }
    }

    /// Index of the observed cell in `scenario`.
    pub fn target_index(&self, scenario: &Scenario) -> Result<usize> {
        match &self.target {
            None => Ok(0),
            Some(label) => scenario
                .cells()
                .iter()
                .position(|c| c.label() == label)
                .ok_or_else(|| HarnessError::Spec(format!("no cell labelled `{label}`"))),
        }
    }

    pub fn coefficients(&self) -> BarycenterCoefficients {
        self.coefficients.resolve()
    }

    pub fn simulation_or_default(&self) -> SimSettings {
        self.simulation.clone().unwrap_or_default()
    }

    /// Checks that do not need the scenario to be built.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(HarnessError::Spec(format!(
                    "spec is for mode `{}`, invoked as `{}`",
                    m.name(),
                    mode.name()
                )));
            }
        }
        self.source_models()?;
        if let Some(si) = &self.single_interferer {
            check_angle("theta_deg", si.theta_deg)?;
        }
        if mode == Mode::Sweep {
            let axes = self
                .sweep
                .as_ref()
                .ok_or_else(|| HarnessError::Spec("sweep mode needs a `sweep` section".into()))?;
            if axes.theta_deg.is_empty()
                && axes.d_um.is_empty()
                && axes.alpha_deg.is_empty()
                && axes.dt_s.is_empty()
            {
                return Err(HarnessError::Spec("all sweep axes are empty".into()));
            }
            for &a in axes.theta_deg.iter().chain(&axes.alpha_deg) {
                check_angle("sweep angle", a)?;
            }
            if (!axes.theta_deg.is_empty() || !axes.d_um.is_empty())
                && self.single_interferer.is_none()
            {
                return Err(HarnessError::Spec(
                    "theta/d sweeps need a `single_interferer` base".into(),
                ));
            }
            if !axes.alpha_deg.is_empty() && self.scenario.is_none() {
                return Err(HarnessError::Spec("alpha sweeps need a `scenario`".into()));
            }
            if !axes.dt_s.is_empty() && self.simulation.is_none() {
                return Err(HarnessError::Spec(
                    "dt sweeps need a `simulation` section".into(),
                ));
            }
            if self.models.is_empty() && self.simulation.is_none() {
                return Err(HarnessError::Spec(
                    "nothing to run: no models and no simulation".into(),
                ));
            }
        }
        if !(self.peak_bandwidth_s > 0.0) {
            return Err(HarnessError::Spec("peak_bandwidth_s must be > 0".into()));
        }
        Ok(())
    }
}

fn check_angle(what: &str, deg: f64) -> Result<()> {
    if !(0.0..360.0).contains(&deg) {
        return Err(HarnessError::Spec(format!("{what} {deg} outside [0, 360)")));
    }
    Ok(())
}
