//! Experiment harness around `mcdiff-core`: JSON scenarios and experiment
//! specs, parallel simulation, model evaluation, reports and sweeps with CSV
//! output.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod builders;
pub mod error;
pub mod models;
pub mod output;
pub mod reports;
pub mod runner;
pub mod scenario_file;
pub mod spec;
pub mod sweep;

pub use app::{run, RunOptions, RunOutcome};
pub use builders::{build_single_interferer_scenario, place_at_alpha};
pub use error::{HarnessError, Result};
pub use scenario_file::{load_scenario, save_scenario, ScenarioFile, SCHEMA_VERSION};
pub use spec::{ExperimentSpec, Mode};
