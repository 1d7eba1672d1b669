//! Scenario JSON: `{ "schema": 1, "diffusion_um2_per_s", "emitted", "cells": [...] }`.

use std::path::Path;

use mcdiff_core::{Scenario, SphericalCell, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellFile {
    pub label: String,
    pub center_um: [f64; 3],
    pub radius_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub diffusion_um2_per_s: f64,
    pub emitted: u64,
    pub cells: Vec<CellFile>,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        ScenarioFile {
            schema: SCHEMA_VERSION,
            diffusion_um2_per_s: scenario.diffusion(),
            emitted: scenario.emitted(),
            cells: scenario
                .cells()
                .iter()
                .map(|c| CellFile {
                    label: c.label().to_owned(),
                    center_um: c.center().to_array(),
                    radius_um: c.radius(),
                })
                .collect(),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        check_schema(self.schema)?;
        let cells = self
            .cells
            .iter()
            .map(|c| {
                SphericalCell::new(c.label.clone(), Vec3::from_array(c.center_um), c.radius_um)
            })
            .collect::<mcdiff_core::Result<Vec<_>>>()?;
        Ok(Scenario::new(
            self.diffusion_um2_per_s,
            self.emitted,
            cells,
        )?)
    }
}

pub(crate) fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(HarnessError::Schema {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_owned(),
        source,
    })?;
    file.to_scenario()
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    let text = scenario_to_json(scenario);
    crate::output::write_atomic(path, text.as_bytes())
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario))
        .expect("scenario serialization cannot fail");
    text.push('\n');
    text
}
