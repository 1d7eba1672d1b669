use std::path::{Path, PathBuf};

use mcdiff_core::{Scenario, SphericalCell, Vec3};
use mcdiffusim::scenario_file::scenario_to_json;
use mcdiffusim::spec::Mode;
use mcdiffusim::{load_scenario, save_scenario, ExperimentSpec, HarnessError};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        1.0f64..200.0,
        1u64..1_000_000,
        prop::collection::vec((2.0f64..40.0, 0.0f64..TAU, -1.0f64..1.0, 0.3f64..1.5), 1..5),
    )
        .prop_filter_map("cells overlap", |(diffusion, emitted, raw)| {
            let cells = raw
                .into_iter()
                .enumerate()
                .map(|(i, (r, phi, cos_t, radius))| {
                    let sin_t = (1.0 - cos_t * cos_t).sqrt();
                    let c = Vec3::new(r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t);
                    SphericalCell::new(format!("cell{i}"), c, radius).ok()
                })
                .collect::<Option<Vec<_>>>()?;
            Scenario::new(diffusion, emitted, cells).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_round_trip(scenario in arb_scenario()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&path, &scenario).unwrap();
        let back = load_scenario(&path).unwrap();
        prop_assert_eq!(&back, &scenario);
        save_scenario(&path, &back).unwrap();
        prop_assert_eq!(std::fs::read_to_string(&path).unwrap(), scenario_to_json(&scenario));
    }
}

#[test]
fn every_preset_validates() {
    let mut seen = 0;
    for entry in std::fs::read_dir(presets()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with("_scenario.json") {
            load_scenario(&path).unwrap();
            continue;
        }
        let spec = ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mode = spec.mode.unwrap_or_else(|| panic!("{name} has no mode"));
        spec.validate(mode)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        spec.base_scenario()
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn multi_interferer_layout_stays_valid_along_the_arc() {
    let spec = ExperimentSpec::load(&presets().join("multi_interferer.json")).unwrap();
    let points = mcdiffusim::sweep::sweep_points(&spec);
    assert_eq!(points.len(), 13);
    let base = spec.base_scenario().unwrap();
    for p in points {
        let s = mcdiffusim::place_at_alpha(&base, 0, p.alpha_deg.unwrap()).unwrap();
        assert!((s.cells()[0].distance() - 6.0).abs() < 1e-12);
    }
}

#[test]
fn schema_version_is_checked() {
    let text = r#"{"schema": 2, "name": "x"}"#;
    let err = ExperimentSpec::from_json(text, Path::new("x.json")).unwrap_err();
    assert!(matches!(
        err,
        HarnessError::Schema {
            found: 2,
            expected: 1
        }
    ));
    let text =
        r#"{"schema": 1, "diffusion_um2_per_s": 79.4, "emitted": 1, "cells": [], "extra": 0}"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(
        load_scenario(&path),
        Err(HarnessError::Json { .. })
    ));
}

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(text, Path::new("spec.json")).unwrap()
}

#[test]
fn sweep_validation() {
    let base = r#""single_interferer": {"d_um": 2, "theta_deg": 0}"#;
    let empty = spec(&format!(r#"{{ {base}, "sweep": {{}} }}"#));
    assert!(empty.validate(Mode::Sweep).is_err());
    let missing = spec(&format!(r#"{{ {base} }}"#));
    assert!(missing.validate(Mode::Sweep).is_err());
    let angle = spec(&format!(
        r#"{{ {base}, "sweep": {{"theta_deg": [0, 360]}} }}"#
    ));
    assert!(angle.validate(Mode::Sweep).is_err());
    let dt = spec(&format!(r#"{{ {base}, "sweep": {{"dt_s": [1e-4]}} }}"#));
    assert!(dt.validate(Mode::Sweep).is_err());
    let ok = spec(&format!(
        r#"{{ {base}, "sweep": {{"theta_deg": [0, 15]}} }}"#
    ));
    ok.validate(Mode::Sweep).unwrap();
    assert!(spec(r#"{"mode": "model"}"#).validate(Mode::Sweep).is_err());
    assert!(spec(r#"{"models": ["X"]}"#).validate(Mode::Model).is_err());
}
