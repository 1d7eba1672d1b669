//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.
//!
//! Expected wall time on one core is about three and a half minutes, most of it in the
//! coupled 1e-6 / 1e-4 s endpoint runs of criterion 5.

use std::time::Instant;

use mcdiff_core::analytic::DEFAULT_SERIES_TOL;
use mcdiff_core::particle::{Detection, SimConfig, SimResult};
use mcdiff_core::volterra::{solve_with_sources, SolverOptions};
use mcdiff_core::{
    cumulative_single, kernel_distances, predict_barycenters, single_peak_time,
    two_receiver_cumulative, BarycenterCoefficients, Scenario, SeriesParams, SourceModel,
    SphericalCell, TimeGrid, Vec3,
};
use mcdiffusim::build_single_interferer_scenario;
use mcdiffusim::models::evaluate;
use mcdiffusim::reports::peak_shift_report;
use mcdiffusim::runner;
use mcdiffusim::spec::Solver;

const D: f64 = 79.4;
const R: f64 = 1.0;
const N_T: u64 = 10_000;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn pair(r_r: f64, d: f64, theta_deg: f64) -> Scenario {
    build_single_interferer_scenario(r_r, d, theta_deg, R, D, N_T).expect("valid placement")
}

fn lone(center: Vec3) -> Scenario {
    let cell = SphericalCell::new("R", center, R).unwrap();
    Scenario::new(D, N_T, vec![cell]).unwrap()
}

fn sim_config(dt: f64, horizon: f64, seed: u64, molecules: u64) -> SimConfig {
    SimConfig {
        molecules: Some(molecules),
        ..SimConfig::new(dt, horizon, seed)
    }
}

fn single_receiver() -> Outcome {
    let analytic = cumulative_single(N_T as f64, 6.0, R, D, 2.0).unwrap();
    let config = sim_config(1e-5, 2.0, 2024, N_T);
    let sim = runner::simulate(&lone(Vec3::new(0.0, 0.0, 6.0)), &config).unwrap();
    let n = sim.absorbed(0) as f64;
    let ok = (analytic - 1298.0).abs() < 1.0 && (n - analytic).abs() <= 110.0;
    (
        ok,
        format!("closed form {analytic:.2} (expect ~1298), simulated {n} (within +-110)"),
    )
}

fn series_vs_solver() -> Outcome {
    // r_I = r_R = 6 with d = 3 puts the interferer at cos(theta) = 1/4
    let s = pair(6.0, 3.0, 0.25f64.acos().to_degrees());
    let r_i = s.cells()[1].distance();
    let sources = predict_barycenters(&s, SourceModel::Center).unwrap();
    let grid = TimeGrid::with_horizon(1e-4, 2.0).unwrap();
    let solution = solve_with_sources(&s, &sources, grid, SolverOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let params = SeriesParams::from_scenario(&s, &sources, k).unwrap();
        for t in [0.25, 0.5, 1.0, 2.0] {
            let series =
                two_receiver_cumulative(&params, N_T as f64, t, DEFAULT_SERIES_TOL).unwrap();
            let m = (t / grid.dt()).round() as usize;
            let rel = (solution.cumulative(k)[m] - series).abs() / series;
            worst = worst.max(rel);
        }
    }
    let ok = (r_i - 6.0).abs() < 1e-9 && worst < 5e-3;
    (
        ok,
        format!("r_I = {r_i:.6}, worst relative gap {:.3e} (< 5e-3)", worst),
    )
}

fn far_interferer() -> Outcome {
    let s = pair(6.0, 600.0, 180.0);
    let single = cumulative_single(N_T as f64, 6.0, R, D, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    for model in [
        SourceModel::Center,
        SourceModel::Surface,
        SourceModel::Barycenter,
    ] {
        let sources = predict_barycenters(&s, model).unwrap();
        let params = SeriesParams::from_scenario(&s, &sources, 0).unwrap();
        let n = two_receiver_cumulative(&params, N_T as f64, 2.0, DEFAULT_SERIES_TOL).unwrap();
        worst = worst.max((n - single).abs() / single);
    }
    (
        worst < 1e-3,
        format!("worst relative gap to the lone receiver {worst:.3e} (< 1e-3)"),
    )
}

fn peak_shift() -> Outcome {
    let theory = single_peak_time(6.0, R, D);
    let grid = TimeGrid::with_horizon(1e-4, 0.5).unwrap();
    let config = sim_config(1e-5, 0.5, 1, 400_000);
    let c = BarycenterCoefficients::default();
    let mut ok = (theory - 0.0525).abs() < 1e-4;
    let mut detail = format!("theory {theory:.5} s");
    // interferer at z = 3 (between) and z = -2 (behind the transmitter)
    for (name, d, want) in [("between", 3.0, 1i8), ("behind", 8.0, -1i8)] {
        let r = peak_shift_report(
            &pair(6.0, d, 0.0),
            0,
            &c,
            grid,
            Solver::Auto,
            Some((&config, 4e-3)),
        )
        .unwrap();
        let sim = r.simulation.unwrap();
        ok &= r.model_shift_sign == want && sim.shift_sign == Some(want) && !sim.noisy;
        detail += &format!(
            "; {name}: model {:.5} s, sim {:.5} s vs alone {:.5} s",
            r.model_peak_s,
            sim.peak_s.unwrap_or(f64::NAN),
            sim.single_peak_s.unwrap_or(f64::NAN)
        );
    }
    (ok, detail)
}

fn step_bias() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for (theta, target) in [(0.0, -4.5), (180.0, 7.5)] {
        let s = pair(4.0, 2.0, theta);
        let config = SimConfig {
            detection: Detection::Endpoint,
            ..sim_config(1e-6, 0.5, 17, 100_000)
        };
        let (fine, coarse) = runner::simulate_coupled(&s, &config, 100).unwrap();
        let (f, c) = (fine.absorbed(0) as f64, coarse.absorbed(0) as f64);
        let gap = 100.0 * (f - c) / c;
        ok &= (gap - target).abs() <= 2.0;
        detail += &format!(
            "theta {theta}: dt 1e-6 {f}, dt 1e-4 {c}, gap {gap:+.2}% (want {target:+}+-2); "
        );
    }
    (ok, detail.trim_end_matches("; ").to_owned())
}

fn bracketing() -> Outcome {
    let grid = TimeGrid::with_horizon(1e-4, 2.0).unwrap();
    let coefficients = BarycenterCoefficients::default();
    let mut ok = true;
    let mut detail = String::new();
    for theta in [0.0, 30.0, 60.0] {
        let s = pair(6.0, 2.0, theta);
        let n = |model| {
            evaluate(&s, model, &coefficients, grid, Solver::Auto, false)
                .unwrap()
                .final_count(0)
        };
        let (c, sm, b) = (
            n(SourceModel::Center),
            n(SourceModel::Surface),
            n(SourceModel::Barycenter),
        );
        let molecules = 300_000;
        let sim = runner::simulate(&s, &sim_config(1e-5, 2.0, 29, molecules)).unwrap();
        let scaled = sim.absorbed(0) as f64 * N_T as f64 / molecules as f64;
        let between = c.min(sm) <= scaled && scaled <= c.max(sm);
        let rel = (b - scaled).abs() / scaled;
        ok &= between && rel <= 0.03;
        detail += &format!(
            "theta {theta}: C {c:.1} sim {scaled:.1} S {sm:.1}, B off by {:.2}%; ",
            100.0 * rel
        );
    }
    (ok, detail.trim_end_matches("; ").to_owned())
}

fn offset(result: &SimResult, scenario: &Scenario, k: usize) -> Vec3 {
    result.barycenters()[k].expect("absorptions") - scenario.cells()[k].center()
}

fn barycenters() -> Outcome {
    let c = BarycenterCoefficients::default();
    let mut ok = true;
    let mut detail = String::from("isolated |B-C|/R vs gamma:");
    for r in [2.0, 4.0, 6.0, 8.0] {
        let s = lone(Vec3::new(r, 0.0, 0.0));
        let sim = runner::simulate(&s, &sim_config(1e-5, 2.0, 41, 200_000)).unwrap();
        let measured = offset(&sim, &s, 0).norm() / R;
        let gamma = c.gamma(r, R);
        let pass = (measured - gamma).abs() <= 0.03;
        ok &= pass;
        detail += &format!(
            " r={r} {measured:.3}/{gamma:.3}{}",
            if pass { "" } else { "(x)" }
        );
    }
    detail += "; revolving, worst |dB|/R:";
    for d in [4.0, 6.0] {
        let mut worst: f64 = 0.0;
        for theta in [30.0, 60.0, 90.0, 120.0, 150.0, 180.0] {
            let s = pair(6.0, d, theta);
            let predicted = predict_barycenters(&s, SourceModel::Barycenter).unwrap();
            let sim = runner::simulate(&s, &sim_config(1e-5, 2.0, 43, 100_000)).unwrap();
            for k in 0..2 {
                let measured = sim.barycenters()[k].expect("absorptions");
                worst = worst.max(measured.distance(predicted.points[k]) / R);
            }
        }
        ok &= worst <= 0.1;
        detail += &format!(" d={d} {worst:.3}");
    }
    (ok, detail)
}

fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let k = axis / axis.norm();
    let cross = Vec3::new(
        k.y * v.z - k.z * v.y,
        k.z * v.x - k.x * v.z,
        k.x * v.y - k.y * v.x,
    );
    v * angle.cos() + cross * angle.sin() + k * (k.dot(v) * (1.0 - angle.cos()))
}

fn properties() -> Outcome {
    let mut failures = Vec::new();

    let s = pair(6.0, 2.0, 45.0);
    let config = SimConfig {
        keep_events: true,
        ..sim_config(1e-5, 1.0, 53, 20_000)
    };
    let one = runner::with_threads(Some(1), || runner::simulate(&s, &config))
        .unwrap()
        .unwrap();
    let four = runner::with_threads(Some(4), || runner::simulate(&s, &config))
        .unwrap()
        .unwrap();
    let absorbed: u64 = (0..2).map(|k| one.absorbed(k)).sum();
    if absorbed + one.survivors() != one.molecules() || absorbed > one.molecules() {
        failures.push("conservation");
    }
    if (0..2).any(|k| one.counts(k).windows(2).any(|w| w[1] < w[0])) {
        failures.push("monotone counts");
    }
    if one != four {
        failures.push("thread-count determinism");
    }

    let axis = Vec3::new(0.3, -1.2, 0.7);
    let angle = 2.1;
    let rotated = Scenario::new(
        D,
        N_T,
        s.cells()
            .iter()
            .map(|c| {
                SphericalCell::new(c.label(), rotate(c.center(), axis, angle), c.radius()).unwrap()
            })
            .collect(),
    )
    .unwrap();
    for model in [
        SourceModel::Center,
        SourceModel::Surface,
        SourceModel::Barycenter,
    ] {
        let a = predict_barycenters(&s, model).unwrap();
        let b = predict_barycenters(&rotated, model).unwrap();
        let (da, db) = (kernel_distances(&s, &a), kernel_distances(&rotated, &b));
        for k in 0..2 {
            if rotate(a.points[k], axis, angle).distance(b.points[k]) > 1e-12 {
                failures.push("rotation equivariance of sources");
            }
            for j in 0..2 {
                if (da.get(k, j) - db.get(k, j)).abs() > 1e-12 {
                    failures.push("rotation invariance of distances");
                }
            }
        }
    }

    let mirror = Scenario::new(
        D,
        N_T,
        vec![
            SphericalCell::new("A", Vec3::new(5.0, 1.5, 0.0), R).unwrap(),
            SphericalCell::new("B", Vec3::new(5.0, -1.5, 0.0), R).unwrap(),
        ],
    )
    .unwrap();
    let grid = TimeGrid::with_horizon(1e-4, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for model in [
        SourceModel::Center,
        SourceModel::Surface,
        SourceModel::Barycenter,
    ] {
        let sources = predict_barycenters(&mirror, model).unwrap();
        let sol = solve_with_sources(&mirror, &sources, grid, SolverOptions::default()).unwrap();
        let scale = sol.rates(0).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        for (a, b) in sol.rates(0).iter().zip(sol.rates(1)) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    if worst > 1e-10 {
        failures.push("mirror symmetry");
    }

    failures.dedup();
    let ok = failures.is_empty();
    let detail = if ok {
        format!("conservation, monotone counts, 1 vs 4 threads, rotation, mirror pair (worst {worst:.1e})")
    } else {
        format!("failed: {}", failures.join(", "))
    };
    (ok, detail)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("single-receiver ground truth", single_receiver),
        ("series vs time-marching solver", series_vs_solver),
        ("distant interferer convergence", far_interferer),
        ("peak-shift signs", peak_shift),
        ("time-step bias", step_bias),
        ("model bracketing", bracketing),
        ("barycenter model", barycenters),
        ("property checks", properties),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        let secs = start.elapsed().as_secs_f64();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({secs:.1} s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
