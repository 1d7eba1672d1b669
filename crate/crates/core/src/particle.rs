//! Brownian-dynamics Monte Carlo of molecules released at the origin and
//! absorbed by the first cell they touch.
//!
//! Every molecule draws from its own ChaCha8 stream selected by
//! `(seed, molecule index)`, so results do not depend on how molecules are
//! scheduled across threads. [`run`] is the sequential driver; parallel
//! drivers map [`simulate_molecule`] over indices and hand the outcomes, in
//! index order, to [`SimResult::from_outcomes`].
//!
//! Far from every cell the walk may advance several steps at once
//! ([`SimConfig::far_field_leap`]): the sum of `k` Gaussian increments is one
//! Gaussian increment with `k` times the variance, so the endpoint law is
//! unchanged. A leap is only taken when the whole leap stays, with
//! overwhelming probability, farther from every sphere than the cells can be
//! reached (the distance to the nearest surface exceeds [`LEAP_SIGMAS`]
//! standard deviations of the leap).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{s_point, Scenario, SphericalCell, Vec3};

/// Safety margin of a far-field leap, in per-axis standard deviations.
/// `P(chi^2_3 > 64) ~ 1e-13`.
pub const LEAP_SIGMAS: f64 = 8.0;
/// Leaps shorter than this many steps are not worth taking.
pub const LEAP_MIN_STEPS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detection {
    /// A molecule is absorbed when a step ends inside a cell. Large steps miss
    /// excursions that cross a membrane and come back out.
    Endpoint,
    /// A molecule is absorbed when the straight step segment enters a cell.
    Segment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Number of simulated molecules; the scenario's emitted count when `None`.
    pub molecules: Option<u64>,
    pub detection: Detection,
    /// Width of the bins of the cumulative count series.
    pub bin_width: f64,
    pub keep_events: bool,
    pub far_field_leap: bool,
    /// Segment mode only: also absorb, with the Brownian-bridge probability
    /// `exp(-a b / (D dt))`, steps whose end points are clear of a sphere by
    /// `a` and `b`. Removes most of the remaining time-step bias.
    pub crossing_correction: bool,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        SimConfig {
            dt,
            horizon,
            seed,
            molecules: None,
            detection: Detection::Segment,
            bin_width: 1e-3,
            keep_events: false,
            far_field_leap: true,
            crossing_correction: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                what: "time step",
                value: self.dt,
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::InvalidParameter {
                what: "horizon",
                value: self.horizon,
            });
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::InvalidParameter {
                what: "bin width",
                value: self.bin_width,
            });
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        libm::round(self.horizon / self.dt) as u64
    }

    pub fn molecule_count(&self, scenario: &Scenario) -> u64 {
        self.molecules.unwrap_or(scenario.emitted())
    }
}

/// RNG stream of one molecule.
pub fn molecule_rng(seed: u64, molecule: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(molecule);
    rng
}

/// One random-walk update: each coordinate moves by an independent standard
/// normal draw times `sqrt(2 D dt)`.
pub fn step<R: Rng + ?Sized>(position: Vec3, dt: f64, diffusion: f64, rng: &mut R) -> Vec3 {
    let sigma = libm::sqrt(2.0 * diffusion * dt);
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    let dz: f64 = rng.sample(StandardNormal);
    position + Vec3::new(dx, dy, dz) * sigma
}

/// A detected absorption on a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub cell: usize,
    /// Segment parameter in [0, 1] of the membrane crossing.
    pub entry: f64,
    pub point: Vec3,
}

/// Smallest parameter `s` in [0, 1] at which `p0 + s (p1 - p0)` enters `cell`.
fn entry_parameter(p0: Vec3, p1: Vec3, cell: &SphericalCell) -> Option<f64> {
    let delta = p1 - p0;
    let rel = p0 - cell.center();
    let c = rel.norm_squared() - cell.radius() * cell.radius();
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = delta.norm_squared();
    if a == 0.0 {
        return None;
    }
    let half_b = delta.dot(rel);
    if half_b >= 0.0 {
        // moving away from the center
        return None;
    }
    let disc = half_b * half_b - a * c;
    if disc < 0.0 {
        return None;
    }
    // near root, written to avoid cancellation
    let s = c / (-half_b + libm::sqrt(disc));
    (s <= 1.0).then_some(s)
}

fn membrane_point(p0: Vec3, p1: Vec3, cell: &SphericalCell, entry: f64) -> Vec3 {
    let on_segment = p0 + (p1 - p0) * entry;
    // project radially so the recorded point lies on the sphere
    let rel = on_segment - cell.center();
    let norm = rel.norm();
    if norm == 0.0 {
        return on_segment;
    }
    cell.center() + rel * (cell.radius() / norm)
}

/// Absorption test for the step `p0 -> p1`, with `p0` outside every cell.
///
/// Endpoint mode returns the cell containing `p1`; segment mode returns the
/// cell whose sphere the segment enters first (ties go to the lower index).
/// The absorption point is where the segment crosses the membrane.
pub fn detect_absorption(
    p0: Vec3,
    p1: Vec3,
    cells: &[SphericalCell],
    detection: Detection,
) -> Option<Hit> {
    match detection {
        Detection::Endpoint => {
            let (cell, sphere) = cells.iter().enumerate().find(|(_, c)| c.contains(p1))?;
            let entry = entry_parameter(p0, p1, sphere).unwrap_or(1.0);
            Some(Hit {
                cell,
                entry,
                point: membrane_point(p0, p1, sphere, entry),
            })
        }
        Detection::Segment => {
            let mut best: Option<(usize, f64)> = None;
            for (i, c) in cells.iter().enumerate() {
                if let Some(s) = entry_parameter(p0, p1, c) {
                    if best.is_none_or(|(_, b)| s < b) {
                        best = Some((i, s));
                    }
                }
            }
            best.map(|(cell, entry)| Hit {
                cell,
                entry,
                point: membrane_point(p0, p1, &cells[cell], entry),
            })
        }
    }
}

/// Bridge exponents above this are treated as certain misses.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Randomised test for a crossing hidden inside a step whose segment misses
/// every sphere. Uniforms are drawn only for cells within reach.
fn bridge_crossing<R: Rng + ?Sized>(
    p0: Vec3,
    p1: Vec3,
    cells: &[SphericalCell],
    diffusion: f64,
    dt: f64,
    rng: &mut R,
) -> Option<Hit> {
    for (i, c) in cells.iter().enumerate() {
        let a = c.center().distance(p0) - c.radius();
        let b = c.center().distance(p1) - c.radius();
        let exponent = a * b / (diffusion * dt);
        if exponent >= BRIDGE_CUTOFF {
            continue;
        }
        let u: f64 = rng.random();
        if u < libm::exp(-exponent) {
            let mid = (p0 + p1) * 0.5 - c.center();
            let norm = mid.norm();
            let point = if norm > 0.0 {
                c.center() + mid * (c.radius() / norm)
            } else {
                s_point(c)
            };
            return Some(Hit {
                cell: i,
                entry: 1.0,
                point,
            });
        }
    }
    None
}

fn detect_step<R: Rng + ?Sized>(
    p0: Vec3,
    p1: Vec3,
    scenario: &Scenario,
    config: &SimConfig,
    dt: f64,
    rng: &mut R,
) -> Option<Hit> {
    let cells = scenario.cells();
    detect_absorption(p0, p1, cells, config.detection).or_else(|| {
        (config.crossing_correction && config.detection == Detection::Segment)
            .then(|| bridge_crossing(p0, p1, cells, scenario.diffusion(), dt, rng))
            .flatten()
    })
}

/// Absorption of one molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorption {
    pub cell: usize,
    /// End time of the absorbing step.
    pub time: f64,
    pub point: Vec3,
}

fn clearance(p: Vec3, cells: &[SphericalCell]) -> f64 {
    cells
        .iter()
        .map(|c| c.center().distance(p) - c.radius())
        .fold(f64::INFINITY, f64::min)
}

/// Whole steps of length `dt` that can be taken at once from clearance `rho`.
fn leap_steps(rho: f64, dt: f64, diffusion: f64) -> u64 {
    let tau = (rho / LEAP_SIGMAS) * (rho / LEAP_SIGMAS) / (2.0 * diffusion);
    let steps = libm::floor(tau / dt);
    if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps as u64
    }
}

/// Follow molecule `index` from the origin until absorption or the horizon.
pub fn simulate_molecule(
    scenario: &Scenario,
    config: &SimConfig,
    index: u64,
) -> Option<Absorption> {
    let cells = scenario.cells();
    let diffusion = scenario.diffusion();
    let dt = config.dt;
    let total = config.steps();
    let mut rng = molecule_rng(config.seed, index);
    let mut pos = Vec3::ZERO;
    let mut done = 0u64;
    while done < total {
        if config.far_field_leap {
            let k = leap_steps(clearance(pos, cells), dt, diffusion).min(total - done);
            if k >= LEAP_MIN_STEPS {
                pos = step(pos, k as f64 * dt, diffusion, &mut rng);
                done += k;
                continue;
            }
        }
        let next = step(pos, dt, diffusion, &mut rng);
        done += 1;
        if let Some(hit) = detect_step(pos, next, scenario, config, dt, &mut rng) {
            return Some(Absorption {
                cell: hit.cell,
                time: done as f64 * dt,
                point: hit.point,
            });
        }
        pos = next;
    }
    None
}

/// Follow molecule `index` on one Brownian path observed at two resolutions:
/// every step of `config.dt` and every `coarse_factor` steps. Returns the
/// outcome at the fine and at the coarse resolution.
///
/// Each outcome has exactly the law of an independent run at its own time
/// step; sharing the path makes the difference between the two strongly
/// correlated, which is what a time-step sensitivity study measures.
pub fn simulate_molecule_coupled(
    scenario: &Scenario,
    config: &SimConfig,
    coarse_factor: u64,
    index: u64,
) -> (Option<Absorption>, Option<Absorption>) {
    let cells = scenario.cells();
    let diffusion = scenario.diffusion();
    let dt = config.dt;
    let factor = coarse_factor.max(1);
    let total = config.steps();
    let mut rng = molecule_rng(config.seed, index);
    let mut pos = Vec3::ZERO;
    let mut checkpoint = pos;
    let mut fine: Option<Absorption> = None;
    let mut coarse: Option<Absorption> = None;
    let mut done = 0u64;
    while done < total && (fine.is_none() || coarse.is_none()) {
        if config.far_field_leap {
            let aligned = done.is_multiple_of(factor);
            let mut k = leap_steps(clearance(pos, cells), dt, diffusion).min(total - done);
            if coarse.is_none() {
                // the coarse chain must see every checkpoint inside the safe ball
                k = if aligned { k - k % factor } else { 0 };
            }
            if k >= LEAP_MIN_STEPS.max(if coarse.is_none() { factor } else { 1 }) {
                pos = step(pos, k as f64 * dt, diffusion, &mut rng);
                done += k;
                if done.is_multiple_of(factor) {
                    checkpoint = pos;
                }
                continue;
            }
        }
        let next = step(pos, dt, diffusion, &mut rng);
        done += 1;
        if fine.is_none() {
            if let Some(hit) = detect_step(pos, next, scenario, config, dt, &mut rng) {
                fine = Some(Absorption {
                    cell: hit.cell,
                    time: done as f64 * dt,
                    point: hit.point,
                });
            }
        }
        pos = next;
        if done.is_multiple_of(factor) {
            if coarse.is_none() {
                let coarse_dt = dt * factor as f64;
                if let Some(hit) =
                    detect_step(checkpoint, pos, scenario, config, coarse_dt, &mut rng)
                {
                    coarse = Some(Absorption {
                        cell: hit.cell,
                        time: done as f64 * dt,
                        point: hit.point,
                    });
                }
            }
            checkpoint = pos;
        }
    }
    (fine, coarse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionEvent {
    pub molecule: u64,
    pub cell: usize,
    pub time: f64,
    pub point: Vec3,
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    labels: Vec<String>,
    molecules: u64,
    bin_width: f64,
    horizon: f64,
    /// counts[k][b]: absorbed by cell k up to `(b + 1) * bin_width`
    counts: Vec<Vec<u64>>,
    absorbed: Vec<u64>,
    point_sums: Vec<Vec3>,
    survivors: u64,
    events: Vec<AbsorptionEvent>,
}

impl SimResult {
    /// Aggregate per-molecule outcomes. Outcomes must come in molecule order
    /// for the barycenter sums to be bit-reproducible.
    pub fn from_outcomes<I>(scenario: &Scenario, config: &SimConfig, outcomes: I) -> Self
    where
        I: IntoIterator<Item = (u64, Option<Absorption>)>,
    {
        let k = scenario.len();
        let bins = libm::ceil(config.horizon / config.bin_width - 1e-9).max(1.0) as usize;
        let mut histogram = vec![vec![0u64; bins]; k];
        let mut absorbed = vec![0u64; k];
        let mut point_sums = vec![Vec3::ZERO; k];
        let mut events = Vec::new();
        let mut molecules = 0u64;
        for (molecule, outcome) in outcomes {
            molecules += 1;
            let Some(a) = outcome else { continue };
            let bin =
                (libm::ceil(a.time / config.bin_width - 1e-9).max(1.0) as usize - 1).min(bins - 1);
            histogram[a.cell][bin] += 1;
            absorbed[a.cell] += 1;
            point_sums[a.cell] += a.point;
            if config.keep_events {
                events.push(AbsorptionEvent {
                    molecule,
                    cell: a.cell,
                    time: a.time,
                    point: a.point,
                });
            }
        }
        events.sort_by(|a, b| {
            a.time
                .total_cmp(&b.time)
                .then(a.cell.cmp(&b.cell))
                .then(a.molecule.cmp(&b.molecule))
        });
        let counts = histogram
            .into_iter()
            .map(|h| {
                let mut total = 0;
                h.into_iter()
                    .map(|c| {
                        total += c;
                        total
                    })
                    .collect()
            })
            .collect();
        let survivors = molecules - absorbed.iter().sum::<u64>();
        SimResult {
            labels: scenario
                .cells()
                .iter()
                .map(|c| String::from(c.label()))
                .collect(),
            molecules,
            bin_width: config.bin_width,
            horizon: config.horizon,
            counts,
            absorbed,
            point_sums,
            survivors,
            events,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn molecules(&self) -> u64 {
        self.molecules
    }

    pub fn survivors(&self) -> u64 {
        self.survivors
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Right edge of bin `b`.
    pub fn bin_time(&self, b: usize) -> f64 {
        ((b + 1) as f64 * self.bin_width).min(self.horizon)
    }

    /// Cumulative absorptions of `cell` at every bin edge.
    pub fn counts(&self, cell: usize) -> &[u64] {
        &self.counts[cell]
    }

    /// Total absorptions of `cell` over the horizon.
    pub fn absorbed(&self, cell: usize) -> u64 {
        self.absorbed[cell]
    }

    pub fn events(&self) -> &[AbsorptionEvent] {
        &self.events
    }

    /// Mean absorption point per cell, `None` for cells without absorptions.
    pub fn barycenters(&self) -> Vec<Option<Vec3>> {
        (0..self.absorbed.len())
            .map(|k| estimate_barycenter(self, k).ok())
            .collect()
    }
}

/// Sequential simulation of every molecule.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let n = config.molecule_count(scenario);
    Ok(SimResult::from_outcomes(
        scenario,
        config,
        (0..n).map(|i| (i, simulate_molecule(scenario, config, i))),
    ))
}

/// Sequential coupled run: results at `config.dt` and at `coarse_factor * config.dt`.
pub fn run_coupled(
    scenario: &Scenario,
    config: &SimConfig,
    coarse_factor: u64,
) -> Result<(SimResult, SimResult)> {
    config.validate()?;
    let n = config.molecule_count(scenario);
    let outcomes: Vec<_> = (0..n)
        .map(|i| simulate_molecule_coupled(scenario, config, coarse_factor, i))
        .collect();
    Ok(coupled_results(scenario, config, coarse_factor, &outcomes))
}

/// Split coupled outcomes (in molecule order) into the fine and coarse results.
pub fn coupled_results(
    scenario: &Scenario,
    config: &SimConfig,
    coarse_factor: u64,
    outcomes: &[(Option<Absorption>, Option<Absorption>)],
) -> (SimResult, SimResult) {
    let fine = SimResult::from_outcomes(
        scenario,
        config,
        outcomes.iter().enumerate().map(|(i, o)| (i as u64, o.0)),
    );
    let coarse_config = SimConfig {
        dt: config.dt * coarse_factor.max(1) as f64,
        ..config.clone()
    };
    let coarse = SimResult::from_outcomes(
        scenario,
        &coarse_config,
        outcomes.iter().enumerate().map(|(i, o)| (i as u64, o.1)),
    );
    (fine, coarse)
}

/// Mean of the absorption points recorded on `cell`.
pub fn estimate_barycenter(result: &SimResult, cell: usize) -> Result<Vec3> {
    let len = result.absorbed.len();
    if cell >= len {
        return Err(Error::CellIndex { index: cell, len });
    }
    match result.absorbed[cell] {
        0 => Err(Error::NoAbsorptions(cell)),
        n => Ok(result.point_sums[cell] / n as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cell(label: &str, x: f64, y: f64, z: f64) -> SphericalCell {
        SphericalCell::new(label, Vec3::new(x, y, z), 1.0).unwrap()
    }

    #[test]
    fn zero_diffusion_step_is_identity() {
        let mut rng = molecule_rng(1, 0);
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(step(p, 1e-3, 0.0, &mut rng), p);
    }

    #[test]
    fn step_moments() {
        let (dt, d) = (1e-4, 79.4);
        let mut rng = molecule_rng(42, 7);
        let n = 1_000_000;
        let (mut sx, mut sxx, mut syy, mut szz, mut sxy, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let v = step(Vec3::ZERO, dt, d, &mut rng);
            sx += v.x;
            sxx += v.x * v.x;
            syy += v.y * v.y;
            szz += v.z * v.z;
            sxy += v.x * v.y;
            syz += v.y * v.z;
        }
        let nf = n as f64;
        let var = 2.0 * d * dt;
        assert!((sx / nf).abs() < 5.0 * libm::sqrt(var / nf));
        for s in [sxx, syy, szz] {
            assert_relative_eq!(s / nf, var, max_relative = 0.01);
        }
        assert!((sxy / nf / var).abs() < 0.01);
        assert!((syz / nf / var).abs() < 0.01);
    }

    #[test]
    fn detection_examples() {
        let cells = [cell("a", 6.0, 0.0, 0.0)];
        let far = detect_absorption(
            Vec3::new(0.0, 5.0, 0.0),
            Vec3::new(0.0, 9.0, 0.0),
            &cells,
            Detection::Segment,
        );
        assert!(far.is_none());

        let hit = detect_absorption(
            Vec3::ZERO,
            Vec3::new(8.0, 0.0, 0.0),
            &cells,
            Detection::Segment,
        )
        .unwrap();
        assert_eq!(hit.cell, 0);
        assert_relative_eq!(hit.entry, 5.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(hit.point.x, 5.0, epsilon = 1e-14);
        // the step ends outside: endpoint detection misses it
        assert!(detect_absorption(
            Vec3::ZERO,
            Vec3::new(8.0, 0.0, 0.0),
            &cells,
            Detection::Endpoint
        )
        .is_none());

        let inside = detect_absorption(
            Vec3::ZERO,
            Vec3::new(6.5, 0.0, 0.0),
            &cells,
            Detection::Endpoint,
        )
        .unwrap();
        assert_relative_eq!(inside.point.x, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn nearer_entry_wins() {
        let cells = [cell("far", 7.0, 0.0, 0.0), cell("near", 4.0, 0.0, 0.0)];
        let hit = detect_absorption(
            Vec3::ZERO,
            Vec3::new(9.0, 0.0, 0.0),
            &cells,
            Detection::Segment,
        )
        .unwrap();
        assert_eq!(hit.cell, 1);
        assert_relative_eq!(hit.point.x, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn tangent_and_receding_segments() {
        let cells = [cell("a", 0.0, 0.0, 5.0)];
        // grazing the sphere at x = 1 counts as entry
        let hit = detect_absorption(
            Vec3::new(1.0, -1.0, 5.0),
            Vec3::new(1.0, 1.0, 5.0),
            &cells,
            Detection::Segment,
        );
        assert!(hit.is_some());
        let away = detect_absorption(
            Vec3::new(0.0, 0.0, 3.5),
            Vec3::new(0.0, 0.0, 2.0),
            &cells,
            Detection::Segment,
        );
        assert!(away.is_none());
    }

    #[test]
    fn empty_run() {
        let s = Scenario::new(79.4, 10, alloc::vec![cell("a", 6.0, 0.0, 0.0)]).unwrap();
        let mut cfg = SimConfig::new(1e-4, 0.1, 1);
        cfg.molecules = Some(0);
        let r = run(&s, &cfg).unwrap();
        assert_eq!(r.molecules(), 0);
        assert_eq!(r.absorbed(0), 0);
        assert!(r.counts(0).iter().all(|&c| c == 0));
        assert!(matches!(
            estimate_barycenter(&r, 0),
            Err(Error::NoAbsorptions(0))
        ));
    }

    #[test]
    fn conservation_and_determinism() {
        let s = Scenario::new(
            79.4,
            400,
            alloc::vec![cell("a", 0.0, 0.0, 3.0), cell("b", 0.0, 2.5, 0.0)],
        )
        .unwrap();
        let mut cfg = SimConfig::new(1e-4, 0.2, 9);
        cfg.keep_events = true;
        let a = run(&s, &cfg).unwrap();
        let b = run(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.absorbed(0) + a.absorbed(1) + a.survivors(), 400);
        assert_eq!(*a.counts(0).last().unwrap(), a.absorbed(0));
        for e in a.events() {
            let c = &s.cells()[e.cell];
            assert!((e.point.distance(c.center()) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn far_cell_is_never_reached() {
        let s = Scenario::new(79.4, 2000, alloc::vec![cell("a", 60.0, 0.0, 0.0)]).unwrap();
        let r = run(&s, &SimConfig::new(1e-4, 0.1, 3)).unwrap();
        assert_eq!(r.absorbed(0), 0);
    }

    #[test]
    fn leap_budget() {
        // eight sigma of one leap never exceeds the clearance
        let (dt, d) = (1e-5, 79.4);
        for rho in [0.1, 0.5, 1.0, 5.0, 30.0] {
            let k = leap_steps(rho, dt, d);
            let sigma = libm::sqrt(2.0 * d * dt * k as f64);
            assert!(LEAP_SIGMAS * sigma <= rho * (1.0 + 1e-12));
        }
    }

    #[test]
    fn coupled_fine_marginal_matches_direct_run() {
        let s = Scenario::new(79.4, 300, alloc::vec![cell("a", 0.0, 0.0, 3.0)]).unwrap();
        let cfg = SimConfig::new(1e-5, 0.05, 5);
        let (fine, coarse) = run_coupled(&s, &cfg, 10).unwrap();
        assert_eq!(fine.molecules(), 300);
        assert_eq!(coarse.molecules(), 300);
        // a coarse chain can only miss what the fine chain sees on the same
        // path in segment mode (its segments are chords of the fine polyline)
        assert!(coarse.absorbed(0) <= fine.absorbed(0) + 5);
    }
}
