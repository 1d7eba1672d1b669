use mcdiff_core::{Scenario, SphericalCell, Vec3};

use crate::error::{HarnessError, Result};

/// Target `R` at `(0, 0, r_r)` and interferer `I` at `d` from it, with
/// `theta_deg` measured at R from the direction of the transmitter, in the
/// y = 0 plane (0 puts I between T and R).
///
/// Fails when the interferer would overlap the target or cover the origin.
pub fn build_single_interferer_scenario(
    r_r: f64,
    d: f64,
    theta_deg: f64,
    radius: f64,
    diffusion: f64,
    emitted: u64,
) -> Result<Scenario> {
    let theta = theta_deg.to_radians();
    let c_r = Vec3::new(0.0, 0.0, r_r);
    let c_i = c_r + Vec3::new(theta.sin(), 0.0, -theta.cos()) * d;
    let cells = vec![
        SphericalCell::new("R", c_r, radius)?,
        SphericalCell::new("I", c_i, radius)?,
    ];
    Ok(Scenario::new(diffusion, emitted, cells)?)
}

/// Move cell `target` onto `|C| (cos alpha, sin alpha, 0)`, keeping its
/// distance from the transmitter.
pub fn place_at_alpha(scenario: &Scenario, target: usize, alpha_deg: f64) -> Result<Scenario> {
    let cell = scenario
        .cells()
        .get(target)
        .ok_or_else(|| HarnessError::Spec(format!("no cell {target}")))?;
    let alpha = alpha_deg.to_radians();
    let center = Vec3::new(alpha.cos(), alpha.sin(), 0.0) * cell.distance();
    let mut cells = scenario.cells().to_vec();
    cells[target] = SphericalCell::new(cell.label(), center, cell.radius())?;
    Ok(Scenario::new(
        scenario.diffusion(),
        scenario.emitted(),
        cells,
    )?)
}
