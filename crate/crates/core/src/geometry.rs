//! Scenario geometry: the point transmitter sits at the origin, every cell is a
//! fully-absorbing sphere. Lengths are in µm, the diffusion coefficient in µm²/s.
//!
//! Each cell is represented in the interference models by a single negative
//! source point: its center (C), its transmitter-facing surface point (S), or
//! its predicted absorption barycenter (B).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Relative slack under which two spheres still count as touching, so that
/// contact placements built with trigonometry are not rejected by rounding.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

/// A fully-absorbing spherical cell. The origin always lies strictly outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCell {
    center: Vec3,
    radius: f64,
    label: String,
}

impl SphericalCell {
    pub fn new(label: impl Into<String>, center: Vec3, radius: f64) -> Result<Self> {
        let label = label.into();
        if !center.is_finite() {
            return Err(Error::NonFinite {
                what: "cell center",
            });
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidRadius { label, radius });
        }
        let distance = center.norm();
        if distance <= radius {
            return Err(Error::CoversOrigin {
                label,
                distance,
                radius,
            });
        }
        Ok(SphericalCell {
            center,
            radius,
            label,
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Distance of the center from the transmitter.
    pub fn distance(&self) -> f64 {
        self.center.norm()
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }
}

/// Transmitter at the origin plus an ordered list of cells. Cell 0 is the
/// target receiver by convention; the others are interferers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    diffusion: f64,
    emitted: u64,
    cells: Vec<SphericalCell>,
}

impl Scenario {
    pub fn new(diffusion: f64, emitted: u64, cells: Vec<SphericalCell>) -> Result<Self> {
        if !(diffusion.is_finite() && diffusion > 0.0) {
            return Err(Error::InvalidDiffusion(diffusion));
        }
        if emitted == 0 {
            return Err(Error::NoMolecules);
        }
        if cells.is_empty() {
            return Err(Error::NoCells);
        }
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                let distance = a.center.distance(b.center);
                let min_distance = a.radius + b.radius;
                if distance < min_distance * (1.0 - CONTACT_TOLERANCE) {
                    return Err(Error::Overlap {
                        a: a.label.clone(),
                        b: b.label.clone(),
                        distance,
                        min_distance,
                    });
                }
            }
        }
        Ok(Scenario {
            diffusion,
            emitted,
            cells,
        })
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn cells(&self) -> &[SphericalCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn with_emitted(&self, emitted: u64) -> Result<Self> {
        Scenario::new(self.diffusion, emitted, self.cells.clone())
    }

    /// Single-receiver peak time `(r - R)^2 / (6 D)` of the earliest cell.
    pub fn min_peak_time(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let gap = c.distance() - c.radius;
                gap * gap / (6.0 * self.diffusion)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Where the negative source of each cell is concentrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceModel {
    /// Cell center.
    Center,
    /// Surface point closest to the transmitter.
    Surface,
    /// Empirical absorption barycenter.
    Barycenter,
}

impl SourceModel {
    pub const ALL: [SourceModel; 3] = [
        SourceModel::Center,
        SourceModel::Surface,
        SourceModel::Barycenter,
    ];

    pub fn letter(self) -> char {
        match self {
            SourceModel::Center => 'C',
            SourceModel::Surface => 'S',
            SourceModel::Barycenter => 'B',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'C' => Some(SourceModel::Center),
            'S' => Some(SourceModel::Surface),
            'B' => Some(SourceModel::Barycenter),
            _ => None,
        }
    }
}

impl fmt::Display for SourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Coefficients of the empirical barycenter laws.
///
/// `gamma(r) = floor + near * exp(-r / (near_scale R)) + far * exp(-r / (far_scale R))`
/// weights the surface point against the center, and the repulsion between two
/// cells has norm `amplitude R exp(-decay * gap / (2 R))`, where `gap` is the
/// surface-to-surface distance. The defaults were fitted at D = 79.4 µm²/s,
/// T = 2 s and R = 1 µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycenterCoefficients {
    pub gamma_floor: f64,
    pub gamma_near: f64,
    pub gamma_near_scale: f64,
    pub gamma_far: f64,
    pub gamma_far_scale: f64,
    pub delta_amplitude: f64,
    pub delta_decay: f64,
}

impl Default for BarycenterCoefficients {
    fn default() -> Self {
        BarycenterCoefficients {
            gamma_floor: 0.13,
            gamma_near: 0.51,
            gamma_near_scale: 0.8,
            gamma_far: 0.36,
            gamma_far_scale: 3.0,
            delta_amplitude: 0.21,
            delta_decay: 0.8,
        }
    }
}

impl BarycenterCoefficients {
    pub fn gamma(&self, r: f64, radius: f64) -> f64 {
        self.gamma_floor
            + self.gamma_near * libm::exp(-r / (self.gamma_near_scale * radius))
            + self.gamma_far * libm::exp(-r / (self.gamma_far_scale * radius))
    }

    /// Repulsion of `target`'s barycenter away from `other`, using the
    /// target's radius and the surface gap between the two spheres.
    pub fn displacement_between(
        &self,
        target_center: Vec3,
        target_radius: f64,
        other_center: Vec3,
        other_radius: f64,
    ) -> Result<Vec3> {
        let offset = target_center - other_center;
        let distance = offset.norm();
        let min_distance = target_radius + other_radius;
        if !(distance >= min_distance * (1.0 - CONTACT_TOLERANCE)) || distance == 0.0 {
            return Err(Error::TooClose {
                distance,
                min_distance,
            });
        }
        let gap = distance - min_distance;
        let magnitude = self.delta_amplitude
            * target_radius
            * libm::exp(-self.delta_decay * gap / (2.0 * target_radius));
        Ok(offset * (magnitude / distance))
    }
}

/// Surface point of `cell` closest to the transmitter.
pub fn s_point(cell: &SphericalCell) -> Vec3 {
    cell.center * (1.0 - cell.radius / cell.distance())
}

/// Weight of the S-point in the isolated-cell barycenter, with default coefficients.
pub fn gamma_weight(r: f64, radius: f64) -> f64 {
    BarycenterCoefficients::default().gamma(r, radius)
}

/// Mutual repulsion of two equal cells of radius `radius`: points from
/// `other_center` toward `target_center`. Rejects centers closer than `2 radius`.
pub fn displacement(target_center: Vec3, other_center: Vec3, radius: f64) -> Result<Vec3> {
    BarycenterCoefficients::default().displacement_between(
        target_center,
        radius,
        other_center,
        radius,
    )
}

/// One negative-source point per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterSet {
    pub model: SourceModel,
    pub points: Vec<Vec3>,
}

impl BarycenterSet {
    /// Externally supplied source points, e.g. barycenters measured by simulation.
    pub fn from_points(scenario: &Scenario, model: SourceModel, points: Vec<Vec3>) -> Result<Self> {
        if points.len() != scenario.len() {
            return Err(Error::CellIndex {
                index: points.len(),
                len: scenario.len(),
            });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                what: "source point",
            });
        }
        Ok(BarycenterSet { model, points })
    }
}

pub fn predict_barycenters(scenario: &Scenario, model: SourceModel) -> Result<BarycenterSet> {
    predict_barycenters_with(scenario, model, &BarycenterCoefficients::default())
}

pub fn predict_barycenters_with(
    scenario: &Scenario,
    model: SourceModel,
    coefficients: &BarycenterCoefficients,
) -> Result<BarycenterSet> {
    let cells = scenario.cells();
    let points = match model {
        SourceModel::Center => cells.iter().map(SphericalCell::center).collect(),
        SourceModel::Surface => cells.iter().map(s_point).collect(),
        SourceModel::Barycenter => {
            let mut points = Vec::with_capacity(cells.len());
            for (k, cell) in cells.iter().enumerate() {
                let weight = coefficients.gamma(cell.distance(), cell.radius);
                let mut b = s_point(cell) * weight + cell.center * (1.0 - weight);
                for (j, other) in cells.iter().enumerate() {
                    if j != k {
                        b += coefficients.displacement_between(
                            cell.center,
                            cell.radius,
                            other.center,
                            other.radius,
                        )?;
                    }
                }
                let offset = b - cell.center;
                let norm = offset.norm();
                if norm > cell.radius {
                    log::warn!(
                        "barycenter of `{}` pushed {:.4} outside its cell; clamped to the surface",
                        cell.label,
                        norm - cell.radius
                    );
                    b = cell.center + offset * (cell.radius / norm);
                }
                points.push(b);
            }
            points
        }
    };
    Ok(BarycenterSet { model, points })
}

/// Square matrix of kernel distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Distance from the source point of cell `source` to the center of cell `receiver`.
    pub fn get(&self, receiver: usize, source: usize) -> f64 {
        self.data[receiver * self.n + source]
    }
}

/// `d[k][j] = |C_k - P_j|` for `j != k`; the diagonal is zero.
pub fn kernel_distances(scenario: &Scenario, sources: &BarycenterSet) -> DistanceMatrix {
    let n = scenario.len();
    let mut data = alloc::vec![0.0; n * n];
    for (k, cell) in scenario.cells().iter().enumerate() {
        for (j, p) in sources.points.iter().enumerate() {
            if j != k {
                data[k * n + j] = cell.center.distance(*p);
            }
        }
    }
    DistanceMatrix { n, data }
}
