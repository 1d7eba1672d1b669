use alloc::string::String;

/// Errors raised by the core models, solver and simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite coordinate in {what}")]
    NonFinite { what: &'static str },

    #[error("cell `{label}` has invalid radius {radius} (must be finite and > 0)")]
    InvalidRadius { label: String, radius: f64 },

    #[error("cell `{label}` covers the transmitter: |center| = {distance} <= radius {radius}")]
    CoversOrigin {
        label: String,
        distance: f64,
        radius: f64,
    },

    #[error("cells `{a}` and `{b}` overlap: center distance {distance} < {min_distance}")]
    Overlap {
        a: String,
        b: String,
        distance: f64,
        min_distance: f64,
    },

    #[error("scenario has no cells")]
    NoCells,

    #[error("diffusion coefficient must be finite and > 0, got {0}")]
    InvalidDiffusion(f64),

    #[error("emitted molecule count must be > 0")]
    NoMolecules,

    #[error("distance {distance} must exceed the receiver radius {radius}")]
    InsideReceiver { distance: f64, radius: f64 },

    #[error("centers {distance} apart are closer than two radii ({min_distance})")]
    TooClose { distance: f64, min_distance: f64 },

    #[error("series ratio kappa = {0} is outside (0, 1)")]
    KappaOutOfRange(f64),

    #[error("closed-form series needs equal radii, got {0} and {1}")]
    UnequalRadii(f64, f64),

    #[error("closed-form series needs exactly two cells, got {0}")]
    NotTwoCells(usize),

    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },

    #[error("source point of cell {source_cell} lies within receiver {receiver} (distance {distance}, radius {radius})")]
    SourceInsideReceiver {
        receiver: usize,
        source_cell: usize,
        distance: f64,
        radius: f64,
    },

    #[error("solver did not converge: cell {cell} rate {min_rate} below threshold {threshold}")]
    NonConvergence {
        cell: usize,
        min_rate: f64,
        threshold: f64,
    },

    #[error("grid of {steps} steps exceeds the cap of {cap}")]
    GridTooLarge { steps: usize, cap: usize },

    #[error("cell {0} recorded no absorption, barycenter undefined")]
    NoAbsorptions(usize),

    #[error("cell index {index} out of range for {len} cells")]
    CellIndex { index: usize, len: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
