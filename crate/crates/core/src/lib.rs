//! Absorption kinetics of fully-absorbing spherical cells around an impulsive
//! point emitter in unbounded 3D diffusion.
//!
//! * [`geometry`]: scenario, negative-source placement (C/S/B models), kernel distances
//! * [`analytic`]: single-receiver response and the two-receiver closed-form series
//! * [`volterra`]: time-marching solver for any number of cells
//! * [`particle`]: seeded Brownian-dynamics simulator used as validation oracle
//! * [`peak`]: argmax helpers for sampled and event-based rate curves
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod particle;
pub mod peak;
pub mod special;
pub mod volterra;

#[cfg(test)]
mod testutil;

pub use analytic::{
    cumulative_single, free_space_concentration, hitting_rate, single_peak_time, two_receiver_cir,
    two_receiver_cumulative, SeriesParams, TimeGrid,
};
pub use error::{Error, Result};
pub use geometry::{
    displacement, gamma_weight, kernel_distances, predict_barycenters, predict_barycenters_with,
    s_point, BarycenterCoefficients, BarycenterSet, DistanceMatrix, Scenario, SourceModel,
    SphericalCell, Vec3,
};
pub use special::erfc;
