//! Simulation and analysis toolkit for spin-squeezed optical lattice clock
//! comparisons read out through a dispersive cavity-QED probe.
//!
//! Closed-form physics is generic over the scalar type ([`num::Real`], i.e.
//! `f32` or `f64`); Monte Carlo samplers and fits run in `f64`. The aliases
//! below fix the common `f64` instantiations.

// NaN must fail validation, which `!(x > 0.0)` guarantees.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod clock;
pub mod error;
pub mod geometry;
mod linalg;
pub mod num;
mod quad;
pub mod rng;
pub mod squeezing;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use num::Real;

pub type AngularFrequency = units::AngularFrequency<f64>;
pub type CavityParams = units::CavityParams<f64>;
pub type EnsembleSpec = units::EnsembleSpec<f64>;
pub type SpinProjection = units::SpinProjection<f64>;
