//! randiso: a pathwise random-dynamical-systems toolkit for stochastic
//! oscillators.
//!
//! The crate simulates Stratonovich SDE oscillator models along explicit
//! two-sided Brownian paths, extracts random attractors, Crauel random
//! periodic solutions with noise-dependent periods, Lyapunov spectra, and
//! random forward isochrons, and independently solves the averaged
//! mean-return-time PDE system on an annulus, cross-checking the pathwise
//! and averaged viewpoints numerically.
//!
//! The numerical core is generic over the scalar type ([`scalar::Real`],
//! `f32` or `f64`); the aliases below fix `f64` for experiment and
//! acceptance use.

pub mod acceptance;

pub mod error;
pub mod scalar;

pub mod config;

pub mod experiments;

pub mod noise;

pub mod model;

pub mod flow;

pub mod attractor;

pub mod crps;

pub mod isochron;

pub mod lyapunov;

pub mod mrt;

pub mod stats;

pub mod svg;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` noise path, the experiment default.
pub type NoisePath64 = noise::NoisePath<f64>;
/// `f64` model catalog entry.
pub type Entry64 = model::ModelCatalogEntry<f64>;
/// `f64` flow trajectory.
pub type Flow64 = flow::FlowResult<f64>;
