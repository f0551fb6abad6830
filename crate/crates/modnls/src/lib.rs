//! Spectral solver and experiment harness for the cubic nonlinear
//! Schrödinger equation with time-modulated dispersion on the torus,
//!
//!   i ∂_t u + ∂_t g(t) Δu = |u|² u,   x ∈ 𝕋^d,
//!
//! featuring a randomized exponential integrator based on stratified Monte
//! Carlo quadrature alongside a classical exponential integrator and Strang
//! splitting, modulation paths g of prescribed fractional Sobolev
//! regularity, and a convergence-order benchmark harness.
//!
//! Core numerics are generic over the real scalar via [`scalar::Scalar`];
//! the `*64` aliases below are the concrete types the CLI and experiment
//! drivers use.

pub mod config;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod io;
pub mod modulation;
pub mod propagators;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use integrators::{RandomSequence, Scheme, SchemeSpec};
pub use scalar::Scalar;

pub type Grid64 = spectral::Grid<f64>;
pub type Field64 = spectral::SpectralField<f64>;
pub type Path64 = modulation::ModulationPath<f64>;

pub type Grid32 = spectral::Grid<f32>;
pub type Field32 = spectral::SpectralField<f32>;
pub type Path32 = modulation::ModulationPath<f32>;
