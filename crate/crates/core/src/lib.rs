//! Transcritical bifurcations without parameters in ODEs, semiexplicit DAEs
//! and memristive circuits.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the usual double-precision instantiation.
pub mod analysis;
pub mod bundled;
pub mod dae;
mod error;
pub mod field;
pub mod graph;
pub mod netlist;
pub mod numerics;
mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Circuit = netlist::Circuit<f64>;
pub type CircuitDae = dae::CircuitDae<f64>;
pub type EquilibriumPoint = dae::EquilibriumPoint<f64>;
pub type Spectrum = numerics::Spectrum<f64>;
pub type PencilSpectrum = dae::PencilSpectrum<f64>;
pub type TreeFamily = graph::TreeFamily<f64>;
pub type ExchangeRun = sim::ExchangeRun<f64>;

pub type CircuitF32 = netlist::Circuit<f32>;
pub type CircuitDaeF32 = dae::CircuitDae<f32>;
