//! Warm-cloud reaction-diffusion model with two bulk water species: cloud
//! water `q_c` and rain water `q_r`.
//!
//! The crate provides, in dependency order:
//!
//! - [`model`]: reaction right-hand sides, Jacobians and all closed-form
//!   equilibrium branches of the two-species cloud scheme,
//! - [`stability`]: linear stability classification, the dispersion
//!   polynomial in `q^2`, unstable wavenumber bands, discrete mode sets on a
//!   periodic domain and rain-flux thresholds,
//! - [`spectral`]: periodic 1D/2D grids, Fourier transforms, Laplacian
//!   symbol tables and pointwise nonlinear evaluation,
//! - [`integrator`]: first- and second-order exponential time differencing
//!   steppers acting on spectral coefficients,
//! - [`sim`]: experiment driver (initial conditions, trajectories,
//!   diagnostics, rain-flux sweeps),
//! - [`analysis`]: assembled per-configuration stability reports.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases at the crate root fix `f64`, which is what
//! the CLI and the acceptance suite use.

pub mod analysis;
pub mod cubic;
pub mod error;
pub mod integrator;
pub mod model;
pub mod presets;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Real;

use serde::{Deserialize, Serialize};

/// Spatial dimensionality of the periodic domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dims {
    One,
    Two,
}

impl Dims {
    /// Number of spatial dimensions as an integer.
    pub fn count(self) -> usize {
        match self {
            Dims::One => 1,
            Dims::Two => 2,
        }
    }
}

impl TryFrom<u8> for Dims {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Dims::One),
            2 => Ok(Dims::Two),
            other => Err(format!("dims must be 1 or 2, got {other}")),
        }
    }
}

impl From<Dims> for u8 {
    fn from(d: Dims) -> u8 {
        d.count() as u8
    }
}

/// Concrete `f64` aliases for the main public types.
pub type CloudParams64 = model::CloudParams<f64>;
pub type DiffusionParams64 = model::DiffusionParams<f64>;
pub type State64 = model::State<f64>;
pub type Equilibrium64 = model::Equilibrium<f64>;
pub type Jacobian64 = model::Jacobian2<f64>;
pub type StabilityReport64 = stability::StabilityReport<f64>;
pub type DomainSpec64 = stability::DomainSpec<f64>;
pub type GridSpec64 = spectral::GridSpec<f64>;
pub type FieldPair64 = spectral::FieldPair<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type AnalysisReport64 = analysis::AnalysisReport<f64>;
