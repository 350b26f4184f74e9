//! Spectral numerics for the periodic higher-order KdV equation
//!
//! `u_t + (-1)^{j+1} ∂_x^{2j+1} u + ½ ∂_x(u²) = 0` on the torus of length 2πλ:
//! Fourier transforms in the counting-measure normalization, the dispersion
//! relation and its resonance functions, Bourgain-type space-time norms,
//! closed-form Picard iterates, a stiff pseudo-spectral solver and empirical
//! ratio searches for the bilinear estimates.

pub mod dispersion;
pub mod error;
pub mod fit;
pub mod io;
pub mod norms;
pub mod picard;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod spacetime;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Exact, Real};

pub use dispersion::{DispersionModel, ModulationPoint, RegionLabel};
pub use norms::{DyadicShell, NormSpec, ZsNorm};
pub use solver::{Scheme, SolverConfig};
pub use spacetime::{FrameSeries, Segment, SmoothBump, SpaceTimeField, TimeWindow, UnitWindow};
pub use torus::{Lambda, SpectralField, SpectralPlan, TorusGrid};

pub type SpectralField64 = SpectralField<f64>;
pub type SpectralField32 = SpectralField<f32>;
pub type SpaceTimeField64 = SpaceTimeField<f64>;
pub type FrameSeries64 = FrameSeries<f64>;
pub type Complex64 = num_complex::Complex<f64>;
