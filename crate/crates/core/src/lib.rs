//! Periodic stationary waves of the Lugiato-Lefever equation, their Floquet-Bloch
//! spectra, and the linear decay of subharmonic and localized perturbations.

pub mod blochop;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod riemann;
pub mod semigroup;
pub mod transforms;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
