//! Two-mode displaced-squeezed light, parsed into fixed-photon-number
//! polarization manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] synthesizes single-mode Gaussian-family states in a truncated
//!   Fock basis, applies loss and composes the two polarization modes.
//! * [`polar`] extracts the block-diagonal polarization sector, one block per
//!   total photon number `N = 2S`.
//! * [`stokes`] builds spin-`S` Stokes matrices and computes mean vectors,
//!   covariance matrices and the squeezing degree `xi2`.
//! * [`sphere`] provides SU(2) coherent states, Gauss-Legendre grids on the
//!   sphere, Husimi Q functions and raster rendering.
//! * [`multipole`] expands blocks into state multipoles and `W_K` spectra.
//! * [`pipeline`] wires everything into a parameter sweep with CSV/JSON/PPM
//!   output.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod multipole;
pub mod pipeline;
pub mod polar;
pub mod sphere;
pub mod stokes;

pub use error::{Error, Result};
pub use fock::{ModeState, NoiseModel, TwoModeState};
pub use polar::{ManifoldBlock, PolarizationSector, Spin};
pub use stokes::StokesSummary;

pub use num_complex::Complex64;

/// Dense complex matrix used for density matrices and operators.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
