//! Numerical toolkit for the average-field energy of almost-bosonic extended
//! anyons in two dimensions.
//!
//! The numerical core is generic over the float type through [`Real`]; the
//! `*64` aliases below fix it to `f64`, which is what the CLI and the
//! verification suites use.

pub mod error;
pub mod fft;
pub mod contact;
pub mod fields;
pub mod fit;
pub mod functional;
pub mod geometry;
pub mod grid;
pub mod kernels;
pub mod manybody;
pub mod scalar;
pub mod solver;
pub mod states;
pub mod sweep;
pub mod triple;
pub mod verify;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, RealField, ScalarField, VectorField2, WaveFunction};
pub use kernels::{KernelSet, SmearedCoulomb, TrapPotential};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type WaveFunction64 = WaveFunction<f64>;
pub type KernelSet64 = KernelSet<f64>;
