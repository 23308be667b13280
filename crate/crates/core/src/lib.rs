//! Frequency-domain quantum noise of detuned dual-recycled Michelson
//! interferometers read out with EPR-entangled (conditional) squeezing.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs: the optical network solver, the two-photon
//! quadrature algebra, the EPR source model, the GEO 600 style interferometer
//! and the parameter optimizer. File formats, the CLI and parallel sweeps live
//! in the `eprsim` companion crate.
//!
//! Conventions used throughout:
//!
//! * frequencies are angular (rad/s) internally; see [`twophoton::AngularFrequency`];
//! * field amplitudes evolve as `e^{-iωt}`, so propagation over a length `ℓ`
//!   multiplies a sideband at offset `ω` from the carrier by `e^{+iωℓ/c}`;
//! * spectral densities are normalised so that vacuum is the identity.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod cavity;
pub mod error;
pub mod geo;
pub mod linalg;
pub mod network;
pub mod optimize;
pub mod squeezer;
pub mod twophoton;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

pub use num_complex::Complex64 as C64;
