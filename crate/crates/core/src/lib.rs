//! Linear response and spontaneous four-wave mixing in two racetrack
//! resonators joined by a linearly uncoupling coupler.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: adaptive quadrature, bracketed root finding, Lorentzian fits.
//! * [`waveguide`]: dispersion, loss and propagation phase of the shared mode.
//! * [`coupler`]: 2x2 transfer description of a directional coupler, a
//!   Mach-Zehnder coupler or an arbitrary unitary, plus the field envelopes
//!   inside the coupling region.
//! * [`network`]: steady-state response of the full structure, resonance
//!   extraction and isolation.
//! * [`sfwm`]: overlap integrals, CW pair rates, pulsed pairs per pulse and
//!   the biphoton wavefunction.
//!
//! All frequencies are angular (rad/s) and all lengths are in meters.

pub mod constants;
pub mod coupler;
mod error;
pub mod network;
pub mod numerics;
pub mod sfwm;
pub mod waveguide;

pub use error::{Error, Result};

pub use num_complex::Complex64;
