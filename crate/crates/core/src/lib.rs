//! Exact density-matrix simulation of heralded two-qubit parity measurements
//! on an electron-nuclear spin register.
//!
//! The register is a ¹³C nuclear qubit, a ¹⁴N nuclear qubit and the NV
//! electron spin used as readout ancilla, ordered `(C, N, a)` with the basis
//! index `4c + 2n + a`. Everything here is pure arithmetic on small dense
//! matrices, so the crate is `no_std` and only needs `alloc`.
//!
//! Module map:
//!
//! * [`qstate`]: density matrices, gates, Kraus channels, heralded measurements.
//! * [`gates`]: RF rotations, state-selective ancilla flips and noisy pulses.
//! * [`noise`]: noise/readout models, confusion matrices and calibration.
//! * [`protocol`]: initialization, parity measurement, Bell preparation,
//!   basis sweeps, single-shot readout and CHSH runs.
//! * [`tomo`]: tomography, physical projection, correlation statistics and fits.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gates;
pub mod linalg;
mod math;
pub mod noise;
mod optimize;
pub mod protocol;
pub mod qstate;
pub mod tomo;

pub use error::{Error, Result};
pub use linalg::{Matrix, C64};
pub use qstate::{DensityMatrix, GateOp, HeraldedOutcome, KrausChannel, Qubit, QubitSet};
