//! Protected superconducting qubits analysed as bosonic codes.
//!
//! The crate builds fluxonium, cos(2θ) and phase-slip-coupled Hamiltonians,
//! evaluates the squeezed-cat mean-field picture, extracts bit- and
//! phase-flip lifetimes from a universal Lindblad model, and simulates the
//! diabatic X gate.
//!
//! Units: energies in h·GHz, times in ns, so ħ = 1/(2π).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod error;
pub mod gates;
pub mod lifetimes;
pub mod lindblad;
pub mod linalg;
pub mod meanfield;
pub mod operators;

pub use error::{Error, Result};
