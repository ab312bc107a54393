//! Few-photon linear-optics simulator for polarization entanglement
//! concentration.
//!
//! The crate models sparse bosonic Fock states over labeled beams, applies
//! linear-optical elements (polarizing beam splitters, wave plates, phase
//! shifters) by creation-operator substitution, and evaluates threshold and
//! number-resolving detection exactly or by seeded Monte Carlo. On top of
//! that it implements a post-selection-free entanglement concentration
//! scheme and the count-subtraction protocol that verifies it, plus a small
//! text language for describing circuits.

pub mod circuitlang;
pub mod detect;
pub mod elements;
mod error;
pub mod fock;
pub mod schemes;

pub use error::{Error, Result};
pub use fock::{mode, Ensemble, FockState, ModeId, Occupation, Pol};

pub use num_complex::Complex64;
