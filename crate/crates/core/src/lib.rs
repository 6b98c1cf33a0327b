//! Photon-subtracted two-mode squeezed light: the factorized Wigner-function
//! model with experimental imperfections, Fock-basis negativity, and
//! homodyne tomography on simulated data.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod tomography;

pub use error::{Error, Result};
