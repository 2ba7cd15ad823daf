//! Spectral tools for two-eigenvalue atoms, random lifts and their
//! non-backtracking ("nomadic") operators.

pub mod atoms;
pub mod error;
pub mod experiment;
pub mod ihara;
pub mod lifts;
pub mod matrix;
pub mod nomadic;
pub mod rng;
pub mod sdp;
pub mod spectra;
pub mod waves;

pub use error::{Error, Result};
