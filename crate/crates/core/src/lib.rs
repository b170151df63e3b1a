//! Optical, symplectic and photon-number tomograms of truncated
//! single-mode states, and the transforms between them.

mod error;

pub mod fockspace;
pub mod check;
pub mod cli;
pub mod io;
pub mod marginals;
pub mod numerics;
pub mod states;
pub mod transforms;

pub use error::{Error, ErrorKind, Result};
