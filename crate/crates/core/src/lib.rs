//! Numerical laboratory for two flame-front equations (RS and MS) on a
//! channel with adiabatic walls.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod io;
pub mod ode;
pub mod phase_plane;
pub mod poles;
pub mod spectral;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
