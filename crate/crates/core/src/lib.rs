//! Radial quasilinear wave solver for short outgoing pulses.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod profiles;
pub mod solver;
pub mod stencil;
pub mod sweep;

pub use error::{Error, Result};
