//! Lévy differential operators acting on parallel-transport functionals
//! over discretized curves, together with residual checks for the
//! Yang–Mills, Yang–Mills–Higgs and Yang–Mills–Dirac systems.

pub mod algebra;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod levy;
pub mod numerics;
pub mod paths;
pub mod sectors;
pub mod transport;

pub use error::{Error, Result};
