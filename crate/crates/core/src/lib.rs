//! Isotropic Boltzmann-Nordheim kinetics for bosons in energy variables.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod plot;
pub mod potential;
pub mod quad;
pub mod solver;
pub mod special;
pub mod suites;
pub mod testfn;

pub use error::{Error, Result};
