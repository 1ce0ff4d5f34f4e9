//! Secret-key rates for measurement-device-independent QKD when the source
//! leaks a time-dependent polarization side-channel.
//!
//! The pipeline runs from optics (prepared states, leakage overlaps, the
//! modulator phase profile and the joint signal Gram matrix) through the
//! relay's detection statistics and decoy-state bounds to a phase-error
//! semidefinite program whose dual value certifies the key rate.

pub mod config;
pub mod decoy;
pub mod detection;
pub mod error;
pub mod gram;
pub mod keyrate;
pub mod leakage;
pub mod oracle;
pub mod pereira;
pub mod presets;
pub mod profile;
pub mod report;
pub mod scenario;
pub mod security;
pub mod states;
pub mod validate;

pub use num_complex::Complex64 as C64;

pub use conic::{Status, Tolerances};
pub use error::{Error, Result};

/// Double-precision solver types used throughout the pipeline.
pub type LinearProgram = conic::LinearProgram<f64>;
pub type SemidefiniteProgram = conic::SemidefiniteProgram<f64>;
pub type ConicSolution = conic::ConicSolution<f64>;
pub type SolverTolerances = conic::Tolerances<f64>;
