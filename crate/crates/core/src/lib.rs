//! Readout-error mitigation for finite-outcome quantum detectors.
//!
//! The pipeline: reconstruct a detector POVM from calibration counts
//! ([`tomography`]), split it into a stochastic confusion matrix and a
//! coherent residual ([`noise`]), invert the confusion matrix on measured
//! frequencies ([`mitigation`]) and bound the error of the result with
//! operational distances ([`distances`]). [`simulator`] runs the Monte
//! Carlo checks; [`io`] holds the file formats.

pub mod distances;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod matrix;
pub mod mitigation;
pub mod noise;
pub mod povm;
pub mod simulator;
pub mod tomography;

pub use distances::{BoundOptions, DistanceBound};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use mitigation::{
    characterize, characterize_product, mitigate, Characterization, ErrorBudget, MitigationReport,
};
pub use noise::{CorrectionMatrix, StochasticMatrix};
pub use povm::{DensityMatrix, Povm, ProbabilityVector};
pub use simulator::{fraction_f, FractionOptions, FractionReport, Shots};
pub use tomography::{mle_fit, CalibrationRecord, CountsVector, MleOptions, ProbeSet};
