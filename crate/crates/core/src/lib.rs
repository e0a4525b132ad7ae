//! Spectral analysis of Dirac operators linearized at Soler solitary waves
//! in one dimension: closed-form profiles, staggered discretizations, gap
//! eigenvalues, min-max bounds and threshold shooting.

// Negated comparisons are used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod discretization;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod spectral;
pub mod threshold;
pub mod tridiag;

pub use error::{Error, Result};
pub use params::ModelParams;
