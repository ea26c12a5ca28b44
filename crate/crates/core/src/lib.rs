//! Symmetry breaking for end-to-end learned phase retrieval.
//!
//! Real and complex Gaussian phase retrieval (`y = |Ax|^2`) lose the sign
//! or global phase of `x`. A network trained to invert them directly sees
//! one `y` paired with many `x`. This crate maps every training target onto
//! a single representative of its symmetry orbit first, then compares
//! learners trained with and without that step under symmetry-aware error
//! metrics.

pub mod dataset;
pub mod error;
pub mod forward_model;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod numerics;
pub mod plot;
pub mod symmetry;

pub use error::{Error, Result};
pub use numerics::{CplxVec, Field, Matrix, RealVec, RngStream, Signal};
