//! Numerical laboratory for Hessian estimates of Kolmogorov-Fokker-Planck
//! operators: the homogeneous group structure, explicit Gaussian kernels,
//! spherical-harmonic kernel expansions, dyadic and sparse machinery, and
//! weighted/Orlicz function spaces.

#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod discretization;
pub mod dyadic;
pub mod estimates;
pub mod error;
pub mod function_spaces;
pub mod geometry;
pub mod harmonics;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod sparse;
pub mod stats;

pub use error::{LabError, Result};
pub use geometry::{OperatorShape, Point};
