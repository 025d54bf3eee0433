//! Plane elastostatics with a B-spline Airy stress function.
//!
//! The stress function is a tensor-product B-spline on one or more mapped
//! patches. Traction boundary conditions are imposed on the control variables
//! through least-squares residuals, and the control variables left free are
//! found by minimizing the total complementary energy.

pub mod constraints;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod materials;
pub mod model;
pub mod physics;
pub mod quadrature;
pub mod solver;
pub mod spline;

pub use error::{Error, Result};
