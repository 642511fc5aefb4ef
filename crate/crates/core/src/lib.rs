//! Numerical laboratory for the geometry, incidence combinatorics and
//! decoupling inequalities attached to the twisted cubic `t -> (t, t^2, t^3)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: Frenet frames, shear maps, oriented boxes and exact
//!   convex-polytope intersection volumes.
//! - [`partition`]: small-plank families and the layer decomposition of the
//!   union of base frequency planks.
//! - [`incidence`]: spacing-constrained box families, rich-cube counting and
//!   Kakeya-type inequality checks.
//! - [`decoupling`]: exponential sums on the curve, L^p moments, decoupling
//!   ratios, wave packets and the pigeonholing analyzer.
//! - [`harness`]: experiment registry, configuration and reports behind the
//!   `vinolab` CLI.

pub mod decoupling;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod incidence;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};

/// Column vector used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix used throughout the crate.
pub type Mat3 = nalgebra::Matrix3<f64>;
