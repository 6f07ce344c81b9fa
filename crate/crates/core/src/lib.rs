//! Dynamics of monic centered polynomials on their basin of infinity.
//!
//! The crate computes Green functions and Böttcher coordinates, the critical
//! escape levels cutting the fundamental annulus, a finite truncation of the
//! metrized tree of level-set components, and the extremal quasiconformal
//! data of basin conjugacy classes: the per-annulus dilatations, the minimal
//! dilatation with its uniqueness predicate, and the Teichmüller distance in
//! the product of right half-planes.

pub mod conjugacy;
pub mod error;
pub mod poly;
pub mod potential;
pub mod render;
pub mod selftest;
pub mod teich;
pub mod tree;

pub use conjugacy::{
    bilipschitz_check, ConjugacyClass, DilatationReport, ExtremalModel, TauVector,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use poly::{OrbitPoint, Polynomial};
pub use potential::{CriticalLevels, GreenValue, LevelCurve};
pub use teich::HalfPlanePoint;
pub use tree::MetrizedTree;
