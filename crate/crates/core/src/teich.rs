//! The product of right half-planes with the sup of hyperbolic distances,
//! and the Teichmüller distance between classes over one base polynomial.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conjugacy::ConjugacyClass;
use crate::error::{Error, Result};

/// A point of `{Re z > 0}` with the metric `|dz| / Re z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if value.re > 0.0 && value.re.is_finite() && value.im.is_finite() {
            Ok(HalfPlanePoint(value))
        } else {
            Err(Error::OutOfDomain(format!("{value}")))
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for HalfPlanePoint {
    type Error = Error;

    fn try_from(value: Complex64) -> Result<Self> {
        HalfPlanePoint::new(value)
    }
}

impl From<HalfPlanePoint> for Complex64 {
    fn from(p: HalfPlanePoint) -> Self {
        p.0
    }
}

/// `2 artanh |(a - b)/(a + b̄)|`, computed as `log((1 + r)^2 / (1 - r^2))`.
/// Near `r = 1` the denominator comes from `1 - r^2 = 4 Re a Re b / |a + b̄|^2`.
fn artanh_form(a: Complex64, b: Complex64) -> f64 {
    let den = (a + b.conj()).norm();
    let r = (a - b).norm() / den;
    let log_one_minus_r2 = if r < 0.5 {
        (-r * r).ln_1p()
    } else {
        (4.0 * a.re * b.re / (den * den)).ln()
    };
    2.0 * r.ln_1p() - log_one_minus_r2
}

/// `arccosh(1 + |a - b|^2 / (2 Re a Re b))`.
fn arccosh_form(a: Complex64, b: Complex64) -> f64 {
    let x = (a - b).norm_sqr() / (2.0 * a.re * b.re);
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

pub fn half_plane_distance(a: HalfPlanePoint, b: HalfPlanePoint) -> f64 {
    let d = artanh_form(a.0, b.0);
    debug_assert!(
        (d - arccosh_form(a.0, b.0)).abs() <= 1e-12 * d.max(1.0),
        "distance forms disagree for {} and {}",
        a.0,
        b.0
    );
    d
}

/// `max_j d(a_j, b_j)`.
pub fn product_distance(a: &[HalfPlanePoint], b: &[HalfPlanePoint]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty coordinate lists".into()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| half_plane_distance(x, y))
        .fold(0.0, f64::max))
}

fn tau_point(class: &ConjugacyClass) -> Result<Vec<HalfPlanePoint>> {
    class
        .tau_parameters()
        .entries()
        .iter()
        .map(|&t| HalfPlanePoint::new(t))
        .collect()
}

/// Teichmüller distance of two marked deformations of the same base.
pub fn teich_distance(c1: &ConjugacyClass, c2: &ConjugacyClass) -> Result<f64> {
    if !c1.levels().same_base(c2.levels()) {
        return Err(Error::BaseMismatch);
    }
    product_distance(&tau_point(c1)?, &tau_point(c2)?)
}
