//! Monic centered polynomials `z^d + a_{d-2} z^{d-2} + ... + a_0`.
//!
//! Evaluation is Horner-based. Iteration stops as soon as the orbit leaves
//! the escape disk, whose radius certifies monotone growth beyond it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NEWTON_POLISH_STEPS: usize = 8;
const CRITICAL_RESIDUAL: f64 = 1e-10;

/// A monic, centered complex polynomial of degree `d >= 2`.
///
/// Only `a_0..a_{d-2}` are stored; the leading coefficient is 1 and the
/// `z^{d-1}` coefficient is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialDescriptor", into = "PolynomialDescriptor")]
pub struct Polynomial {
    degree: usize,
    coefficients: Vec<Complex64>,
}

/// JSON form `{"degree": d, "coefficients": [[re, im], ...]}`, `a_0` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDescriptor {
    pub degree: usize,
    pub coefficients: Vec<[f64; 2]>,
}

impl TryFrom<PolynomialDescriptor> for Polynomial {
    type Error = Error;

    fn try_from(desc: PolynomialDescriptor) -> Result<Self> {
        let coefficients = desc
            .coefficients
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Polynomial::new(desc.degree, coefficients)
    }
}

impl From<Polynomial> for PolynomialDescriptor {
    fn from(p: Polynomial) -> Self {
        PolynomialDescriptor {
            degree: p.degree,
            coefficients: p.coefficients.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

/// State of an orbit after (at most) `iterate_index` applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub value: Complex64,
    pub iterate_index: usize,
    pub escaped: bool,
}

impl Polynomial {
    pub fn new(degree: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::DegreeTooSmall(degree));
        }
        if coefficients.len() != degree - 1 {
            return Err(Error::WrongCoefficientCount {
                degree,
                expected: degree - 1,
                actual: coefficients.len(),
            });
        }
        Ok(Polynomial {
            degree,
            coefficients,
        })
    }

    /// Convenience constructor from real coefficients.
    pub fn real(degree: usize, coefficients: &[f64]) -> Result<Self> {
        Self::new(
            degree,
            coefficients
                .iter()
                .map(|&c| Complex64::new(c, 0.0))
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `a_0..a_{d-2}`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `Σ |a_j|`.
    pub fn coefficient_mass(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).sum()
    }

    /// `max(2, 2(1 + Σ|a_j|))`. Beyond this radius `|f(z)| >= |z|^d / 2 > |z|`.
    pub fn escape_radius(&self) -> f64 {
        (2.0 * (1.0 + self.coefficient_mass())).max(2.0)
    }

    /// Conformal conjugate `z ↦ f(a z) / a` for `a^{d-1} = 1`, which is again
    /// monic and centered with coefficients `a_j a^{j-1}`.
    pub fn rotate_conjugate(&self, a: Complex64) -> Result<Self> {
        let drift = (a.powu(self.degree as u32 - 1) - 1.0).norm();
        if drift > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "rotation {a} is not a root of unity of order d-1"
            )));
        }
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, &c)| c * a.powi(j as i32 - 1))
            .collect();
        Polynomial::new(self.degree, coefficients)
    }

    /// Horner evaluation with no overflow check.
    #[inline]
    pub(crate) fn eval_raw(&self, z: Complex64) -> Complex64 {
        // leading 1, then the vanishing z^{d-1} coefficient
        let mut acc = z;
        for &c in self.coefficients.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    #[inline]
    pub(crate) fn derivative_raw(&self, z: Complex64) -> Complex64 {
        let d = self.degree;
        // f'(z) = d z^{d-1} + Σ_{j>=1} j a_j z^{j-1}
        let mut acc = z * d as f64;
        for j in (1..d - 1).rev() {
            acc = acc * z + self.coefficients[j] * j as f64;
        }
        acc
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        let w = self.eval_raw(z);
        if w.re.is_finite() && w.im.is_finite() {
            Ok(w)
        } else {
            Err(Error::OverflowToInfinity)
        }
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let w = self.derivative_raw(z);
        if w.re.is_finite() && w.im.is_finite() {
            Ok(w)
        } else {
            Err(Error::OverflowToInfinity)
        }
    }

    /// `f(w) / w^d = 1 + Σ a_j w^{j-d}`, evaluated in `1/w` so it never overflows.
    pub(crate) fn ratio_to_leading(&self, w: Complex64) -> Complex64 {
        let u = w.inv();
        // Σ_j a_j u^{d-j}, Horner in u over j = 0..d-2
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &self.coefficients {
            acc = (acc + c) * u;
        }
        // acc = Σ a_j u^{d-1-j}; one more factor of u
        Complex64::new(1.0, 0.0) + acc * u
    }

    /// Applies `f` up to `n` times, stopping early once the orbit leaves the
    /// escape disk.
    pub fn iterate(&self, z: Complex64, n: usize) -> OrbitPoint {
        let radius = self.escape_radius();
        let mut value = z;
        for k in 0..n {
            if value.norm() > radius {
                return OrbitPoint {
                    value,
                    iterate_index: k,
                    escaped: true,
                };
            }
            value = self.eval_raw(value);
            if !(value.re.is_finite() && value.im.is_finite()) {
                return OrbitPoint {
                    value,
                    iterate_index: k + 1,
                    escaped: true,
                };
            }
        }
        OrbitPoint {
            value,
            iterate_index: n,
            escaped: value.norm() > radius,
        }
    }

    /// The `d - 1` roots of `f'` with multiplicity, sorted lexicographically
    /// by `(re, im)`.
    pub fn critical_points(&self) -> Result<Vec<Complex64>> {
        let d = self.degree;
        let m = d - 1;
        // f'/d = z^m + Σ_{j=1}^{d-2} (j a_j / d) z^{j-1}; companion of that.
        let mut monic = vec![Complex64::new(0.0, 0.0); m];
        for j in 1..d - 1 {
            monic[j - 1] = self.coefficients[j] * (j as f64 / d as f64);
        }
        let mut roots = if m == 1 {
            vec![-monic[0]]
        } else {
            let mut companion = DMatrix::<Complex64>::zeros(m, m);
            for i in 1..m {
                companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..m {
                companion[(i, m - 1)] = -monic[i];
            }
            let schur = nalgebra::linalg::Schur::new(companion);
            let t = schur.unpack().1;
            (0..m).map(|i| t[(i, i)]).collect::<Vec<_>>()
        };

        for r in roots.iter_mut() {
            for _ in 0..NEWTON_POLISH_STEPS {
                let fp = self.derivative_raw(*r);
                let fpp = self.second_derivative(*r);
                if fpp.norm() == 0.0 {
                    break;
                }
                let next = *r - fp / fpp;
                if !(next.re.is_finite() && next.im.is_finite()) {
                    break;
                }
                if self.derivative_raw(next).norm() >= fp.norm() {
                    break;
                }
                *r = next;
            }
            let residual = self.derivative_raw(*r).norm();
            let scale = r.norm().powi(d as i32 - 2).max(1.0);
            if residual > CRITICAL_RESIDUAL * scale || !residual.is_finite() {
                return Err(Error::RootFindingFailed {
                    root: format!("{r}"),
                    residual,
                });
            }
            // normalise signed zeros
            *r = Complex64::new(r.re + 0.0, r.im + 0.0);
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    fn second_derivative(&self, z: Complex64) -> Complex64 {
        let d = self.degree;
        let mut acc = Complex64::new((d * (d - 1)) as f64, 0.0) * z.powu(d as u32 - 2);
        for j in 2..d - 1 {
            acc += self.coefficients[j] * (j * (j - 1)) as f64 * z.powu(j as u32 - 2);
        }
        acc
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "z^{}", self.degree)?;
        for (j, c) in self.coefficients.iter().enumerate().rev() {
            if c.norm() == 0.0 {
                continue;
            }
            match j {
                0 => write!(f, " + ({c})")?,
                1 => write!(f, " + ({c})z")?,
                _ => write!(f, " + ({c})z^{j}")?,
            }
        }
        Ok(())
    }
}
