//! Homotopy classes of basin conjugacies and their extremal representatives.
//!
//! A class is recorded by its stretching and turning values at the critical
//! levels `ℓ_0..ℓ_N`. The difference quotients on each subannulus give
//! `τ*_j` in the right half-plane; the extremal conjugacy is linear in
//! `(S, T)` on every subannulus, its Beltrami coefficient has constant
//! modulus `|(τ*_j - 1)/(τ*_j + 1)|` on the grand orbit of `A_j`, and the
//! minimal dilatation is the largest of these moduli.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::{green_gradient, green_value, CriticalLevels};

/// Default tolerance on per-annulus dilatation differences for uniqueness.
pub const UNIQUENESS_TOLERANCE: f64 = 1e-9;
/// Relative width (in units of `M`) of the excluded band around level breaks.
pub const BREAK_EXCLUSION: f64 = 1e-8;

/// JSON form of a class: `{"S": [...], "T": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDescriptor {
    #[serde(rename = "S")]
    pub stretch: Vec<f64>,
    #[serde(rename = "T")]
    pub turn: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyClass {
    levels: CriticalLevels,
    stretch: Vec<f64>,
    turn: Vec<f64>,
}

/// `τ*_1..τ*_N`, a point of the product of right half-planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauVector(pub Vec<Complex64>);

impl TauVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationReport {
    pub per_annulus: Vec<f64>,
    pub minimal: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub unique: bool,
}

impl ConjugacyClass {
    pub fn new(levels: CriticalLevels, stretch: Vec<f64>, turn: Vec<f64>) -> Result<Self> {
        let expected = levels.levels().len();
        for len in [stretch.len(), turn.len()] {
            if len != expected {
                return Err(Error::ClassLengthMismatch {
                    expected,
                    actual: len,
                });
            }
        }
        if stretch.iter().any(|s| !s.is_finite()) || turn.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("class values must be finite".into()));
        }
        if stretch[0] <= 0.0 || stretch.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NotMonotone);
        }
        let d = levels.degree() as f64;
        let n = expected - 1;
        let s_gap = (stretch[n] - d * stretch[0]).abs();
        if s_gap > 1e-12 * stretch[n].abs().max(1.0) {
            return Err(Error::FunctionalEquationViolated(format!(
                "S(ℓ_N) = {} but d·S(ℓ_0) = {}",
                stretch[n],
                d * stretch[0]
            )));
        }
        let t_gap = (turn[n] - d * turn[0]).abs();
        if t_gap > 1e-12 * turn[n].abs().max(1.0) {
            return Err(Error::FunctionalEquationViolated(format!(
                "T(ℓ_N) = {} but d·T(ℓ_0) = {}",
                turn[n],
                d * turn[0]
            )));
        }
        Ok(ConjugacyClass {
            levels,
            stretch,
            turn,
        })
    }

    pub fn from_descriptor(levels: CriticalLevels, desc: ClassDescriptor) -> Result<Self> {
        Self::new(levels, desc.stretch, desc.turn)
    }

    pub fn to_descriptor(&self) -> ClassDescriptor {
        ClassDescriptor {
            stretch: self.stretch.clone(),
            turn: self.turn.clone(),
        }
    }

    /// The class of the identity conjugacy: `S = ℓ`, `T = 0`.
    pub fn identity(levels: CriticalLevels) -> Self {
        let stretch = levels.levels().to_vec();
        let turn = vec![0.0; stretch.len()];
        ConjugacyClass {
            levels,
            stretch,
            turn,
        }
    }

    /// The class whose difference quotients are the given `τ*_j`.
    ///
    /// The endpoint conditions `S(ℓ_N) = d S(ℓ_0)`, `T(ℓ_N) = d T(ℓ_0)` fix
    /// `S(ℓ_0)` and `T(ℓ_0)` uniquely.
    pub fn from_tau(levels: CriticalLevels, tau: &[Complex64]) -> Result<Self> {
        let n = levels.annulus_count();
        if tau.len() != n {
            return Err(Error::ClassLengthMismatch {
                expected: n,
                actual: tau.len(),
            });
        }
        if let Some(bad) = tau.iter().find(|t| t.re.is_nan() || t.re <= 0.0) {
            return Err(Error::OutOfDomain(format!("{bad}")));
        }
        let d = levels.degree() as f64;
        let l = levels.levels();
        let rise: Complex64 = (1..=n).map(|j| tau[j - 1] * (l[j] - l[j - 1])).sum();
        let base = rise / (d - 1.0);
        let mut stretch = vec![base.re];
        let mut turn = vec![base.im];
        for j in 1..=n {
            let step = tau[j - 1] * (l[j] - l[j - 1]);
            stretch.push(stretch[j - 1] + step.re);
            turn.push(turn[j - 1] + step.im);
        }
        // pin the endpoints to the functional equation exactly
        stretch[n] = d * stretch[0];
        turn[n] = d * turn[0];
        Self::new(levels, stretch, turn)
    }

    pub fn levels(&self) -> &CriticalLevels {
        &self.levels
    }

    pub fn stretch(&self) -> &[f64] {
        &self.stretch
    }

    pub fn turn(&self) -> &[f64] {
        &self.turn
    }

    pub fn tau_parameters(&self) -> TauVector {
        let l = self.levels.levels();
        TauVector(
            (1..l.len())
                .map(|j| {
                    let width = l[j] - l[j - 1];
                    Complex64::new(
                        (self.stretch[j] - self.stretch[j - 1]) / width,
                        (self.turn[j] - self.turn[j - 1]) / width,
                    )
                })
                .collect(),
        )
    }

    pub fn minimal_dilatation(&self, tol: f64) -> DilatationReport {
        let per_annulus: Vec<f64> = self
            .tau_parameters()
            .0
            .iter()
            .map(|&t| ((t - 1.0) / (t + 1.0)).norm())
            .collect();
        let minimal = per_annulus.iter().copied().fold(0.0, f64::max);
        let least = per_annulus.iter().copied().fold(f64::INFINITY, f64::min);
        DilatationReport {
            unique: minimal - least <= tol,
            k: (1.0 + minimal) / (1.0 - minimal),
            minimal,
            per_annulus,
        }
    }

    pub fn extremal_model(&self) -> ExtremalModel {
        ExtremalModel {
            slopes: self
                .tau_parameters()
                .0
                .into_iter()
                .map(|t| (t.re, t.im))
                .collect(),
            class: self.clone(),
        }
    }

    /// Critical levels of the target: the stretched values `S(ℓ_j)`.
    pub fn image_levels(&self) -> Result<CriticalLevels> {
        let n = self.stretch.len() - 1;
        CriticalLevels::new(self.levels.degree(), self.stretch[0], &self.stretch[1..n])
    }

    /// `then ∘ self`, where `then` is a class over the target levels of `self`.
    pub fn compose(&self, then: &ConjugacyClass) -> Result<ConjugacyClass> {
        if !then.levels.same_base(&self.image_levels()?) {
            return Err(Error::BaseMismatch);
        }
        let turn = self
            .turn
            .iter()
            .zip(&then.turn)
            .map(|(a, b)| a + b)
            .collect();
        ConjugacyClass::new(self.levels.clone(), then.stretch.clone(), turn)
    }
}

/// Piecewise-linear stretching and turning on `[ℓ_0, ℓ_N]`, extended to all
/// `t > 0` by `S(dt) = d S(t)`, `T(dt) = d T(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalModel {
    class: ConjugacyClass,
    slopes: Vec<(f64, f64)>,
}

impl ExtremalModel {
    pub fn class(&self) -> &ConjugacyClass {
        &self.class
    }

    /// `(S', T')` on each subannulus.
    pub fn slopes(&self) -> &[(f64, f64)] {
        &self.slopes
    }

    pub fn stretch_turn_at(&self, t: f64) -> (f64, f64) {
        let levels = self.class.levels();
        let (v, k) = levels.normalize(t);
        let j = levels.interval_of(v);
        let l = levels.levels();
        let (s0, t0) = (self.class.stretch[j - 1], self.class.turn[j - 1]);
        let (ds, dt) = self.slopes[j - 1];
        let offset = v - l[j - 1];
        let (s, tt) = if offset == 0.0 {
            (s0, t0)
        } else {
            (s0 + ds * offset, t0 + dt * offset)
        };
        let scale = (levels.degree() as f64).powi(-k);
        (s * scale, tt * scale)
    }

    /// Slopes in force at Green level `t`, refusing levels within the break
    /// exclusion band.
    pub fn slopes_at(&self, t: f64) -> Result<(f64, f64)> {
        let levels = self.class.levels();
        if levels.distance_to_break(t) <= BREAK_EXCLUSION * levels.max_critical() {
            return Err(Error::OnLevelBreak(t));
        }
        let (v, _) = levels.normalize(t);
        Ok(self.slopes[levels.interval_of(v) - 1])
    }
}

/// Beltrami coefficient `μ_ψ(z)` of the extremal model conjugacy.
pub fn beltrami_at(p: &Polynomial, model: &ExtremalModel, z: Complex64) -> Result<Complex64> {
    let g = green_value(p, z);
    if !g.escaped {
        return Err(Error::NotEscaping);
    }
    let (s, t) = model.slopes_at(g.value)?;
    let tau = Complex64::new(s, t);
    let omega = green_gradient(p, z)?;
    Ok((tau - 1.0) / (tau + 1.0) * (omega.conj() / omega))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilipschitzReport {
    #[serde(rename = "K")]
    pub k: f64,
    /// Subannulus indices (1-based) whose slope leaves `[1/K, K]`.
    pub slope_violations: Vec<usize>,
    pub pairs_checked: usize,
    pub pair_violations: usize,
}

impl BilipschitzReport {
    pub fn passed(&self) -> bool {
        self.slope_violations.is_empty() && self.pair_violations == 0
    }
}

/// Checks `(G_1 - G_2)/K <= S(G_1) - S(G_2) <= K (G_1 - G_2)` on the model's
/// slopes and on `samples` random escaping pairs.
pub fn bilipschitz_check(
    p: &Polynomial,
    model: &ExtremalModel,
    samples: usize,
    seed: u64,
) -> BilipschitzReport {
    let k = model.class().minimal_dilatation(UNIQUENESS_TOLERANCE).k;
    let slack = 1e-12;
    let slope_violations = model
        .slopes()
        .iter()
        .enumerate()
        .filter(|(_, &(s, _))| s < (1.0 / k) * (1.0 - slack) || s > k * (1.0 + slack))
        .map(|(j, _)| j + 1)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = p.escape_radius();
    let mut sample_level = || loop {
        let z = Complex64::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        let g = green_value(p, z);
        if g.escaped && g.value > 0.0 {
            return g.value;
        }
    };
    let mut pair_violations = 0;
    for _ in 0..samples {
        let (a, b) = (sample_level(), sample_level());
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let gap = hi - lo;
        let image = model.stretch_turn_at(hi).0 - model.stretch_turn_at(lo).0;
        let room = slack * model.stretch_turn_at(hi).0.abs().max(1.0);
        if image < gap / k - room || image > k * gap + room {
            pair_violations += 1;
        }
    }
    BilipschitzReport {
        k,
        slope_violations,
        pairs_checked: samples,
        pair_violations,
    }
}
