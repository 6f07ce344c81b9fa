#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use basin_core::potential::{green_value, CriticalLevels};
use basin_core::{Complex64, ConjugacyClass, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PREC: usize = 512;
const RM: RoundingMode = RoundingMode::ToEven;
/// Stop once |z| passes 2^(2^20): the remaining tail is far below f64 resolution.
const EXPONENT_CAP: i32 = 1 << 20;

pub fn cantor() -> Polynomial {
    Polynomial::real(2, &[4.0]).unwrap()
}

pub fn rabbit_like() -> Polynomial {
    Polynomial::new(2, vec![Complex64::new(-2.0, 0.5)]).unwrap()
}

pub fn cubic() -> Polynomial {
    Polynomial::real(3, &[1.0, -6.0]).unwrap()
}

#[derive(Clone)]
struct BigComplex {
    re: BigFloat,
    im: BigFloat,
}

impl BigComplex {
    fn real(x: BigFloat) -> Self {
        BigComplex {
            re: x,
            im: BigFloat::from_f64(0.0, PREC),
        }
    }

    fn from_f64(z: Complex64) -> Self {
        BigComplex {
            re: BigFloat::from_f64(z.re, PREC),
            im: BigFloat::from_f64(z.im, PREC),
        }
    }

    fn add(&self, o: &BigComplex) -> BigComplex {
        BigComplex {
            re: self.re.add(&o.re, PREC, RM),
            im: self.im.add(&o.im, PREC, RM),
        }
    }

    fn mul(&self, o: &BigComplex) -> BigComplex {
        let re = self
            .re
            .mul(&o.re, PREC, RM)
            .sub(&self.im.mul(&o.im, PREC, RM), PREC, RM);
        let im = self
            .re
            .mul(&o.im, PREC, RM)
            .add(&self.im.mul(&o.re, PREC, RM), PREC, RM);
        BigComplex { re, im }
    }

    fn exponent(&self) -> i32 {
        let e = |x: &BigFloat| {
            if x.is_zero() {
                i32::MIN
            } else {
                x.exponent().unwrap_or(i32::MIN)
            }
        };
        e(&self.re).max(e(&self.im))
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    format!("{x}")
        .parse()
        .expect("astro-float prints parseable decimals")
}

/// `log|f^n(z)| / d^n` in 512-bit arithmetic, for at most 60 steps.
fn extended_green(p: &Polynomial, z: BigComplex) -> f64 {
    let mut cc = Consts::new().unwrap();
    let coeffs: Vec<BigComplex> = p
        .coefficients()
        .iter()
        .map(|&a| BigComplex::from_f64(a))
        .collect();
    let mut w = z;
    let mut steps = 0;
    while steps < 60 && w.exponent() < EXPONENT_CAP {
        let mut acc = w.clone();
        for a in coeffs.iter().rev() {
            acc = acc.mul(&w).add(a);
        }
        w = acc;
        steps += 1;
    }
    let modulus2 =
        w.re.mul(&w.re, PREC, RM)
            .add(&w.im.mul(&w.im, PREC, RM), PREC, RM);
    let log_modulus = modulus2
        .ln(PREC, RM, &mut cc)
        .div(&BigFloat::from_f64(2.0, PREC), PREC, RM);
    let scale = BigFloat::from_f64((p.degree() as f64).powi(steps), PREC);
    to_f64(&log_modulus.div(&scale, PREC, RM))
}

/// Extended-precision Green value of the two-term cubic's critical points `±√2`.
pub fn cubic_critical_greens() -> (f64, f64) {
    let p = cubic();
    let root2 = BigFloat::from_f64(2.0, PREC).sqrt(PREC, RM);
    let plus = extended_green(&p, BigComplex::real(root2.clone()));
    let minus = extended_green(&p, BigComplex::real(root2.neg()));
    (plus, minus)
}

/// Extended-precision `G(0)` for `z^2 + 4`.
pub fn cantor_fundamental_level() -> f64 {
    extended_green(&cantor(), BigComplex::real(BigFloat::from_f64(0.0, PREC)))
}

/// Fundamental level and sorted critical levels, normalized into `(M, dM]`.
pub fn oracle_levels(degree: usize, critical_greens: &[f64]) -> Vec<f64> {
    let d = degree as f64;
    let m = critical_greens.iter().copied().fold(0.0, f64::max);
    let mut levels = vec![m];
    for &g in critical_greens {
        if g <= 0.0 {
            continue;
        }
        let mut t = g;
        while t <= m * (1.0 + 1e-9) {
            t *= d;
        }
        if t < d * m * (1.0 - 1e-9) && levels.iter().all(|l| (l - t).abs() > 1e-8 * m) {
            levels.push(t);
        }
    }
    levels.push(d * m);
    levels.sort_by(f64::total_cmp);
    levels
}

/// Uniform points of the escape square with `G > floor`.
pub fn escaping_points(p: &Polynomial, seed: u64, count: usize, floor: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = p.escape_radius();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let g = green_value(p, z);
        if g.escaped && g.value > floor {
            out.push(z);
        }
    }
    out
}

pub fn random_tau(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(0.05..20.0), rng.gen_range(-10.0..10.0)))
        .collect()
}

pub fn random_class(levels: &CriticalLevels, rng: &mut ChaCha8Rng) -> ConjugacyClass {
    let tau = random_tau(rng, levels.annulus_count());
    ConjugacyClass::from_tau(levels.clone(), &tau).unwrap()
}

/// `|(τ - 1)/(τ + 1)|` from real arithmetic only.
pub fn scalar_dilatation(s: f64, t: f64) -> f64 {
    (((s - 1.0) * (s - 1.0) + t * t) / ((s + 1.0) * (s + 1.0) + t * t)).sqrt()
}

/// `τ*_j` recomputed directly from the raw stretch/turn samples.
pub fn scalar_tau(levels: &[f64], stretch: &[f64], turn: &[f64]) -> Vec<(f64, f64)> {
    (1..levels.len())
        .map(|j| {
            let dl = levels[j] - levels[j - 1];
            (
                (stretch[j] - stretch[j - 1]) / dl,
                (turn[j] - turn[j - 1]) / dl,
            )
        })
        .collect()
}

/// Central finite differences: `G_x - i G_y`.
pub fn fd_gradient(p: &Polynomial, z: Complex64, h: f64) -> Complex64 {
    let g = |w: Complex64| green_value(p, w).value;
    let dx = Complex64::new(h, 0.0);
    let dy = Complex64::new(0.0, h);
    let gx = (g(z + dx) - g(z - dx)) / (2.0 * h);
    let gy = (g(z + dy) - g(z - dy)) / (2.0 * h);
    Complex64::new(gx, -gy)
}
