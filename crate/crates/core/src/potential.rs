//! Green function, its complex gradient `ω = 2∂G`, the Böttcher coordinate,
//! the critical escape levels of the fundamental annulus, and level curves.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Truncation target for the escape-rate tail.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Orbits still bounded after this many steps are treated as non-escaping.
pub const ITERATION_BUDGET: usize = 4000;
/// Relative (to `M`) tolerance under which two normalized levels coincide.
pub const LEVEL_MERGE_TOLERANCE: f64 = 1e-8;
/// Vertices of a traced curve satisfy `|G - L| <= CURVE_TOLERANCE * max(1, L)`.
pub const CURVE_TOLERANCE: f64 = 1e-9;

/// Nominal number of steps per full turn of a level curve.
const CURVE_STEPS_PER_TURN: f64 = 2048.0;
const MAX_CURVE_VERTICES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub certified_error: f64,
    /// Iterates used; equals the budget for non-escaping points.
    pub iterations: usize,
    pub escaped: bool,
}

struct Escape {
    iterations: usize,
    point: Complex64,
    /// `d^{-n}`
    scale: f64,
    tail: f64,
    /// `d^{-n} (f^n)'(z) / f^n(z)`; `None` when not tracked.
    log_derivative: Option<Complex64>,
    singular: bool,
}

fn tail_bound(d: f64, mass: f64, scale: f64, radius: f64) -> f64 {
    if mass == 0.0 {
        0.0
    } else {
        // |log|f(w)| - d log|w|| <= 2A/|w|^2 beyond the escape radius, and the
        // orbit only grows, so the geometric tail sums to this.
        scale * 2.0 * mass / (radius * radius * (d - 1.0))
    }
}

fn escape_orbit(p: &Polynomial, z: Complex64, track_derivative: bool) -> Option<Escape> {
    let d = p.degree() as f64;
    let radius = p.escape_radius();
    let mass = p.coefficient_mass();
    let mut w = z;
    let mut scale = 1.0;
    let mut q: Option<Complex64> = None;
    let mut singular = false;
    for n in 0..=ITERATION_BUDGET {
        let r = w.norm();
        let escaped_here = r > radius;
        if escaped_here {
            let tail = tail_bound(d, mass, scale, r);
            if tail <= TAIL_TOLERANCE || r > 1e150 {
                return Some(Escape {
                    iterations: n,
                    point: w,
                    scale,
                    tail,
                    log_derivative: track_derivative.then(|| q.unwrap_or_else(|| w.inv())),
                    singular,
                });
            }
        }
        if n == ITERATION_BUDGET {
            break;
        }
        let next = p.eval_raw(w);
        if !(next.re.is_finite() && next.im.is_finite()) {
            // only reachable far outside the escape disk
            return Some(Escape {
                iterations: n,
                point: w,
                scale,
                tail: tail_bound(d, mass, scale, r),
                log_derivative: track_derivative.then(|| q.unwrap_or_else(|| w.inv())),
                singular,
            });
        }
        if track_derivative {
            let fp = p.derivative_raw(w);
            if fp.norm() == 0.0 {
                singular = true;
            }
            q = Some(match q {
                None => fp / (next * d),
                Some(q) => q * fp * w / (next * d),
            });
        }
        w = next;
        scale /= d;
    }
    None
}

/// `G_f(z) = lim d^{-n} log^+ |f^n(z)|`, truncated once the tail bound drops
/// below [`TAIL_TOLERANCE`].
pub fn green_value(p: &Polynomial, z: Complex64) -> GreenValue {
    match escape_orbit(p, z, false) {
        Some(e) => GreenValue {
            value: (e.scale * e.point.norm().ln()).max(0.0),
            certified_error: e.tail,
            iterations: e.iterations,
            escaped: true,
        },
        None => GreenValue {
            value: 0.0,
            certified_error: 0.0,
            iterations: ITERATION_BUDGET,
            escaped: false,
        },
    }
}

/// `2 ∂G/∂z = G_x - i G_y`, the coefficient of the form `ω_f`.
pub fn green_gradient(p: &Polynomial, z: Complex64) -> Result<Complex64> {
    let e = escape_orbit(p, z, true).ok_or(Error::NotEscaping)?;
    let q = e.log_derivative.expect("derivative tracked");
    if e.singular || q.norm() == 0.0 || !(q.re.is_finite() && q.im.is_finite()) {
        return Err(Error::SingularPoint);
    }
    Ok(q)
}

/// Where an escaping critical point lands in the fundamental annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAssignment {
    pub critical_point: Complex64,
    pub green: f64,
    /// Power `k` with `d^k G(c)` in `(M, dM]`.
    pub power: u32,
    pub level_index: usize,
}

/// `M(f)` and the levels `ℓ_0 = M < ℓ_1 < ... < ℓ_N = dM` met by critical orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLevels {
    degree: usize,
    levels: Vec<f64>,
    assignments: Vec<LevelAssignment>,
}

impl CriticalLevels {
    /// Level data not tied to a computed polynomial: `[m, interior..., d m]`.
    pub fn new(degree: usize, m: f64, interior: &[f64]) -> Result<Self> {
        if degree < 2 {
            return Err(Error::DegreeTooSmall(degree));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "M must be positive, got {m}"
            )));
        }
        let mut levels = Vec::with_capacity(interior.len() + 2);
        levels.push(m);
        levels.extend_from_slice(interior);
        levels.push(degree as f64 * m);
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "interior levels must increase strictly inside (M, dM)".into(),
            ));
        }
        Ok(CriticalLevels {
            degree,
            levels,
            assignments: Vec::new(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `M(f) = ℓ_0`.
    pub fn max_critical(&self) -> f64 {
        self.levels[0]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of subannuli `N`.
    pub fn annulus_count(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn assignments(&self) -> &[LevelAssignment] {
        &self.assignments
    }

    /// Rescales `t > 0` by a power of `d` into `[ℓ_0, ℓ_N)`; returns the
    /// rescaled value and the exponent `k` with `value = d^k t`.
    pub fn normalize(&self, t: f64) -> (f64, i32) {
        let d = self.degree as f64;
        let (lo, hi) = (self.levels[0], *self.levels.last().unwrap());
        if !(t > 0.0 && t.is_finite()) {
            return (t, 0);
        }
        let mut v = t;
        let mut k = 0;
        while v < lo {
            v *= d;
            k += 1;
        }
        while v >= hi {
            v /= d;
            k -= 1;
        }
        (v, k)
    }

    /// Index `j` of the subannulus `(ℓ_{j-1}, ℓ_j)` containing a normalized
    /// level, with `1 <= j <= N`.
    pub fn interval_of(&self, normalized: f64) -> usize {
        let idx = self.levels.partition_point(|&l| l <= normalized);
        idx.clamp(1, self.annulus_count())
    }

    /// Distance (in normalized units) from `t` to the nearest break
    /// `d^k ℓ_j`.
    pub fn distance_to_break(&self, t: f64) -> f64 {
        let (v, _) = self.normalize(t);
        self.levels
            .iter()
            .map(|&l| (v - l).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn same_base(&self, other: &CriticalLevels) -> bool {
        self.degree == other.degree
            && self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

/// `M(f)`, or 0 when no critical point escapes.
pub fn max_critical_green(p: &Polynomial) -> Result<f64> {
    Ok(p.critical_points()?
        .into_iter()
        .map(|c| green_value(p, c).value)
        .fold(0.0, f64::max))
}

/// Computes `M(f)` and the normalized critical levels in `(M, dM]`.
pub fn escape_level_data(p: &Polynomial) -> Result<CriticalLevels> {
    let d = p.degree() as f64;
    let critical: Vec<(Complex64, f64)> = p
        .critical_points()?
        .into_iter()
        .map(|c| (c, green_value(p, c).value))
        .collect();
    let m = critical.iter().map(|c| c.1).fold(0.0, f64::max);
    if m <= 0.0 {
        return Err(Error::NoEscapingCritical);
    }
    let top = d * m;
    let merge = LEVEL_MERGE_TOLERANCE * m;

    let mut normalized: Vec<(Complex64, f64, u32, f64)> = Vec::new();
    for &(c, g) in &critical {
        if g <= 0.0 {
            continue;
        }
        let mut v = g;
        let mut k = 0u32;
        while v <= m + merge {
            v *= d;
            k += 1;
        }
        if (v - top).abs() <= merge {
            v = top;
        }
        normalized.push((c, g, k, v));
    }

    let mut interior: Vec<f64> = normalized
        .iter()
        .map(|n| n.3)
        .filter(|&v| v < top)
        .collect();
    interior.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for v in interior {
        match distinct.last() {
            Some(&last) if v - last <= merge => {}
            _ => distinct.push(v),
        }
    }

    let mut levels = Vec::with_capacity(distinct.len() + 2);
    levels.push(m);
    levels.extend(distinct);
    levels.push(top);

    let assignments = normalized
        .into_iter()
        .map(|(c, g, k, v)| {
            let level_index = levels
                .iter()
                .enumerate()
                .skip(1)
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(j, _)| j)
                .unwrap();
            LevelAssignment {
                critical_point: c,
                green: g,
                power: k,
                level_index,
            }
        })
        .collect();

    Ok(CriticalLevels {
        degree: p.degree(),
        levels,
        assignments,
    })
}

/// Principal-branch Böttcher product, valid for `|w| >= escape_radius`.
fn bottcher_far(p: &Polynomial, w: Complex64) -> Complex64 {
    let d = p.degree() as f64;
    let mass = p.coefficient_mass();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 1.0 / d;
    let mut u = w;
    loop {
        let r = u.norm();
        if mass == 0.0 || scale * 2.0 * mass / (r * r) < 1e-18 || r > 1e150 {
            break;
        }
        sum += p.ratio_to_leading(u).ln() * scale;
        let next = p.eval_raw(u);
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        u = next;
        scale /= d;
    }
    w * sum.exp()
}

fn iterate_raw(p: &Polynomial, z: Complex64, n: u32) -> Complex64 {
    (0..n).fold(z, |w, _| p.eval_raw(w))
}

fn wrap_angle(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

/// Böttcher coordinate `φ_f` on `{G > M(f)}`, tangent to the identity at
/// infinity.
///
/// Near the fundamental level the `d^n`-th root branch is fixed by walking
/// up the gradient of `G` to the escape disk and tracking the argument of
/// `φ_f ∘ f^n` continuously along that path.
pub fn bottcher(p: &Polynomial, z: Complex64) -> Result<Complex64> {
    let m = max_critical_green(p)?;
    let g = green_value(p, z);
    if !g.escaped || g.value <= m + CURVE_TOLERANCE * m.max(1.0) {
        return Err(Error::BelowFundamentalLevel {
            green: g.value,
            max_critical: m,
        });
    }
    let radius = p.escape_radius();
    if z.norm() >= radius {
        return Ok(bottcher_far(p, z));
    }

    let d = p.degree() as f64;
    // beyond this Green level every point lies outside the escape disk
    let threshold = radius.ln() + 0.25;
    let mut n0 = 0u32;
    let mut lifted_level = g.value;
    while lifted_level <= threshold {
        lifted_level *= d;
        n0 += 1;
    }
    let power = d.powi(n0 as i32);
    let lift = |w: Complex64| bottcher_far(p, iterate_raw(p, w, n0)).arg();

    let mut w = z;
    let mut g_here = g.value;
    let mut prev_arg = lift(z);
    let mut turned = 0.0;
    let mut rise = 0.1_f64;
    let mut steps = 0usize;
    while w.norm() < radius {
        steps += 1;
        if steps > 100_000 {
            return Err(Error::InvalidArgument(
                "Böttcher continuation path did not reach the escape disk".into(),
            ));
        }
        let omega = green_gradient(p, w)?;
        loop {
            let mid = w + (rise / 2.0) / omega;
            let candidate = w + rise / green_gradient(p, mid)?;
            let g_new = green_value(p, candidate).value;
            let arg = lift(candidate);
            let delta = wrap_angle(arg - prev_arg);
            if g_new > g_here && delta.abs() < 0.5 {
                turned += delta;
                prev_arg = arg;
                w = candidate;
                g_here = g_new;
                rise = (rise * 1.5).min(0.1);
                break;
            }
            rise /= 2.0;
            if rise < 1e-14 {
                return Err(Error::SingularPoint);
            }
        }
    }
    let anchor = bottcher_far(p, w).arg() * power;
    let angle = (anchor - turned) / power;
    Ok(Complex64::from_polar(g.value.exp(), angle))
}

/// Polyline approximation of one component of `{G_f = L}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: f64,
    pub points: Vec<Complex64>,
    pub closed: bool,
}

impl LevelCurve {
    /// Consecutive vertex pairs, including the closing segment of a closed curve.
    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 1 {
            n
        } else {
            n.saturating_sub(1)
        };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Fails with `SingularLevel` when `level` is the Green value of a critical
/// point of `G` (an escaping critical point or one of its preimages).
fn check_regular_level(p: &Polynomial, level: f64) -> Result<()> {
    let d = p.degree() as f64;
    for c in p.critical_points()? {
        let g = green_value(p, c).value;
        if g <= 0.0 {
            continue;
        }
        let mut t = level;
        while t < g * (1.0 - LEVEL_MERGE_TOLERANCE) {
            t *= d;
        }
        if (t - g).abs() <= LEVEL_MERGE_TOLERANCE * g {
            return Err(Error::SingularLevel(level));
        }
    }
    Ok(())
}

fn project_to_level(p: &Polynomial, mut z: Complex64, level: f64) -> Result<Complex64> {
    let tol = CURVE_TOLERANCE * level.max(1.0);
    for _ in 0..50 {
        let g = green_value(p, z);
        if !g.escaped {
            return Err(Error::LostCurve(format!(
                "projection fell into K(f) at {z}"
            )));
        }
        let residual = g.value - level;
        if residual.abs() <= tol {
            return Ok(z);
        }
        let omega = green_gradient(p, z)?;
        let step = residual / omega;
        // cap the step to a fraction of the local scale
        let cap = 0.5 * (level / omega.norm()).max(1e-12);
        z -= if step.norm() > cap {
            step * (cap / step.norm())
        } else {
            step
        };
    }
    Err(Error::LostCurve(format!(
        "Newton projection did not converge near {z}"
    )))
}

/// Zooming grid search for a point with `G_f < level`.
fn lowest_point(p: &Polynomial, level: f64) -> Result<Complex64> {
    let mut center = Complex64::new(0.0, 0.0);
    let mut half = p.escape_radius();
    for _ in 0..12 {
        let mut best = (f64::INFINITY, center);
        for i in 0..=32 {
            for j in 0..=32 {
                let z = center
                    + Complex64::new(
                        half * (i as f64 / 16.0 - 1.0),
                        half * (j as f64 / 16.0 - 1.0),
                    );
                let g = green_value(p, z).value;
                if g < best.0 {
                    best = (g, z);
                }
            }
        }
        if best.0 < level {
            return Ok(best.1);
        }
        center = best.1;
        half /= 8.0;
    }
    Err(Error::InvalidArgument(format!(
        "no anchor found below level {level}"
    )))
}

/// A point near `{G_f = level}` on the ray from an anchor with `G_f < level`
/// (the origin, a critical point, or a grid minimum) in direction `angle`.
pub fn level_seed(p: &Polynomial, level: f64, angle: f64) -> Result<Complex64> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "level must be positive, got {level}"
        )));
    }
    let below = |z: Complex64| green_value(p, z).value < level;
    let mut candidates = vec![Complex64::new(0.0, 0.0)];
    candidates.extend(p.critical_points()?);
    let anchor = match candidates.into_iter().find(|&z| below(z)) {
        Some(z) => z,
        None => lowest_point(p, level)?,
    };
    // G(z) >= log|z| - log(4/3)/(d-1) outside the escape disk
    let d = p.degree() as f64;
    let radius = (level + (4.0f64 / 3.0).ln() / (d - 1.0))
        .exp()
        .max(p.escape_radius())
        * 2.0
        + anchor.norm();
    let direction = Complex64::from_polar(1.0, angle);
    let (mut lo, mut hi) = (0.0, radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(anchor + direction * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(anchor + direction * hi)
}

fn unit_tangent(omega: Complex64) -> Complex64 {
    // rotate the gradient conj(ω) by +90°, so the curve runs counterclockwise
    Complex64::i() * omega.conj() / omega.norm()
}

/// Traces the closed component of `{G_f = level}` through the projection of
/// `seed`, counterclockwise.
pub fn trace_level_curve(p: &Polynomial, level: f64, seed: Complex64) -> Result<LevelCurve> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "level must be positive, got {level}"
        )));
    }
    check_regular_level(p, level)?;
    let start = project_to_level(p, seed, level)?;
    let nominal_turn = 2.0 * PI / CURVE_STEPS_PER_TURN;

    let mut points = vec![start];
    let mut w = start;
    let mut omega = green_gradient(p, w)?;
    let mut h = nominal_turn / omega.norm();
    let mut travelled = 0.0;

    loop {
        if points.len() >= MAX_CURVE_VERTICES {
            return Err(Error::LostCurve(
                "vertex budget exhausted before closing".into(),
            ));
        }
        let tangent = unit_tangent(omega);
        let to_start = start - w;
        if points.len() > 3
            && to_start.norm() <= 1.5 * h
            && (to_start * tangent.conj()).re > 0.0
            && travelled > 4.0 * to_start.norm()
        {
            return Ok(LevelCurve {
                level,
                points,
                closed: true,
            });
        }

        let nominal = nominal_turn / omega.norm();
        h = h.min(nominal);
        let (next, next_omega) = loop {
            let mid = w + tangent * (h / 2.0);
            let mid_tangent = unit_tangent(green_gradient(p, mid)?);
            let predicted = w + mid_tangent * h;
            let drift = (green_value(p, predicted).value - level).abs();
            if drift <= 1e-3 * level {
                let corrected = project_to_level(p, predicted, level)?;
                let next_omega = green_gradient(p, corrected)?;
                let turn = (unit_tangent(next_omega) * tangent.conj()).arg().abs();
                if turn <= 0.05 && (corrected - w).norm() <= 2.0 * h {
                    break (corrected, next_omega);
                }
            }
            h /= 2.0;
            if h < 1e-15 * w.norm().max(1.0) {
                return Err(Error::LostCurve(format!("step size collapsed near {w}")));
            }
        };
        travelled += (next - w).norm();
        points.push(next);
        w = next;
        omega = next_omega;
        h *= 1.25;
    }
}

/// `∫ |ω_f|` along the polyline, midpoint rule on each segment.
pub fn omega_arc_integral(p: &Polynomial, curve: &LevelCurve) -> Result<f64> {
    curve.segments().try_fold(0.0, |acc, (a, b)| {
        let mid = (a + b) / 2.0;
        Ok(acc + green_gradient(p, mid)?.norm() * (b - a).norm())
    })
}
