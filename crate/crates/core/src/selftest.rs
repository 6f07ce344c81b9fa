//! Reduced invariant suites behind the `selftest` command.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conjugacy::{bilipschitz_check, ConjugacyClass, UNIQUENESS_TOLERANCE};
use crate::error::Result;
use crate::poly::Polynomial;
use crate::potential::{
    bottcher, escape_level_data, green_gradient, green_value, level_seed, omega_arc_integral,
    trace_level_curve, CriticalLevels,
};
use crate::teich::teich_distance;
use crate::tree::{build_tree, tree_dynamics_check};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn sample_polynomials() -> Vec<Polynomial> {
    vec![
        Polynomial::real(2, &[4.0]).unwrap(),
        Polynomial::new(2, vec![Complex64::new(-2.0, 0.5)]).unwrap(),
        Polynomial::real(3, &[1.0, -6.0]).unwrap(),
    ]
}

fn escaping_points(p: &Polynomial, rng: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
    let r = p.escape_radius();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let g = green_value(p, z);
        if g.escaped && g.value > 1e-3 {
            out.push(z);
        }
    }
    out
}

fn outcome(name: &str, result: Result<(bool, String)>) -> SuiteOutcome {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error {}: {e}", e.code())));
    SuiteOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn functional_equation(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for p in sample_polynomials() {
        let d = p.degree() as f64;
        for z in escaping_points(&p, &mut rng, 300) {
            let g = green_value(&p, z).value;
            let gf = green_value(&p, p.evaluate(z)?).value;
            worst = worst.max((gf - d * g).abs() / g.max(1.0));
        }
    }
    Ok((worst <= 1e-9, format!("max scaled residual {worst:.3e}")))
}

fn gradient(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for p in sample_polynomials() {
        for z in escaping_points(&p, &mut rng, 100) {
            let omega = green_gradient(&p, z)?;
            let gx = (green_value(&p, z + h).value - green_value(&p, z - h).value) / (2.0 * h);
            let dz = Complex64::new(0.0, h);
            let gy = (green_value(&p, z + dz).value - green_value(&p, z - dz).value) / (2.0 * h);
            let fd = Complex64::new(gx, -gy);
            worst = worst.max((omega - fd).norm() / omega.norm());
        }
    }
    Ok((worst <= 1e-4, format!("max relative error {worst:.3e}")))
}

fn bottcher_equation(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut worst: f64 = 0.0;
    for p in sample_polynomials() {
        let m = escape_level_data(&p)?.max_critical();
        let d = p.degree() as i32;
        let mut checked = 0;
        while checked < 50 {
            let z = escaping_points(&p, &mut rng, 1)[0];
            if green_value(&p, z).value <= 1.1 * m {
                continue;
            }
            let lhs = bottcher(&p, p.evaluate(z)?)?;
            let rhs = bottcher(&p, z)?.powi(d);
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
            checked += 1;
        }
    }
    Ok((worst <= 1e-8, format!("max relative residual {worst:.3e}")))
}

fn angular_mass(_seed: u64) -> Result<(bool, String)> {
    let p = Polynomial::real(2, &[4.0]).unwrap();
    let m = escape_level_data(&p)?.max_critical();
    let level = 1.5 * m;
    let curve = trace_level_curve(&p, level, level_seed(&p, level, 0.0)?)?;
    let mass = omega_arc_integral(&p, &curve)?;
    let err = (mass - std::f64::consts::TAU).abs();
    Ok((err <= 1e-3, format!("|mass - 2π| = {err:.3e}")))
}

fn random_class(levels: &CriticalLevels, rng: &mut ChaCha8Rng) -> Result<ConjugacyClass> {
    let tau: Vec<Complex64> = (0..levels.annulus_count())
        .map(|_| Complex64::new(rng.gen_range(0.2..5.0), rng.gen_range(-3.0..3.0)))
        .collect();
    ConjugacyClass::from_tau(levels.clone(), &tau)
}

fn dilatation(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let levels = CriticalLevels::new(2, 1.0, &[1.3, 1.7])?;
    let mut bad = 0;
    for _ in 0..200 {
        let class = random_class(&levels, &mut rng)?;
        let report = class.minimal_dilatation(UNIQUENESS_TOLERANCE);
        let expected = class
            .tau_parameters()
            .entries()
            .iter()
            .map(|t| ((t - 1.0) / (t + 1.0)).norm())
            .fold(0.0, f64::max);
        if (report.minimal - expected).abs() > 1e-12 || report.k < 1.0 {
            bad += 1;
        }
    }
    let identity = ConjugacyClass::identity(levels).minimal_dilatation(UNIQUENESS_TOLERANCE);
    let ok = bad == 0 && identity.k == 1.0 && identity.unique;
    Ok((ok, format!("{bad} mismatches in 200 classes")))
}

fn teichmuller_metric(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
    let levels = CriticalLevels::new(3, 1.0, &[2.0])?;
    let mut bad = 0;
    for _ in 0..200 {
        let a = random_class(&levels, &mut rng)?;
        let b = random_class(&levels, &mut rng)?;
        let c = random_class(&levels, &mut rng)?;
        let ab = teich_distance(&a, &b)?;
        let ba = teich_distance(&b, &a)?;
        let bc = teich_distance(&b, &c)?;
        let ac = teich_distance(&a, &c)?;
        let aa = teich_distance(&a, &a)?;
        let scale = 1e-12 * (1.0 + ab + bc);
        if (ab - ba).abs() > scale || ac > ab + bc + scale || aa.abs() > 1e-12 || ab < 0.0 {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} metric violations in 200 triples")))
}

fn tree_dynamics(_seed: u64) -> Result<(bool, String)> {
    let p = Polynomial::real(2, &[4.0]).unwrap();
    let tree = build_tree(&p, 3)?;
    let report = tree_dynamics_check(&tree);
    let sizes = tree.layer_sizes();
    let ok = report.passed() && sizes == [1, 1, 2, 4];
    Ok((
        ok,
        format!(
            "layers {sizes:?}, max deviation {:.3e}",
            report.max_relative_deviation
        ),
    ))
}

fn bilipschitz(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(5));
    let p = Polynomial::real(3, &[1.0, -6.0]).unwrap();
    let levels = escape_level_data(&p)?;
    let mut failed = 0;
    for i in 0..20 {
        let class = random_class(&levels, &mut rng)?;
        if !bilipschitz_check(&p, &class.extremal_model(), 50, seed.wrapping_add(i)).passed() {
            failed += 1;
        }
    }
    Ok((failed == 0, format!("{failed} of 20 classes failed")))
}

/// Runs every suite with the given seed, in a fixed order.
pub fn run_all(seed: u64) -> Vec<SuiteOutcome> {
    type Suite = fn(u64) -> Result<(bool, String)>;
    let suites: [(&str, Suite); 8] = [
        ("green-functional-equation", functional_equation),
        ("green-gradient", gradient),
        ("bottcher-equation", bottcher_equation),
        ("angular-mass", angular_mass),
        ("minimal-dilatation", dilatation),
        ("teichmuller-metric", teichmuller_metric),
        ("tree-dynamics", tree_dynamics),
        ("bilipschitz", bilipschitz),
    ];
    suites
        .iter()
        .map(|(name, suite)| outcome(name, suite(seed)))
        .collect()
}

pub fn format_table(outcomes: &[SuiteOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {}\n", o.name, o.detail));
    }
    out
}
