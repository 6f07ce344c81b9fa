//! Acceptance gate: one line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use basin_core::conjugacy::{beltrami_at, bilipschitz_check, UNIQUENESS_TOLERANCE};
use basin_core::potential::{
    escape_level_data, green_gradient, green_value, level_seed, omega_arc_integral,
    trace_level_curve, CriticalLevels,
};
use basin_core::teich::teich_distance;
use basin_core::tree::{build_tree, match_trees, tree_dynamics_check};
use basin_core::{Complex64, ConjugacyClass, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn green_functional_equation() -> Verdict {
    let mut worst: f64 = 0.0;
    for (i, p) in [cantor(), rabbit_like(), cubic()].iter().enumerate() {
        let d = p.degree() as f64;
        for z in escaping_points(p, 100 + i as u64, 10_000, 0.0) {
            let g = green_value(p, z).value;
            let gf = green_value(p, p.evaluate(z).unwrap()).value;
            worst = worst.max((gf - d * g).abs() / g.max(1.0));
        }
    }
    check(
        worst <= 1e-9,
        format!("max |G(f z) - d G(z)| / max(1, G) = {worst:.3e}"),
    )
}

fn gradient_correctness() -> Verdict {
    let mut worst: f64 = 0.0;
    for (i, p) in [cantor(), rabbit_like(), cubic()].iter().enumerate() {
        let mut checked = 0;
        for z in escaping_points(p, 200 + i as u64, 4_000, 1e-2) {
            if checked == 1_000 {
                break;
            }
            let omega = green_gradient(p, z).unwrap();
            // regular: the gradient is not degenerate at this scale
            if omega.norm() < 1e-2 {
                continue;
            }
            let fd = fd_gradient(p, z, 1e-5);
            worst = worst.max((omega - fd).norm() / omega.norm());
            checked += 1;
        }
        if checked < 1_000 {
            return Err(format!("only {checked} regular points sampled"));
        }
    }
    check(
        worst <= 1e-4,
        format!("max relative error vs central differences {worst:.3e}"),
    )
}

fn angular_mass() -> Verdict {
    let mut worst: f64 = 0.0;
    for p in [cantor(), cubic()] {
        let m = escape_level_data(&p).unwrap().max_critical();
        for factor in [1.2, 1.7, 3.0] {
            let level = factor * m;
            let seed = level_seed(&p, level, 0.0).map_err(|e| e.to_string())?;
            let curve = trace_level_curve(&p, level, seed).map_err(|e| e.to_string())?;
            if !curve.closed {
                return Err(format!("curve at {factor}M did not close"));
            }
            let mass = omega_arc_integral(&p, &curve).unwrap();
            worst = worst.max((mass - TAU).abs());
        }
    }
    check(worst <= 1e-3, format!("max |mass - 2π| = {worst:.3e}"))
}

fn levels_oracle() -> (Verdict, Duration) {
    let m_oracle = cantor_fundamental_level();
    let (g_plus, g_minus) = cubic_critical_greens();
    let cubic_oracle = oracle_levels(3, &[g_plus, g_minus]);

    let start = Instant::now();
    let quad = escape_level_data(&cantor());
    let cub = escape_level_data(&cubic());
    let elapsed = start.elapsed();

    let verdict = (|| {
        let quad = quad.map_err(|e| e.to_string())?;
        let cub = cub.map_err(|e| e.to_string())?;
        let l = quad.levels();
        let m_err = (l[0] - m_oracle).abs();
        if l.len() != 2 || m_err > 1e-10 || l[1] != 2.0 * l[0] {
            return Err(format!("z^2+4 levels {l:?}, oracle M {m_oracle}"));
        }
        if cub.annulus_count() != 2 || cubic_oracle.len() != 3 {
            return Err(format!(
                "cubic levels {:?}, oracle {cubic_oracle:?}",
                cub.levels()
            ));
        }
        let c_err = cub
            .levels()
            .iter()
            .zip(&cubic_oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(
            c_err <= 1e-10,
            format!("M error {m_err:.2e}, cubic N = 2, max level error {c_err:.2e}"),
        )
    })();
    (verdict, elapsed)
}

/// A random class drawn directly as monotone stretch samples and turns.
fn raw_class(levels: &CriticalLevels, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let l = levels.levels();
    let d = levels.degree() as f64;
    let n = l.len() - 1;
    let s0 = rng.gen_range(0.1..10.0);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter_mut()
        .for_each(|w| *w *= (d - 1.0) * s0 / total);
    let mut stretch = vec![s0];
    for w in &weights {
        stretch.push(stretch.last().unwrap() + w);
    }
    stretch[n] = d * s0;
    let t0 = rng.gen_range(-5.0..5.0);
    let mut turn = vec![t0];
    turn.extend((1..n).map(|_| rng.gen_range(-20.0..20.0)));
    turn.push(d * t0);
    (stretch, turn)
}

fn minimal_dilatation_formula() -> Verdict {
    let levels = CriticalLevels::new(3, 1.0, &[1.9]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut flag_errors = 0;
    for _ in 0..1_000 {
        let (stretch, turn) = raw_class(&levels, &mut rng);
        let class = ConjugacyClass::new(levels.clone(), stretch.clone(), turn.clone()).unwrap();
        let report = class.minimal_dilatation(UNIQUENESS_TOLERANCE);
        let per: Vec<f64> = scalar_tau(levels.levels(), &stretch, &turn)
            .iter()
            .map(|&(s, t)| scalar_dilatation(s, t))
            .collect();
        let max = per.iter().copied().fold(0.0, f64::max);
        let min = per.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max((report.minimal - max).abs());
        if report.unique != (max - min <= UNIQUENESS_TOLERANCE) {
            flag_errors += 1;
        }
    }
    // equalized: τ and its conjugate share the dilatation; a nudge breaks it
    let mut equalized_ok = true;
    for _ in 0..100 {
        let tau = random_tau(&mut rng, 1)[0];
        let equal = ConjugacyClass::from_tau(levels.clone(), &[tau, tau.conj()]).unwrap();
        let nudged = ConjugacyClass::from_tau(levels.clone(), &[tau, tau.conj() * 1.001]).unwrap();
        equalized_ok &= equal.minimal_dilatation(UNIQUENESS_TOLERANCE).unique;
        equalized_ok &= !nudged.minimal_dilatation(UNIQUENESS_TOLERANCE).unique;
    }
    check(
        worst <= 1e-12 && flag_errors == 0 && equalized_ok,
        format!("max error {worst:.2e}, flag mismatches {flag_errors}, equalized flip ok {equalized_ok}"),
    )
}

fn beltrami_field() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let square = Polynomial::real(2, &[0.0]).unwrap();
    let base = CriticalLevels::new(2, 1.0, &[]).unwrap();
    let mut worst_closed: f64 = 0.0;
    let mut checked = 0;
    while checked < 1_000 {
        let k: f64 = rng.gen_range(1.0..8.0);
        let class = ConjugacyClass::from_tau(base.clone(), &[Complex64::new(k, 0.0)]).unwrap();
        let model = class.extremal_model();
        let z = Complex64::from_polar(rng.gen_range(1.05f64..40.0), rng.gen_range(-PI..PI));
        match beltrami_at(&square, &model, z) {
            Ok(mu) => {
                let closed = (k - 1.0) / (k + 1.0) * Complex64::from_polar(1.0, 2.0 * z.arg());
                worst_closed = worst_closed.max((mu - closed).norm());
                checked += 1;
            }
            Err(e) => return Err(format!("z^2 at {z}: {e}")),
        }
    }

    let p = cantor();
    let levels = escape_level_data(&p).unwrap();
    let model = ConjugacyClass::from_tau(levels.clone(), &[Complex64::new(1.0, 1.0)])
        .unwrap()
        .extremal_model();
    let target = 1.0 / 5f64.sqrt();
    let mut worst_modulus: f64 = 0.0;
    let mut powers = std::collections::BTreeSet::new();
    for z in escaping_points(&p, 66, 1_000, 0.0) {
        let g = green_value(&p, z).value;
        if levels.distance_to_break(g) < 1e-8 * levels.max_critical() {
            continue;
        }
        let mu = beltrami_at(&p, &model, z).map_err(|e| e.to_string())?;
        worst_modulus = worst_modulus.max((mu.norm() - target).abs());
        powers.insert(levels.normalize(g).1);
    }
    check(
        worst_closed <= 1e-8 && worst_modulus <= 1e-6 && powers.len() >= 3,
        format!(
            "z^2 closed-form error {worst_closed:.2e}; z^2+4 | |μ| - 1/√5 | ≤ {worst_modulus:.2e} over {} annulus generations",
            powers.len()
        ),
    )
}

fn isometry_bridge() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cubic_levels = escape_level_data(&cubic()).unwrap();
    let synthetic = CriticalLevels::new(4, 0.5, &[0.7, 1.1, 1.5]).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..1_000 {
        let levels = if i % 2 == 0 {
            &cubic_levels
        } else {
            &synthetic
        };
        let class = random_class(levels, &mut rng);
        let identity = ConjugacyClass::identity(levels.clone());
        let dist = teich_distance(&identity, &class).unwrap();
        let k = class.minimal_dilatation(UNIQUENESS_TOLERANCE).k;
        worst = worst.max((dist - k.ln()).abs());
    }
    check(
        worst <= 1e-10,
        format!("max |d(id, c) - log K| = {worst:.2e}"),
    )
}

fn tree_combinatorics() -> Verdict {
    let tree = build_tree(&cantor(), 5).map_err(|e| e.to_string())?;
    let sizes = tree.layer_sizes();
    let expected: Vec<usize> = (0..=5)
        .map(|k| if k == 0 { 1 } else { 1 << (k - 1) })
        .collect();
    if sizes != expected {
        return Err(format!("layer sizes {sizes:?}, expected {expected:?}"));
    }
    let report = tree_dynamics_check(&tree);
    if !report.passed() || report.max_relative_deviation > 1e-6 {
        return Err(format!("dynamics failures {:?}", report.failures));
    }
    // identity is the only rotation for d = 2; d = 3 admits a = -1
    match_trees(&tree, &tree, |z| z, 1e-12)?;
    let f = cubic();
    let a = Complex64::new(-1.0, 0.0);
    let g = f.rotate_conjugate(a).unwrap();
    let tf = build_tree(&f, 5).map_err(|e| e.to_string())?;
    let tg = build_tree(&g, 5).map_err(|e| e.to_string())?;
    match_trees(&tf, &tg, |z| z / a, 1e-9)?;
    Ok(format!(
        "layers {sizes:?}, max dynamics deviation {:.1e}, cubic rotation pair isometric with layers {:?}",
        report.max_relative_deviation,
        tf.layer_sizes()
    ))
}

fn bilipschitz_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = cubic();
    let levels = escape_level_data(&p).unwrap();
    let mut slope_violations = 0;
    let mut pair_violations = 0;
    for i in 0..1_000 {
        let class = random_class(&levels, &mut rng);
        let report = bilipschitz_check(&p, &class.extremal_model(), 10, i);
        slope_violations += report.slope_violations.len();
        pair_violations += report.pair_violations;
    }
    check(
        slope_violations == 0 && pair_violations == 0,
        format!("{slope_violations} slope and {pair_violations} pair violations"),
    )
}

fn main() -> ExitCode {
    type Criterion = (usize, &'static str, f64, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        (
            1,
            "green functional equation",
            5.0,
            green_functional_equation,
        ),
        (
            2,
            "gradient vs finite differences",
            5.0,
            gradient_correctness,
        ),
        (3, "total angular mass", 10.0, angular_mass),
        (
            5,
            "minimal dilatation formula",
            1.0,
            minimal_dilatation_formula,
        ),
        (6, "beltrami field", 5.0, beltrami_field),
        (7, "isometry bridge", 1.0, isometry_bridge),
        (8, "tree combinatorics", 60.0, tree_combinatorics),
        (9, "bi-lipschitz bound", 1.0, bilipschitz_bound),
    ];
    let mut results = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        results.push((id, name, budget, verdict, start.elapsed()));
    }
    let (verdict, elapsed) = levels_oracle();
    results.push((4, "levels oracle", 1.0, verdict, elapsed));
    results.sort_by_key(|r| r.0);

    let mut failures = 0;
    for (id, name, budget, verdict, elapsed) in results {
        let secs = elapsed.as_secs_f64();
        let (ok, detail) = match verdict {
            Ok(d) if secs < budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "acceptance {id} {name:<32} {} ({secs:.3} s of {budget} s) {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
