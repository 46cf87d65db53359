//! Seeded property checks shared by the proptest suite and the acceptance
//! harness. Each returns the measured defect so callers can apply their
//! own tolerance.

#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use nblab::kernels::{audit_ellipticity, lattice, stable_normalized, AuditOptions, LevyKernel};
use nblab::montecarlo::{exit_time_profile, PathConfig};
use nblab::solver::{solve, Domain, Field, Grid, GridFunction, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A stable kernel with random order or a lattice kernel, chosen by seed.
pub fn random_kernel(r: &mut ChaCha8Rng) -> LevyKernel {
    let s = r.random_range(0.2..0.8);
    if r.random_bool(0.5) {
        stable_normalized(s).unwrap()
    } else {
        lattice(1, s, r.random_range(0.5..2.0), -30, 30).unwrap()
    }
}

fn unit_problem(k: &LevyKernel, rhs: Field, exterior: Field, cells: usize) -> GridFunction {
    let g = Grid::interval(-0.25, 1.25, cells).unwrap();
    let p = Problem::new(k.clone(), Domain::Interval { a: 0.0, b: 1.0 }, rhs, exterior, g).unwrap();
    solve(&p).unwrap().u
}

fn random_affine(r: &mut ChaCha8Rng, nonneg: bool) -> Field {
    let slope: f64 = r.random_range(-1.0..1.0);
    let c0: f64 = r.random_range(-1.0..1.0);
    // Nonnegative on [-0.25, 1.25] when requested.
    let c0 = if nonneg { c0.abs() + 1.25 * slope.abs() } else { c0 };
    Field::Affine { c0, c: [slope, 0.0] }
}

/// Comparison principle: `f1 >= f2` and `g1 >= g2` give `u1 >= u2`.
/// Returns the largest violation `max(u2 - u1, 0)`.
pub fn comparison_violation(seed: u64) -> f64 {
    let mut r = rng(seed);
    let k = random_kernel(&mut r);
    let f2 = random_affine(&mut r, false);
    let bump = random_affine(&mut r, true);
    let g2 = Field::Const { value: r.random_range(-1.0..1.0) };
    let gap = r.random_range(0.0..1.0);
    let f1 = Field::Sum { parts: vec![f2.clone(), bump] };
    let g1 = match g2 {
        Field::Const { value } => Field::Const { value: value + gap },
        _ => unreachable!(),
    };
    let u1 = unit_problem(&k, f1, g1, 60);
    let u2 = unit_problem(&k, f2, g2, 60);
    u1.values.iter().zip(&u2.values).map(|(a, b)| (b - a).max(0.0)).fold(0.0, f64::max)
}

/// Superposition: the solution for `a (f1, g1) + b (f2, g2)` against the
/// combination of the two solutions, relative to the largest value.
pub fn superposition_defect(seed: u64) -> f64 {
    let mut r = rng(seed);
    let k = random_kernel(&mut r);
    let (a, b): (f64, f64) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
    let f1 = random_affine(&mut r, false);
    let f2 = random_affine(&mut r, false);
    let g1v: f64 = r.random_range(-1.0..1.0);
    let g2v: f64 = r.random_range(-1.0..1.0);
    let u1 = unit_problem(&k, f1.clone(), Field::Const { value: g1v }, 60);
    let u2 = unit_problem(&k, f2.clone(), Field::Const { value: g2v }, 60);
    let f = Field::Sum {
        parts: vec![Field::Scaled { factor: a, inner: Box::new(f1) }, Field::Scaled { factor: b, inner: Box::new(f2) }],
    };
    let u = unit_problem(&k, f, Field::Const { value: a * g1v + b * g2v }, 60);
    let scale = u.values.iter().fold(1e-300, |m: f64, v| m.max(v.abs()));
    u.values
        .iter()
        .zip(u1.values.iter().zip(&u2.values))
        .map(|(w, (x, y))| (w - a * x - b * y).abs() / scale)
        .fold(0.0, f64::max)
}

/// Scale invariance of the ellipticity constants under `r^{2s} K(r .)`.
pub fn audit_scaling_defect(seed: u64) -> f64 {
    let mut r = rng(seed);
    let k = stable_normalized(r.random_range(0.2..0.8)).unwrap();
    let factor = r.random_range(0.1..10.0);
    let opts = AuditOptions { r_min: 1.0 / 64.0, r_max: 64.0, ..Default::default() };
    let a = audit_ellipticity(&k, opts).unwrap();
    let b = audit_ellipticity(&k.rescaled(factor).unwrap(), opts).unwrap();
    ((a.lower_const / b.lower_const) - 1.0).abs().max(((a.upper_const / b.upper_const) - 1.0).abs())
}

/// Scaling covariance of solutions for the homogeneous stable kernel: the
/// torsion function on `(0, R)` equals `R^{2s}` times the one on `(0, 1)`
/// at the matching grid.
pub fn solution_scaling_defect(seed: u64) -> f64 {
    let mut r = rng(seed);
    let s: f64 = r.random_range(0.2..0.8);
    let big = [0.5, 2.0, 4.0][r.random_range(0..3)];
    let k = stable_normalized(s).unwrap();
    let cells = 64;
    let solve_on = |len: f64| {
        let g = Grid::interval(-0.25 * len, 1.25 * len, cells).unwrap();
        let p = Problem::new(k.clone(), Domain::Interval { a: 0.0, b: len }, Field::Const { value: 1.0 }, Field::zero(), g)
            .unwrap();
        solve(&p).unwrap().u
    };
    let u1 = solve_on(1.0);
    let ur = solve_on(big);
    let factor = big.powf(2.0 * s);
    let scale = u1.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())) * factor;
    ur.values
        .iter()
        .zip(&u1.values)
        .map(|(a, b)| (a - factor * b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Two Monte Carlo runs with the same seed agree bit for bit; a different
/// seed gives a different trace.
pub fn mc_reproducible(seed: u64) -> bool {
    let k = stable_normalized(0.5).unwrap();
    let cfg = PathConfig { delta: 1.0 / 64.0, dt: 1e-3, paths: 200, seed, horizon: 100.0 };
    let a = exit_time_profile(&k, 1.0, &[0.3, 0.6], &cfg).unwrap().to_csv();
    let b = exit_time_profile(&k, 1.0, &[0.3, 0.6], &cfg).unwrap().to_csv();
    let c = exit_time_profile(&k, 1.0, &[0.3, 0.6], &PathConfig { seed: seed + 1, ..cfg }).unwrap().to_csv();
    a == b && a != c
}

/// Runs the binary; returns its exit code.
pub fn nblab(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nblab"))
        .args(args)
        .env("NBLAB_OUT", out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

/// Runs the same seeded mc scenario twice through the binary and compares
/// the CSV bytes.
pub fn cli_reproducible(seed: u64) -> bool {
    let dir = tempfile::tempdir().unwrap();
    let params = format!(r#"{{"x":[0.25,0.5],"paths":200,"seed":{seed},"delta":0.015625,"dt":0.001}}"#);
    let kernel = r#"{"dimension":1,"s":0.5,"family":"stable"}"#;
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let code = nblab(&["mc", "--kernel", kernel, "--params", &params, "--name", name], dir.path());
        assert_eq!(code, 0);
        csv.push(std::fs::read(dir.path().join(name).join("results.csv")).unwrap());
    }
    csv[0] == csv[1]
}
