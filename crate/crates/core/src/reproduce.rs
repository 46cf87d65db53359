//! The acceptance matrix: twelve numbered criteria, each producing a
//! report with named sub-criteria, a runtime and an overall verdict.
//!
//! The quick mode shrinks grids and path counts and widens tolerances as
//! listed in each criterion's doc comment.

use std::cell::OnceCell;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boundary::{
    decay_fit, dini_integral, expansion_check, gronwall_mk, harnack_quotient, hopf_mk, hopf_ratio, DecayOptions,
    DyadicSchedule, Modulus,
};
use crate::error::Result;
use crate::interp::log_space;
use crate::io::{self, Criterion, Report};
use crate::kernels::{audit_ellipticity, lattice, random, stable, stable_normalized, tempered, Atom, AuditOptions, LevyKernel};
use crate::montecarlo::{exit_time_profile, PathConfig};
use crate::scenario::{self, stable_torsion_constant, Scenario};
use crate::solver::special::{comparison_g, halfline_barrier, torsion, Barrier, BARRIER_DRIFT_LIMIT};
use crate::solver::{solve, Domain, Field, Grid, GridFunction, Problem};
use crate::symbol::{build_symbol_table, default_grid, eval_symbol};
use crate::wiener_hopf::{barrier_spectrum, factor_symbol, spectral_crosscheck, CrosscheckOptions};

pub const CRITERIA: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub seconds: f64,
    pub time_limit: f64,
    pub checks: Vec<Criterion>,
    /// Module error that stopped the criterion, if any.
    pub error: Option<String>,
    pub details: Value,
}

impl CriterionResult {
    /// One table row: id, verdict, name, runtime and the checks.
    pub fn line(&self) -> String {
        let checks: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}={:.4e} ({})", c.name, c.value, c.threshold))
            .collect();
        let mut line = format!(
            "[{:>2}] {} {:<28} {:>7.1}s/{:<5} {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.time_limit,
            checks.join(" ")
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        line
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub quick: bool,
    pub passed: bool,
    pub results: Vec<CriterionResult>,
}

pub fn name(id: usize) -> &'static str {
    match id {
        1 => "symbol_golden_form",
        2 => "ellipticity_audit",
        3 => "wiener_hopf_identities",
        4 => "barrier_construction",
        5 => "liouville_crosscheck",
        6 => "torsion_golden_form",
        7 => "monte_carlo_consistency",
        8 => "boundary_decay",
        9 => "hopf_lemma",
        10 => "boundary_harnack",
        11 => "dyadic_calculus",
        12 => "property_suites",
        _ => "unknown",
    }
}

fn time_limit(id: usize) -> f64 {
    match id {
        1 => 10.0,
        2 => 5.0,
        3 => 60.0,
        4 => 300.0,
        5 => 120.0,
        6 => 60.0,
        7 => 180.0,
        8..=10 => 600.0,
        11 => 5.0,
        _ => 600.0,
    }
}

type Outcome = (Vec<Criterion>, Value);

/// Results shared between criteria of one run: the half-line barriers
/// (criteria 4 and 5) and the 2D solves (criteria 8 to 10). Only successes
/// are cached; a failed computation is retried by the next criterion.
pub struct Matrix {
    quick: bool,
    barriers: OnceCell<[Barrier; 2]>,
    solves: OnceCell<Vec<(usize, GridFunction, GridFunction)>>,
}

impl Matrix {
    pub fn new(quick: bool) -> Self {
        Matrix { quick, barriers: OnceCell::new(), solves: OnceCell::new() }
    }

    fn barriers(&self) -> Result<&[Barrier; 2]> {
        if let Some(b) = self.barriers.get() {
            return Ok(b);
        }
        let (rs, h) = barrier_setup(self.quick);
        let st = halfline_barrier(&stable_normalized(0.5)?, &rs, h)?;
        let la = halfline_barrier(&lattice(1, 0.5, 1.0, -40, 40)?, &rs, h)?;
        Ok(self.barriers.get_or_init(|| [st, la]))
    }

    /// `(n, u1, u2)` for each grid of the refinement pair.
    fn solves(&self) -> Result<&[(usize, GridFunction, GridFunction)]> {
        if let Some(v) = self.solves.get() {
            return Ok(v);
        }
        let mut v = Vec::new();
        for n in refinement_pair(self.quick) {
            let (u1, u2) = boundary_solves(n)?;
            v.push((n, u1, u2));
        }
        Ok(self.solves.get_or_init(|| v))
    }

    /// Runs criterion `id` (1-based). Module errors become a failed result.
    pub fn run(&self, id: usize) -> CriterionResult {
        let quick = self.quick;
        let t = Instant::now();
        let out: Result<Outcome> = match id {
            1 => symbol_golden(quick),
            2 => ellipticity(quick),
            3 => wiener_hopf(quick),
            4 => self.barriers().and_then(|b| barrier(quick, b)),
            5 => self.barriers().and_then(|b| liouville(quick, b)),
            6 => torsion_golden(quick),
            7 => monte_carlo(quick),
            8 => self.solves().and_then(|s| boundary_decay(quick, s)),
            9 => self.solves().and_then(|s| hopf(quick, s)),
            10 => self.solves().and_then(harnack),
            11 => dyadic(quick),
            12 => properties(quick),
            _ => Err(crate::Error::Parameter(format!("no criterion {id}"))),
        };
        let seconds = t.elapsed().as_secs_f64();
        let limit = time_limit(id);
        let (mut checks, details, error) = match out {
            Ok((c, d)) => (c, d, None),
            Err(e) => (Vec::new(), Value::Null, Some(e.to_string())),
        };
        if error.is_none() {
            checks.push(Criterion::at_most("runtime_s", seconds, limit));
        }
        let pass = error.is_none() && checks.iter().all(|c| c.pass);
        CriterionResult {
            id,
            name: name(id).into(),
            pass,
            seconds,
            time_limit: limit,
            checks,
            error,
            details,
        }
    }
}

/// Runs a single criterion on its own.
pub fn run_criterion(id: usize, quick: bool) -> CriterionResult {
    Matrix::new(quick).run(id)
}

/// Runs every criterion in order, printing one line each and writing the
/// per-criterion reports as they complete, then `summary.json`.
pub fn reproduce_all(quick: bool, out: &Path, mut progress: impl FnMut(&CriterionResult)) -> Result<Summary> {
    let matrix = Matrix::new(quick);
    let mut results = Vec::with_capacity(CRITERIA);
    for id in 1..=CRITERIA {
        let r = matrix.run(id);
        let mut rep = Report::new(&format!("criterion-{id:02}"), r.name.as_str());
        rep.criteria = r.checks.clone();
        rep.details = json!({"seconds": r.seconds, "error": r.error, "details": r.details});
        io::write_json(&out.join(format!("{id:02}-{}", r.name)), "report.json", &rep)?;
        progress(&r);
        results.push(r);
    }
    let summary = Summary {
        schema_version: io::SCHEMA_VERSION,
        quick,
        passed: results.iter().all(|r| r.pass),
        results,
    };
    io::write_json(out, "summary.json", &summary)?;
    Ok(summary)
}

/// Relative error of `eval_symbol` against `|xi|^{2s}` on `[0.1, 100]` for
/// the normalized stable kernel, `s` in {0.3, 0.5, 0.7}. Limit 1e-3.
fn symbol_golden(_quick: bool) -> Result<Outcome> {
    let xs = log_space(0.1, 100.0, 31);
    let mut worst: f64 = 0.0;
    let mut per_s = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let k = stable_normalized(s)?;
        let mut e: f64 = 0.0;
        for &x in &xs {
            e = e.max((eval_symbol(&k, x)? / x.powf(2.0 * s) - 1.0).abs());
        }
        per_s.push(json!({"s": s, "max_rel_error": e}));
        worst = worst.max(e);
    }
    Ok((vec![Criterion::at_most("max_rel_error", worst, 1e-3)], json!(per_s)))
}

/// Two atoms at `+-1`: no mass below radius one, so the lower bound fails.
pub fn atom_pair() -> Result<LevyKernel> {
    LevyKernel::new(
        1,
        0.5,
        None,
        vec![
            Atom { loc: [1.0, 0.0], mass: 1.0 },
            Atom { loc: [-1.0, 0.0], mass: 1.0 },
        ],
        "atom pair",
    )
}

/// Stable and lattice kernels pass both bounds with positive constants,
/// the atom pair fails the lower bound.
fn ellipticity(_quick: bool) -> Result<Outcome> {
    let opts = AuditOptions { r_min: 2f64.powi(-20), r_max: 2f64.powi(10), ..Default::default() };
    let st = audit_ellipticity(&stable_normalized(0.5)?, opts)?;
    let la = audit_ellipticity(&lattice(1, 0.5, 1.0, -40, 40)?, opts)?;
    let pair = audit_ellipticity(&atom_pair()?, AuditOptions { allow_degenerate: true, ..opts })?;
    let checks = vec![
        Criterion::flag("stable_passes", st.passes && st.lower_const > 0.0),
        Criterion::flag("lattice_passes", la.passes && la.lower_const > 0.0),
        Criterion::flag("atom_pair_fails_lower", !pair.passes && pair.lower_const <= 0.0),
    ];
    let d = json!({
        "stable": [st.lower_const, st.upper_const],
        "lattice": [la.lower_const, la.upper_const],
        "atom_pair": [pair.lower_const, pair.upper_const],
    });
    Ok((checks, d))
}

/// Kernels whose symbols are factored in the identity check.
pub fn regression_corpus() -> Result<Vec<LevyKernel>> {
    Ok(vec![
        stable_normalized(0.3)?,
        stable_normalized(0.5)?,
        stable_normalized(0.7)?,
        stable(1, 0.4, 1.0)?,
        tempered(1, 0.5, 1.0, 1.0)?,
        lattice(1, 0.5, 1.0, -40, 40)?,
        random(1, 0.6, 1.0, 0.5, 2.0, 7, 0.0)?,
        random(1, 0.35, 1.0, 0.5, 1.5, 11, 0.2)?,
    ])
}

/// `A_+ A_- = A` and `|A_-| = sqrt(A)` to 1e-6 over the corpus; phase of
/// `A_-` for stable symbols equal to `pi s / 2` to 1e-3.
fn wiener_hopf(_quick: bool) -> Result<Outcome> {
    let grid = default_grid();
    let mut product: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    let mut phase: f64 = 0.0;
    let mut rows = Vec::new();
    for k in regression_corpus()? {
        let t = build_symbol_table(&k, &grid)?;
        let f = factor_symbol(&t)?;
        let mut p: f64 = 0.0;
        let mut m: f64 = 0.0;
        for (i, &x) in f.xi.iter().enumerate() {
            let a = f.symbol[i];
            p = p.max(((f.a_plus_at(x) * f.a_minus_at(x)).re / a - 1.0).abs().max((f.a_plus_at(x) * f.a_minus_at(x)).im.abs() / a));
            m = m.max((f.a_minus_at(x).norm() / a.sqrt() - 1.0).abs());
        }
        product = product.max(p);
        modulus = modulus.max(m);
        rows.push(json!({"kernel": k.label(), "product": p, "modulus": m}));
    }
    for s in [0.3, 0.5, 0.7] {
        let t = build_symbol_table(&stable_normalized(s)?, &grid)?;
        let f = factor_symbol(&t)?;
        let target = std::f64::consts::PI * s / 2.0;
        for &x in &[1e-2, 0.1, 1.0, 10.0, 100.0] {
            phase = phase.max((f.a_minus_at(x).arg() - target).abs());
        }
    }
    let checks = vec![
        Criterion::at_most("product_identity", product, 1e-6),
        Criterion::at_most("modulus_identity", modulus, 1e-6),
        Criterion::at_most("stable_phase_error", phase, 1e-3),
    ];
    Ok((checks, json!(rows)))
}

fn barrier_setup(quick: bool) -> (Vec<f64>, f64) {
    if quick {
        (vec![8.0, 16.0, 32.0], 1.0 / 128.0)
    } else {
        (vec![16.0, 32.0, 64.0], 1.0 / 256.0)
    }
}

/// Barrier log-log slope `s +- 0.03` on `[1/16, 1]` for the stable kernel
/// (quick: `R` up to 32, `h = 1/128`, `+- 0.05`); lattice band constant
/// below 20; stage drift within the exhaustion limit.
fn barrier(quick: bool, [st, la]: &[Barrier; 2]) -> Result<Outcome> {
    let tol = if quick { 0.05 } else { 0.03 };
    let slope = st.loglog_slope(1.0 / 16.0, 1.0)?;
    let band = la.ratio_scan(la.reach);
    let drift = [st, la]
        .iter()
        .flat_map(|b| b.stages.iter().filter_map(|x| x.drift))
        .fold(0.0, f64::max);
    let checks = vec![
        Criterion::within("stable_slope", slope, 0.5 - tol, 0.5 + tol),
        Criterion::at_most("lattice_band_c", band.constant, 20.0),
        Criterion::at_most("stage_drift", drift, BARRIER_DRIFT_LIMIT),
    ];
    let d = json!({"lattice_band": band, "reach": st.reach});
    Ok((checks, d))
}

/// Spectral crosscheck residual below 5% for the stable and lattice
/// barriers over the window `T = 8` (quick: `T = 4`, 8%).
fn liouville(quick: bool, barriers: &[Barrier; 2]) -> Result<Outcome> {
    let (window, tol) = if quick { (4.0, 0.08) } else { (8.0, 0.05) };
    let kernels = [stable_normalized(0.5)?, lattice(1, 0.5, 1.0, -40, 40)?];
    let mut checks = Vec::new();
    let mut d = Vec::new();
    for (k, b) in kernels.iter().zip(barriers) {
        let f = factor_symbol(&build_symbol_table(k, &default_grid())?)?;
        let spec = barrier_spectrum(&f)?;
        let mut o = CrosscheckOptions::new(window);
        o.tolerance = tol;
        let rep = spectral_crosscheck(&spec, &b.samples(), b.h, o)?;
        let name = if k.atoms().is_empty() { "stable_residual" } else { "lattice_residual" };
        checks.push(Criterion::at_most(name, rep.residual_rms, tol));
        d.push(json!({"kernel": k.label(), "band": rep.band, "scale": rep.fitted_scale, "max": rep.residual_max}));
    }
    Ok((checks, json!(d)))
}

/// Interior relative error of the 1D stable torsion against
/// `c_s (x (R - x))^s` at `h = R/512` (quick: `R/256`), limit 5%.
fn torsion_golden(quick: bool) -> Result<Outcome> {
    let r = 1.0;
    let h = if quick { r / 256.0 } else { r / 512.0 };
    let mut worst: f64 = 0.0;
    let mut d = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let t = torsion(&stable_normalized(s)?, r, h)?;
        let c = stable_torsion_constant(s);
        let e = t
            .u
            .interior_nodes()
            .map(|(x, u)| {
                let exact = c * (x[0] * (r - x[0])).powf(s);
                (u - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        d.push(json!({"s": s, "max_rel_error": e}));
        worst = worst.max(e);
    }
    Ok((vec![Criterion::at_most("max_rel_error", worst, 0.05)], json!(d)))
}

/// Monte Carlo means within 3 confidence half-widths of the torsion solve
/// at five points, 10^4 paths (quick: 2000 paths, coarser truncation).
fn monte_carlo(quick: bool) -> Result<Outcome> {
    let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let cfg = if quick {
        PathConfig { delta: 1.0 / 256.0, dt: 2e-4, paths: 2000, seed: 1, horizon: 100.0 }
    } else {
        PathConfig { delta: 1.0 / 512.0, dt: 1e-4, paths: 10_000, seed: 1, horizon: 100.0 }
    };
    let mut checks = Vec::new();
    let mut d = Vec::new();
    for (label, k) in [("stable", stable_normalized(0.5)?), ("lattice", lattice(1, 0.5, 1.0, -40, 40)?)] {
        let t = torsion(&k, 1.0, 1.0 / 512.0)?;
        let prof = exit_time_profile(&k, 1.0, &xs, &cfg)?;
        let z = prof
            .rows
            .iter()
            .map(|e| (e.mean - t.u.value_at([e.x, 0.0])).abs() / e.ci_halfwidth)
            .fold(0.0, f64::max);
        checks.push(Criterion::at_most(&format!("{label}_gap_in_ci"), z, 3.0));
        d.push(json!({"kernel": label, "rows": prof.rows}));
    }
    Ok((checks, json!(d)))
}

/// Fixed 2D geometry: epigraph of `|t|^{3/2}` inside the ball of radius
/// 0.9 centered at `(0, 0.8)`, box `[-1, 1] x [-0.1, 1.9]`.
pub fn boundary_domain() -> Domain {
    Domain::EpigraphBall {
        coeff: 1.0,
        exponent: 1.5,
        radius: 0.9,
        lift: 0.8,
        left_coeff: None,
    }
}

pub fn boundary_grid(n: usize) -> Result<Grid> {
    Grid::plane([-1.0, -0.1], 2.0 / n as f64, n + 1, n + 1)
}

/// Grid sizes of the refinement pair: 64 -> 96 (quick: 64 -> 72).
pub fn refinement_pair(quick: bool) -> [usize; 2] {
    if quick {
        [64, 72]
    } else {
        [64, 96]
    }
}

/// Torsion (`f = 1`) and `f = max(1 + x1, 0)` solves on the fixed domain.
pub fn boundary_solves(n: usize) -> Result<(GridFunction, GridFunction)> {
    let k = stable(2, 0.5, 1.0)?;
    let d = boundary_domain();
    let g = boundary_grid(n)?;
    let u1 = solve(&Problem::new(k.clone(), d.clone(), Field::Const { value: 1.0 }, Field::zero(), g)?)?.u;
    let f2 = Field::ClippedAffine { c0: 1.0, c: [1.0, 0.0], floor: 0.0 };
    let u2 = solve(&Problem::new(k, d, f2, Field::zero(), g)?)?.u;
    Ok((u1, u2))
}

/// Decay exponent in `[0.43, 0.57]` at both resolutions and moving toward
/// 0.5 under refinement (quick: `[0.40, 0.60]`).
fn boundary_decay(quick: bool, solves: &[(usize, GridFunction, GridFunction)]) -> Result<Outcome> {
    let (lo, hi) = if quick { (0.40, 0.60) } else { (0.43, 0.57) };
    let d = boundary_domain();
    let mut fits = Vec::new();
    for (_, u1, _) in solves {
        fits.push(decay_fit(u1, &d, DecayOptions::default())?.s_hat);
    }
    let checks = vec![
        Criterion::within("s_hat_coarse", fits[0], lo, hi),
        Criterion::within("s_hat_fine", fits[1], lo, hi),
        Criterion::flag("improves_toward_half", (fits[1] - 0.5).abs() <= (fits[0] - 0.5).abs()),
    ];
    Ok((checks, json!({"s_hat": fits})))
}

/// Hopf constant positive with relative drift below 10% (quick: 15%).
fn hopf(quick: bool, solves: &[(usize, GridFunction, GridFunction)]) -> Result<Outcome> {
    let tol = if quick { 0.15 } else { 0.10 };
    let d = boundary_domain();
    let mut c = Vec::new();
    for (_, u1, _) in solves {
        c.push(hopf_ratio(u1, &d, 0.5, [0.0, 0.0], 0.75)?.c_hat);
    }
    let drift = (c[1] - c[0]).abs() / c[1].abs();
    let checks = vec![
        Criterion::positive("c_hat_coarse", c[0]),
        Criterion::positive("c_hat_fine", c[1]),
        Criterion::at_most("drift", drift, tol),
    ];
    Ok((checks, json!({"c_hat": c})))
}

/// Quotient seminorm at `alpha = s/2` finite and within a factor 2 under
/// refinement; expansion constants within a factor 2 across the top three
/// dyadic radii at the finer grid.
fn harnack(solves: &[(usize, GridFunction, GridFunction)]) -> Result<Outcome> {
    let s = 0.5;
    let k = stable(2, s, 1.0)?;
    let d = boundary_domain();
    let mut q = Vec::new();
    let mut spread = 0.0;
    let mut radii = Vec::new();
    for (n, u1, u2) in solves {
        let n = *n;
        q.push(harnack_quotient(u2, u1, &d, s / 2.0, [0.0, 0.0], 0.5)?.seminorm);
        let g = comparison_g(&k, &d, boundary_grid(n)?)?;
        let e = expansion_check(u1, &g, [0.0, 0.0], s, s / 2.0, 1.0)?;
        spread = e.top_three_spread;
        radii = e.radii;
    }
    let ratio = q[0].max(q[1]) / q[0].min(q[1]);
    let checks = vec![
        Criterion::flag("quotient_finite", q.iter().all(|v| v.is_finite())),
        Criterion::at_most("quotient_refinement_ratio", ratio, 2.0),
        Criterion::at_most("expansion_spread", spread, 2.0),
    ];
    Ok((checks, json!({"seminorm": q, "expansion_radii": radii})))
}

/// Dini integrals against closed forms, the Grönwall bound on a set of
/// schedules, and positivity of the Hopf product exactly for Dini moduli.
fn dyadic(_quick: bool) -> Result<Outcome> {
    let s = 0.5;
    let mut power_err: f64 = 0.0;
    for a in [0.25, 0.5, 1.0] {
        let d = dini_integral(&Modulus::Power { alpha: a }, s)?;
        power_err = power_err.max((d.value - 1.0 / (s * a)).abs() * s * a);
    }
    let log_crit = dini_integral(&Modulus::LogPower { p: 2.0 / s }, s)?;
    let log_div = dini_integral(&Modulus::LogPower { p: 1.0 / s }, s)?;
    let schedules = [
        Modulus::Zero,
        Modulus::Power { alpha: 0.5 },
        Modulus::Power { alpha: 1.0 },
        Modulus::LogPower { p: 2.0 / s },
        Modulus::LogPower { p: 3.0 / s },
    ];
    let mut gronwall_ok = true;
    let mut hopf_ok = true;
    for m in schedules.iter().cloned() {
        for c in [0.5, 1.0] {
            let sched = DyadicSchedule::new(m.clone(), s, 1.0, c)?;
            let g = gronwall_mk(&sched, 60, 1.0)?;
            gronwall_ok &= g.holds;
            hopf_ok &= hopf_mk(&sched, None, 1.0)?.positive;
        }
    }
    for p in [1.0 / s, 0.5 / s] {
        let sched = DyadicSchedule::new(Modulus::LogPower { p }, s, 1.0, 1.0)?;
        hopf_ok &= !hopf_mk(&sched, None, 1.0)?.positive;
    }
    let checks = vec![
        Criterion::at_most("power_rel_error", power_err, 1e-6),
        Criterion::at_most("log_critical_error", (log_crit.value - 1.0).abs(), 1e-4),
        Criterion::flag("log_divergence_detected", !log_div.finite),
        Criterion::flag("gronwall_bound_holds", gronwall_ok),
        Criterion::flag("hopf_positive_iff_dini", hopf_ok),
    ];
    Ok((checks, json!({"log_critical": log_crit.value})))
}

/// Seeded versions of the property suites (50 seeds, quick: 10):
/// comparison principle, superposition to 1e-12, scale invariance of the
/// audit constants, bit-identical Monte Carlo and scenario output.
fn properties(quick: bool) -> Result<Outcome> {
    let seeds = if quick { 10 } else { 50 };
    let k = stable_normalized(0.5)?;
    let d = Domain::Interval { a: 0.0, b: 1.0 };
    let g = Grid::interval(-0.125, 1.125, 80)?;
    let mut comparison = true;
    let mut superposition: f64 = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c0, c1): (f64, f64) = (rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0));
        let f1 = Field::Affine { c0: c0 + c1.abs(), c: [c1, 0.0] };
        let f2 = Field::Const { value: rng.random_range(-1.0..1.0) };
        let u1 = solve(&Problem::new(k.clone(), d.clone(), f1.clone(), Field::zero(), g)?)?.u;
        let u2 = solve(&Problem::new(k.clone(), d.clone(), f2.clone(), Field::zero(), g)?)?.u;
        let sum = Field::Sum { parts: vec![f1, f2] };
        let u12 = solve(&Problem::new(k.clone(), d.clone(), sum, Field::zero(), g)?)?.u;
        comparison &= u1.values.iter().all(|v| *v >= -1e-14);
        let scale = u12.values.iter().fold(1e-300, |m: f64, v| m.max(v.abs()));
        for i in 0..u12.values.len() {
            superposition = superposition.max((u12.values[i] - u1.values[i] - u2.values[i]).abs() / scale);
        }
    }
    let opts = AuditOptions { r_min: 1.0 / 64.0, r_max: 64.0, ..Default::default() };
    let base = audit_ellipticity(&k, opts)?;
    let mut scaling: f64 = 0.0;
    for seed in 0..seeds {
        let r = ChaCha8Rng::seed_from_u64(1000 + seed).random_range(0.1..10.0);
        let a = audit_ellipticity(&k.rescaled(r)?, opts)?;
        scaling = scaling.max((a.lower_const / base.lower_const - 1.0).abs());
        scaling = scaling.max((a.upper_const / base.upper_const - 1.0).abs());
    }
    let cfg = PathConfig { delta: 1.0 / 64.0, dt: 1e-3, paths: 200, seed: 5, horizon: 100.0 };
    let mut mc_identical = true;
    for seed in 0..seeds.min(10) {
        let c = PathConfig { seed, ..cfg };
        let a = exit_time_profile(&k, 1.0, &[0.5], &c)?.to_csv();
        let b = exit_time_profile(&k, 1.0, &[0.5], &c)?.to_csv();
        mc_identical &= a == b;
    }
    let dir = std::env::temp_dir().join(format!("nblab-repro-{}", std::process::id()));
    let text = r#"{"name":"p","experiment":"mc","kernel":{"dimension":1,"s":0.5,"family":"stable"},
        "params":{"x":[0.25,0.5],"paths":200,"seed":3,"delta":0.015625,"dt":0.001}}"#;
    let sc = Scenario::parse(text, None).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let a = scenario::run(&sc, &dir.join("a")).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let b = scenario::run(&sc, &dir.join("b")).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let _ = std::fs::remove_dir_all(&dir);
    let checks = vec![
        Criterion::flag("comparison_principle", comparison),
        Criterion::at_most("superposition_defect", superposition, 1e-12),
        Criterion::at_most("audit_scaling_defect", scaling, 1e-8),
        Criterion::flag("mc_bit_identical", mc_identical),
        Criterion::flag("scenario_csv_identical", a.csv == b.csv),
    ];
    Ok((checks, json!({"seeds": seeds})))
}
