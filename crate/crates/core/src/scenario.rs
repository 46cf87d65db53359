//! JSON scenarios: one named experiment with its kernel, parameters and
//! output directory, producing `results.csv`, `report.json` and an optional
//! `plot.svg`.

use std::path::{Path, PathBuf};

use libm::tgamma;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{
    decay_fit, dini_integral_below, expansion_check, harnack_quotient, holder_seminorm, hopf_ratio, DecayOptions,
    Modulus,
};
use crate::error::Error;
use crate::io::{self, Axes, Criterion, Report, Series};
use crate::kernels::{KernelSpec, LevyKernel, Point};
use crate::montecarlo::{exit_time_profile, PathConfig};
use crate::solver::special::{comparison_g, halfline_barrier, torsion, BARRIER_DRIFT_LIMIT};
use crate::solver::{solve, Domain, Field, Grid, GridFunction, Problem};
use crate::symbol::build_symbol_table;
use crate::wiener_hopf::factor_symbol;

pub const EXPERIMENTS: [&str; 9] = [
    "symbol",
    "factor",
    "barrier",
    "torsion",
    "solve",
    "boundary-check",
    "bhp",
    "mc",
    "dini",
];

/// Scenario failures, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    /// Malformed input or violated precondition (exit code 2).
    #[error("{0}")]
    Schema(String),
    /// Numerical failure inside a module (exit code 3).
    #[error(transparent)]
    Numerical(#[from] Error),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Schema(_) => 2,
            ScenarioError::Numerical(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, ScenarioError>;

fn schema(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema(msg.into())
}

/// Inline kernel description or a path to a JSON file holding one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRef {
    Inline(KernelSpec),
    File(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub kernel: Option<KernelRef>,
    pub experiment: String,
    #[serde(default)]
    pub params: Value,
    /// Output directory; defaults to `<root>/<name>`.
    #[serde(default)]
    pub output: Option<String>,
}

impl Scenario {
    /// Parses a scenario; kernel file references are resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Scenario> {
        let mut sc: Scenario = serde_json::from_str(text)
            .map_err(|e| schema(format!("scenario line {} column {}: {e}", e.line(), e.column())))?;
        if !EXPERIMENTS.contains(&sc.experiment.as_str()) {
            return Err(schema(format!(
                "field 'experiment': unknown tag '{}', expected one of {}",
                sc.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        if let Some(KernelRef::File(f)) = &sc.kernel {
            let path = match base {
                Some(b) => b.join(f),
                None => PathBuf::from(f),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| schema(format!("field 'kernel': cannot read {}: {e}", path.display())))?;
            let spec: KernelSpec = serde_json::from_str(&text).map_err(|e| {
                schema(format!("kernel file {} line {} column {}: {e}", path.display(), e.line(), e.column()))
            })?;
            sc.kernel = Some(KernelRef::Inline(spec));
        }
        // Parameter schemas are checked before any computation starts.
        sc.check_params()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text, path.parent())
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        let v = if self.params.is_null() { json!({}) } else { self.params.clone() };
        serde_json::from_value(v).map_err(|e| schema(format!("field 'params' of experiment '{}': {e}", self.experiment)))
    }

    fn check_params(&self) -> Result<()> {
        match self.experiment.as_str() {
            "symbol" => self.params::<SymbolParams>().map(drop),
            "factor" => self.params::<FactorParams>().map(drop),
            "barrier" => self.params::<BarrierParams>().map(drop),
            "torsion" => self.params::<TorsionParams>().map(drop),
            "solve" => self.params::<SolveParams>().map(drop),
            "boundary-check" => self.params::<BoundaryParams>().map(drop),
            "bhp" => self.params::<BhpParams>().map(drop),
            "mc" => {
                let p: McParams = self.params()?;
                if p.paths < 100 {
                    return Err(schema(format!("field 'params.paths': {} paths requested, at least 100 needed", p.paths)));
                }
                Ok(())
            }
            "dini" => self.params::<DiniParams>().map(drop),
            _ => unreachable!(),
        }
    }

    fn kernel(&self) -> Result<(KernelSpec, LevyKernel)> {
        match &self.kernel {
            Some(KernelRef::Inline(spec)) => Ok((spec.clone(), spec.build()?)),
            Some(KernelRef::File(_)) => Err(schema("kernel file reference was not resolved")),
            None => Err(schema(format!("experiment '{}' needs a 'kernel' field", self.experiment))),
        }
    }

    pub fn output_dir(&self, root: &Path) -> PathBuf {
        match &self.output {
            Some(o) => PathBuf::from(o),
            None => root.join(&self.name),
        }
    }
}

/// Result of a scenario run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub dir: PathBuf,
    pub csv: String,
    pub svg: Option<String>,
}

/// Runs the scenario and writes its artifacts below `root`.
pub fn run(sc: &Scenario, root: &Path) -> Result<Outcome> {
    let dir = sc.output_dir(root);
    std::fs::create_dir_all(&dir).map_err(|e| schema(format!("output directory {} is not writable: {e}", dir.display())))?;
    let mut report = Report::new(&sc.name, &sc.experiment);
    let (csv, svg) = match sc.experiment.as_str() {
        "symbol" => run_symbol(sc, &mut report)?,
        "factor" => run_factor(sc, &mut report)?,
        "barrier" => run_barrier(sc, &mut report)?,
        "torsion" => run_torsion(sc, &mut report)?,
        "solve" => run_solve(sc, &mut report)?,
        "boundary-check" => run_boundary(sc, &mut report)?,
        "bhp" => run_bhp(sc, &mut report)?,
        "mc" => run_mc(sc, &mut report)?,
        "dini" => run_dini(sc, &mut report)?,
        other => return Err(schema(format!("unknown experiment '{other}'"))),
    };
    io::write_file(&dir, "results.csv", &csv)?;
    io::write_json(&dir, "report.json", &report)?;
    if let Some(svg) = &svg {
        io::write_file(&dir, "plot.svg", svg)?;
    }
    Ok(Outcome { report, dir, csv, svg })
}

/// Grid given by its lower and upper corners and the number of cells along
/// the first axis; the second axis uses the same spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        let d = self.lo.len();
        if d != self.hi.len() || !(1..=2).contains(&d) || self.cells < 2 {
            return Err(schema("field 'grid': lo and hi need 1 or 2 matching coordinates and cells >= 2"));
        }
        let h = (self.hi[0] - self.lo[0]) / self.cells as f64;
        if d == 1 {
            return Ok(Grid::line(self.lo[0], h, self.cells + 1)?);
        }
        let ny = (self.hi[1] - self.lo[1]) / h;
        if (ny - ny.round()).abs() > 1e-6 || ny.round() < 2.0 {
            return Err(schema("field 'grid': the box height must be a whole number of cells of the x spacing"));
        }
        Ok(Grid::plane([self.lo[0], self.lo[1]], h, self.cells + 1, ny.round() as usize + 1)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SymbolParams {
    xi_min: f64,
    xi_max: f64,
    points: usize,
    /// Compare with `|xi|^{2s}` (kernels normalized to that symbol).
    power_law_tol: Option<f64>,
}

impl Default for SymbolParams {
    fn default() -> Self {
        SymbolParams {
            xi_min: 1e-3,
            xi_max: 1e3,
            points: 512,
            power_law_tol: None,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 8) {
        return Err(schema("frequency grid needs 0 < xi_min < xi_max and at least 8 points"));
    }
    Ok(crate::interp::log_space(lo, hi, n))
}

fn run_symbol(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: SymbolParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let t = build_symbol_table(&k, &log_grid(p.xi_min, p.xi_max, p.points)?)?;
    report.criteria.push(Criterion::positive("fitted_lower", t.fitted_lower));
    if let Some(tol) = p.power_law_tol {
        let err = t
            .xi
            .iter()
            .zip(&t.values)
            .map(|(x, a)| (a / x.powf(2.0 * t.s) - 1.0).abs())
            .fold(0.0, f64::max);
        report.criteria.push(Criterion::at_most("power_law_rel_error", err, tol));
    }
    report.details = json!({"fitted_lower": t.fitted_lower, "fitted_upper": t.fitted_upper});
    let svg = io::line_plot(
        &format!("symbol of {}", k.label()),
        "xi",
        "A(xi) / |xi|^2s",
        &[Series::new("A / xi^2s", t.xi.iter().zip(&t.values).map(|(x, a)| (*x, a / x.powf(2.0 * t.s))).collect())],
        Axes { log_x: true, log_y: false },
    );
    Ok((t.to_csv(), Some(svg)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FactorParams {
    xi_min: f64,
    xi_max: f64,
    points: usize,
    identity_tol: f64,
}

impl Default for FactorParams {
    fn default() -> Self {
        FactorParams {
            xi_min: 1e-3,
            xi_max: 1e3,
            points: 512,
            identity_tol: 1e-6,
        }
    }
}

fn run_factor(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: FactorParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let t = build_symbol_table(&k, &log_grid(p.xi_min, p.xi_max, p.points)?)?;
    let f = factor_symbol(&t)?;
    let ids = f.identity_report();
    let modulus = f
        .xi
        .iter()
        .zip(&f.a_minus)
        .zip(&f.symbol)
        .map(|((_, am), a)| (am.norm() / a.sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    report.criteria.push(Criterion::at_most("product_identity", ids.product, p.identity_tol));
    report.criteria.push(Criterion::at_most("modulus_identity", modulus, p.identity_tol));
    report.details = json!({"identities": ids});
    let rows = f
        .xi
        .iter()
        .zip(&f.a_minus)
        .zip(&f.phase)
        .map(|((x, am), ph)| vec![*x, am.re, am.im, am.norm(), *ph]);
    let csv = io::csv(&["xi", "re_a_minus", "im_a_minus", "abs_a_minus", "phase"], rows);
    let pos: Vec<(f64, f64)> = f.xi.iter().zip(&f.phase).filter(|(x, _)| **x > 0.0).map(|(x, p)| (*x, *p)).collect();
    let svg = io::line_plot("phase of A_-", "xi", "P(xi)", &[Series::new("P", pos)], Axes { log_x: true, log_y: false });
    Ok((csv, Some(svg)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BarrierParams {
    h: f64,
    r_list: Vec<f64>,
    slope_window: [f64; 2],
    slope_tol: Option<f64>,
    band_limit: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        BarrierParams {
            h: 1.0 / 256.0,
            r_list: vec![16.0, 32.0, 64.0],
            slope_window: [1.0 / 16.0, 1.0],
            slope_tol: Some(0.03),
            band_limit: 20.0,
        }
    }
}

fn run_barrier(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: BarrierParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let b = halfline_barrier(&k, &p.r_list, p.h)?;
    let s = k.s();
    let slope = b.loglog_slope(p.slope_window[0], p.slope_window[1])?;
    if let Some(tol) = p.slope_tol {
        report.criteria.push(Criterion::within("slope_fit", slope, s - tol, s + tol));
    }
    let scan = b.ratio_scan(p.slope_window[1]);
    report.criteria.push(Criterion::at_most("band_constant", scan.constant, p.band_limit));
    let drift = b.stages.iter().filter_map(|st| st.drift).fold(0.0, f64::max);
    report.criteria.push(Criterion::at_most("stage_drift", drift, BARRIER_DRIFT_LIMIT));
    report.details = json!({"slope_fit": slope, "scan": scan, "stages": b.stages});
    let samples = b.samples();
    let rows = samples
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, v)| {
            let t = j as f64 * b.h;
            vec![t, *v, v / t.powf(s)]
        });
    let csv = io::csv(&["t", "b", "b_over_t_s"], rows);
    let pts: Vec<(f64, f64)> = samples.iter().enumerate().skip(1).map(|(j, v)| (j as f64 * b.h, *v)).collect();
    let power: Vec<(f64, f64)> = pts.iter().map(|(t, _)| (*t, t.powf(s))).collect();
    let svg = io::line_plot(
        "half-line barrier",
        "t",
        "b(t)",
        &[Series::new("b", pts), Series::new("t^s", power)],
        Axes { log_x: true, log_y: true },
    );
    Ok((csv, Some(svg)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TorsionParams {
    r: f64,
    h: Option<f64>,
    /// Relative tolerance against `c_s (x (R - x))^s`; valid only for the
    /// one-dimensional stable kernel normalized to `|xi|^{2s}`.
    closed_form_tol: Option<f64>,
}

impl Default for TorsionParams {
    fn default() -> Self {
        TorsionParams {
            r: 1.0,
            h: None,
            closed_form_tol: None,
        }
    }
}

/// `E^x tau = c_s (x (R - x))^s` for the process with symbol `|xi|^{2s}`.
pub fn stable_torsion_constant(s: f64) -> f64 {
    tgamma(0.5) / (4f64.powf(s) * tgamma(1.0 + s) * tgamma(0.5 + s))
}

fn is_normalized_stable(spec: &KernelSpec) -> bool {
    spec.family == "stable" && spec.dimension == 1 && spec.params.get("c").is_none() && spec.atoms.is_empty()
}

fn run_torsion(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: TorsionParams = sc.params()?;
    let (spec, k) = sc.kernel()?;
    let h = p.h.unwrap_or(p.r / 512.0);
    let t = torsion(&k, p.r, h)?;
    let s = k.s();
    report.criteria.push(Criterion::at_most("bound_constant", t.scan.constant, 1e6));
    let mut err = None;
    if let Some(tol) = p.closed_form_tol {
        if !is_normalized_stable(&spec) {
            return Err(schema("field 'params.closed_form_tol' needs the normalized 1D stable kernel"));
        }
        let c = stable_torsion_constant(s);
        let e = t
            .u
            .interior_nodes()
            .map(|(x, u)| {
                let exact = c * (x[0] * (p.r - x[0])).powf(s);
                (u - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        report.criteria.push(Criterion::at_most("closed_form_rel_error", e, tol));
        err = Some(e);
    }
    report.details = json!({"scan": t.scan, "solver": t.report, "closed_form_rel_error": err});
    let line: Vec<(f64, f64)> = t.u.interior_nodes().map(|(x, u)| (x[0], u)).collect();
    let svg = io::line_plot("torsion function", "x", "u", &[Series::new("u", line)], Axes::default());
    Ok((t.u.to_csv(), Some(svg)))
}

fn default_rhs() -> Field {
    Field::Const { value: 1.0 }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveParams {
    domain: Domain,
    grid: GridSpec,
    #[serde(default = "default_rhs")]
    rhs: Field,
    #[serde(default = "Field::zero")]
    exterior: Field,
    #[serde(default = "default_residual")]
    residual_tol: f64,
}

fn default_residual() -> f64 {
    1e-10
}

fn plot_solution(u: &GridFunction, title: &str) -> String {
    let g = &u.grid;
    if g.dim == 1 {
        let pts = (0..g.len()).map(|k| (g.coord(k)[0], u.values[k])).collect();
        return io::line_plot(title, "x", "u", &[Series::new("u", pts)], Axes::default());
    }
    let vals: Vec<f64> = (0..g.len()).map(|k| if u.interior[k] { u.values[k] } else { f64::NAN }).collect();
    io::heatmap(title, g.n[0], g.n[1], &vals)
}

fn solve_problem(k: &LevyKernel, domain: &Domain, rhs: Field, exterior: Field, grid: Grid) -> Result<crate::solver::Solution> {
    let p = Problem::new(k.clone(), domain.clone(), rhs, exterior, grid)?;
    Ok(solve(&p)?)
}

fn run_solve(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: SolveParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let sol = solve_problem(&k, &p.domain, p.rhs, p.exterior, p.grid.build()?)?;
    report.criteria.push(Criterion::at_most("relative_residual", sol.report.relative_residual, p.residual_tol));
    report.details = json!({"solver": sol.report});
    let svg = plot_solution(&sol.u, "solution");
    Ok((sol.u.to_csv(), Some(svg)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryParams {
    domain: Domain,
    /// Solution CSV written by `solve`; solved afresh when absent.
    #[serde(default)]
    solution: Option<String>,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default = "default_rhs")]
    rhs: Field,
    #[serde(default)]
    decay_center: Point,
    #[serde(default = "default_decay_radius")]
    decay_radius: f64,
    #[serde(default = "default_boundary_points")]
    boundary_points: usize,
    #[serde(default = "default_decay_tol")]
    decay_tol: f64,
    #[serde(default = "default_hopf_radius")]
    hopf_radius: f64,
}

fn default_decay_radius() -> f64 {
    DecayOptions::default().radius
}

fn default_boundary_points() -> usize {
    DecayOptions::default().boundary_points
}

fn default_decay_tol() -> f64 {
    0.07
}

fn default_hopf_radius() -> f64 {
    0.75
}

fn field_for(sc: &Scenario, k: &LevyKernel, domain: &Domain, solution: &Option<String>, grid: &Option<GridSpec>, rhs: Field) -> Result<GridFunction> {
    match (solution, grid) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| schema(format!("field 'params.solution': cannot read {path}: {e}")))?;
            Ok(GridFunction::from_csv(&text, Field::zero())?)
        }
        (None, Some(g)) => Ok(solve_problem(k, domain, rhs, Field::zero(), g.build()?)?.u),
        (None, None) => Err(schema(format!("experiment '{}' needs 'params.solution' or 'params.grid'", sc.experiment))),
    }
}

fn run_boundary(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: BoundaryParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let s = k.s();
    let u = field_for(sc, &k, &p.domain, &p.solution, &p.grid, p.rhs.clone())?;
    let opts = DecayOptions {
        center: p.decay_center,
        radius: p.decay_radius,
        boundary_points: p.boundary_points,
        ..Default::default()
    };
    let fit = decay_fit(&u, &p.domain, opts)?;
    report.criteria.push(Criterion::within("decay_s_hat", fit.s_hat, s - p.decay_tol, s + p.decay_tol));
    let hopf = hopf_ratio(&u, &p.domain, s, p.decay_center, p.hopf_radius)?;
    report.criteria.push(Criterion::positive("hopf_c_hat", hopf.c_hat));
    let domain = p.domain.clone();
    let holder = holder_seminorm(&u, s, |x| domain.contains(x));
    report.criteria.push(Criterion::flag("holder_finite", holder.seminorm.is_finite()));
    report.details = json!({"decay": fit, "hopf": hopf, "holder": holder});
    let rows = fit.normals.iter().map(|n| vec![n.z[0], n.z[1], n.normal[0], n.normal[1], n.slope, n.samples as f64]);
    let csv = io::csv(&["z_x", "z_y", "normal_x", "normal_y", "slope", "samples"], rows);
    Ok((csv, Some(plot_solution(&u, "solution"))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BhpParams {
    domain: Domain,
    grid: GridSpec,
    #[serde(default = "default_rhs")]
    rhs1: Field,
    #[serde(default = "default_rhs2")]
    rhs2: Field,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    center: Point,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default)]
    z: Point,
    #[serde(default = "default_r_max")]
    r_max: f64,
    #[serde(default = "default_spread")]
    spread_limit: f64,
}

fn default_rhs2() -> Field {
    Field::ClippedAffine {
        c0: 1.0,
        c: [1.0, 0.0],
        floor: 0.0,
    }
}

fn default_rho() -> f64 {
    0.5
}

fn default_r_max() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    2.0
}

fn run_bhp(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: BhpParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let s = k.s();
    let alpha = p.alpha.unwrap_or(s / 2.0);
    let grid = p.grid.build()?;
    let u1 = solve_problem(&k, &p.domain, p.rhs1, Field::zero(), grid)?.u;
    let u2 = solve_problem(&k, &p.domain, p.rhs2, Field::zero(), grid)?.u;
    let q = harnack_quotient(&u2, &u1, &p.domain, alpha, p.center, p.rho)?;
    report.criteria.push(Criterion::flag("quotient_seminorm_finite", q.seminorm.is_finite()));
    let g = comparison_g(&k, &p.domain, grid)?;
    let e = expansion_check(&u1, &g, p.z, s, alpha, p.r_max)?;
    report.criteria.push(Criterion::at_most("expansion_spread", e.top_three_spread, p.spread_limit));
    report.details = json!({"quotient": q, "expansion": e});
    let csv = io::csv(&["r", "c_r"], e.radii.iter().map(|(r, c)| vec![*r, *c]));
    let svg = io::line_plot(
        "expansion remainder",
        "r",
        "sup |u - q g| / r^(s+alpha)",
        &[Series::new("C_r", e.radii.clone())],
        Axes { log_x: true, log_y: true },
    );
    Ok((csv, Some(svg)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct McParams {
    r: f64,
    x: Vec<f64>,
    paths: usize,
    seed: u64,
    delta: Option<f64>,
    dt: f64,
    horizon: f64,
    /// Compare with a torsion solve at this spacing (3 CI half-widths).
    compare_h: Option<f64>,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            r: 1.0,
            x: vec![0.5],
            paths: 10_000,
            seed: 0,
            delta: None,
            dt: 1e-4,
            horizon: 100.0,
            compare_h: None,
        }
    }
}

fn run_mc(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: McParams = sc.params()?;
    let (_, k) = sc.kernel()?;
    let cfg = PathConfig {
        delta: p.delta.unwrap_or(p.r / 512.0),
        dt: p.dt,
        paths: p.paths,
        seed: p.seed,
        horizon: p.horizon,
    };
    let prof = exit_time_profile(&k, p.r, &p.x, &cfg)?;
    let unfinished = prof.rows.iter().map(|e| e.unfinished).max().unwrap_or(0);
    report.criteria.push(Criterion::at_most("unfinished_fraction", unfinished as f64 / p.paths as f64, 0.01));
    if let Some(h) = p.compare_h {
        let t = torsion(&k, p.r, h)?;
        let z = prof
            .rows
            .iter()
            .filter(|e| e.ci_halfwidth > 0.0)
            .map(|e| (e.mean - t.u.value_at([e.x, 0.0])).abs() / e.ci_halfwidth)
            .fold(0.0, f64::max);
        report.criteria.push(Criterion::at_most("torsion_gap_in_ci", z, 3.0));
    }
    report.details = json!({"profile": prof});
    Ok((prof.to_csv(), None))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiniParams {
    modulus: Modulus,
    s: f64,
    #[serde(default = "default_upper")]
    r: f64,
    #[serde(default)]
    expect_finite: Option<bool>,
    #[serde(default)]
    expected_value: Option<f64>,
    #[serde(default = "default_dini_tol")]
    tol: f64,
}

fn default_upper() -> f64 {
    1.0
}

fn default_dini_tol() -> f64 {
    1e-6
}

fn run_dini(sc: &Scenario, report: &mut Report) -> Result<(String, Option<String>)> {
    let p: DiniParams = sc.params()?;
    let d = dini_integral_below(&p.modulus, p.s, p.r)?;
    if let Some(f) = p.expect_finite {
        report.criteria.push(Criterion::flag("finiteness_matches", d.finite == f));
    }
    if let Some(v) = p.expected_value {
        report.criteria.push(Criterion::at_most("value_rel_error", (d.value - v).abs() / v.abs(), p.tol));
    }
    report.details = json!({"dini": d});
    let rows = d.blocks.iter().enumerate().map(|(k, b)| vec![k as f64, *b]);
    Ok((io::csv(&["block", "integral"], rows), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_and_unknown_inputs_are_schema_errors() {
        let bad = Scenario::parse("{\"name\": \"x\", \"experiment\": ", None).unwrap_err();
        assert_eq!(bad.exit_code(), 2);
        let tag = Scenario::parse(r#"{"name":"x","experiment":"plot"}"#, None).unwrap_err();
        assert!(tag.to_string().contains("experiment"));
        let field = Scenario::parse(r#"{"name":"x","experiment":"dini","params":{"modulus":{"family":"zero"},"s":0.5,"bogus":1}}"#, None)
            .unwrap_err();
        assert!(field.to_string().contains("bogus"), "{field}");
    }

    #[test]
    fn mc_with_few_paths_is_rejected_before_running() {
        let text = r#"{"name":"m","experiment":"mc","kernel":{"dimension":1,"s":0.5,"family":"stable"},"params":{"paths":10}}"#;
        let e = Scenario::parse(text, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("100"));
    }

    #[test]
    fn dini_scenario_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{"name":"d","experiment":"dini","params":{"modulus":{"family":"power","alpha":0.5},"s":0.5,"expect_finite":true,"expected_value":4.0}}"#;
        let sc = Scenario::parse(text, None).unwrap();
        let out = run(&sc, dir.path()).unwrap();
        assert!(out.report.passed(), "{:?}", out.report.criteria);
        let back: Report = serde_json::from_str(&std::fs::read_to_string(out.dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(back.schema_version, io::SCHEMA_VERSION);
        assert!(out.dir.join("results.csv").exists());
    }

    #[test]
    fn grid_spec_matches_spacing_on_both_axes() {
        let g = GridSpec {
            lo: vec![-1.0, -0.1],
            hi: vec![1.0, 1.9],
            cells: 64,
        }
        .build()
        .unwrap();
        assert_eq!(g.n, [65, 65]);
        assert!(GridSpec {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 0.33],
            cells: 10,
        }
        .build()
        .is_err());
    }
}
