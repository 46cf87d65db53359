//! Named solutions: torsion functions, interval and half-line barriers,
//! capacitary functions, the boundary comparison function and the
//! half-space consistency check.

use serde::Serialize;

use super::{solve, Domain, Field, Grid, GridFunction, Problem, SolveReport};
use crate::error::{Error, Result};
use crate::kernels::{project_to_direction, LevyKernel, Point};

/// Range of `value / reference` over a scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundScan {
    pub lower: f64,
    pub upper: f64,
    /// Smallest `C` with all ratios in `[1/C, C]`.
    pub constant: f64,
    pub samples: usize,
}

impl BoundScan {
    pub fn from_ratios<I: IntoIterator<Item = f64>>(ratios: I) -> BoundScan {
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        let mut samples = 0;
        for r in ratios {
            lower = lower.min(r);
            upper = upper.max(r);
            samples += 1;
        }
        let constant = if lower > 0.0 { upper.max(1.0 / lower) } else { f64::INFINITY };
        BoundScan {
            lower,
            upper,
            constant,
            samples,
        }
    }
}

/// Grid with nodes `-h, 0, h, ..., L + h` for problems posed on `(0, L)`.
fn padded_line(len: f64, h: f64) -> Result<Grid> {
    let cells = (len / h).round();
    if (cells * h - len).abs() > 1e-9 * len {
        return Err(Error::Parameter(format!("spacing {h} does not divide the length {len}")));
    }
    Grid::line(-h, h, cells as usize + 3)
}

fn require_dim(k: &LevyKernel, d: usize) -> Result<()> {
    if k.dim() != d {
        return Err(Error::Parameter(format!("expected a {d}-dimensional kernel, got dimension {}", k.dim())));
    }
    Ok(())
}

/// Values at `x = 0, h, 2h, ...` of a function on a padded line grid.
pub fn samples_from_zero(u: &GridFunction) -> Vec<f64> {
    u.values[1..].to_vec()
}

#[derive(Debug, Clone)]
pub struct Torsion {
    pub r: f64,
    pub u: GridFunction,
    pub report: SolveReport,
    /// `u / (R^s (x ∧ (R - x))^s)` over the unknowns.
    pub scan: BoundScan,
}

/// `L u = 1` in `(0, R)`, `u = 0` outside.
pub fn torsion(k: &LevyKernel, r: f64, h: f64) -> Result<Torsion> {
    require_dim(k, 1)?;
    if r / h < 128.0 - 1e-9 {
        return Err(Error::Parameter(format!("torsion needs R/h >= 128, got {}", r / h)));
    }
    let grid = padded_line(r, h)?;
    let p = Problem::new(
        k.clone(),
        Domain::Interval { a: 0.0, b: r },
        Field::Const { value: 1.0 },
        Field::zero(),
        grid,
    )?;
    let sol = solve(&p)?;
    let s = k.s();
    let scan = BoundScan::from_ratios(
        sol.u
            .interior_nodes()
            .map(|(x, v)| v / (r.powf(s) * x[0].min(r - x[0]).powf(s))),
    );
    Ok(Torsion {
        r,
        u: sol.u,
        report: sol.report,
        scan,
    })
}

#[derive(Debug, Clone)]
pub struct IntervalSolution {
    pub u: GridFunction,
    pub report: SolveReport,
    /// Largest decrease between adjacent nodes (zero when nondecreasing).
    pub monotone_defect: f64,
    /// `u / x^s` over the unknowns.
    pub scan: BoundScan,
}

/// `L b = 0` in `(0, 1)`, `b = 1` on `[1, inf)`, `b = 0` on `(-inf, 0]`.
pub fn interval_solution_b1(k: &LevyKernel, h: f64) -> Result<IntervalSolution> {
    require_dim(k, 1)?;
    if h > 1.0 / 256.0 + 1e-15 {
        return Err(Error::Parameter(format!("interval solution needs h <= 1/256, got {h}")));
    }
    let grid = padded_line(1.0, h)?;
    let p = Problem::new(
        k.clone(),
        Domain::Interval { a: 0.0, b: 1.0 },
        Field::zero(),
        Field::Step {
            direction: [1.0, 0.0],
            threshold: 1.0,
            value: 1.0,
        },
        grid,
    )?;
    let sol = solve(&p)?;
    let s = k.s();
    let v = &sol.u.values;
    let monotone_defect = v.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    let scan = BoundScan::from_ratios(sol.u.interior_nodes().map(|(x, u)| u / x[0].powf(s)));
    Ok(IntervalSolution {
        u: sol.u,
        report: sol.report,
        monotone_defect,
        scan,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierStage {
    pub r: f64,
    /// Unnormalized `b_R(1)`.
    pub value_at_one: f64,
    /// Weighted sup distance to the previous stage after normalization.
    pub drift: Option<f64>,
    pub unknowns: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Barrier {
    pub s: f64,
    pub h: f64,
    /// Largest-R solution normalized to `b(1) = 1`.
    pub b: GridFunction,
    pub stages: Vec<BarrierStage>,
    /// Stages were compared on `[0, compared]`, `compared = R_min / 4`.
    pub compared: f64,
    /// Profile length `R_max / 4` exposed by `samples`.
    pub reach: f64,
}

/// Relative drift above which the exhaustion sequence is rejected.
pub const BARRIER_DRIFT_LIMIT: f64 = 0.05;

impl Barrier {
    /// Normalized values at `t = 0, h, 2h, ...` up to `reach`.
    pub fn samples(&self) -> Vec<f64> {
        let n = (self.reach / self.h).floor() as usize;
        samples_from_zero(&self.b)[..=n].to_vec()
    }

    /// Least-squares slope of `ln b` against `ln t` on node points in `[a, c]`.
    pub fn loglog_slope(&self, a: f64, c: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .samples()
            .iter()
            .enumerate()
            .map(|(j, &v)| (j as f64 * self.h, v))
            .filter(|&(t, v)| t >= a - 1e-12 && t <= c + 1e-12 && v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::Fit(format!("only {} points in [{a}, {c}]", pts.len())));
        }
        Ok(ols(&pts).0)
    }

    /// `b(t) / t^s` over node points in `(h, upper)`.
    pub fn ratio_scan(&self, upper: f64) -> BoundScan {
        let s = self.s;
        let h = self.h;
        BoundScan::from_ratios(
            self.samples()
                .iter()
                .enumerate()
                .map(|(j, &v)| (j as f64 * h, v))
                .filter(|&(t, _)| t > h * 1.5 && t < upper)
                .map(|(t, v)| v / t.powf(s)),
        )
    }

    /// Exterior closure `b(x.theta)` for two-dimensional problems: the
    /// trusted profile continued by `c t^s` matched at its end.
    pub fn closure(&self, theta: Point) -> Field {
        let values = self.samples();
        let t_end = (values.len() - 1) as f64 * self.h;
        let tail_scale = values[values.len() - 1] / t_end.powf(self.s);
        Field::Profile {
            direction: theta,
            spacing: self.h,
            values,
            tail_scale,
            exponent: self.s,
        }
    }
}

/// Ordinary least squares `y = a x + b`, returning `(a, b)`.
pub(crate) fn ols(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Half-line barrier by exhaustion: `L b_R = 0` in `(0, R)` with
/// `b_R = R^s 1_{(R, inf)}` outside, for each `R` in `r_list`.
pub fn halfline_barrier(k: &LevyKernel, r_list: &[f64], h: f64) -> Result<Barrier> {
    require_dim(k, 1)?;
    if r_list.len() < 3 {
        return Err(Error::Parameter("barrier needs at least three values of R".into()));
    }
    if r_list.windows(2).any(|w| w[1] < 2.0 * w[0] * (1.0 - 1e-12)) {
        return Err(Error::Parameter("consecutive values of R must grow by a factor >= 2".into()));
    }
    if r_list[0] < 4.0 {
        return Err(Error::Parameter("the smallest R must be at least 4 so that [0, R/4] contains t = 1".into()));
    }
    let s = k.s();
    let compared = r_list[0] / 4.0;
    let weight = |t: f64| (1.0 + t).powf(-1.5 * s);
    let n_cmp = (compared / h).floor() as usize;
    let mut stages = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut last = None;
    for &r in r_list {
        let grid = padded_line(r, h)?;
        let p = Problem::new(
            k.clone(),
            Domain::Interval { a: 0.0, b: r },
            Field::zero(),
            Field::Step {
                direction: [1.0, 0.0],
                threshold: r,
                value: r.powf(s),
            },
            grid,
        )?;
        let sol = solve(&p)?;
        let b1 = sol.u.value_at([1.0, 0.0]);
        if !(b1 > 0.0) {
            return Err(Error::Scan(format!("barrier stage R = {r} has b(1) = {b1}")));
        }
        let u = sol.u.scaled(1.0 / b1);
        let head: Vec<f64> = samples_from_zero(&u)[..=n_cmp].to_vec();
        let drift = prev.as_ref().map(|p: &Vec<f64>| {
            let mut num: f64 = 0.0;
            let mut den: f64 = 0.0;
            for (j, (a, b)) in head.iter().zip(p).enumerate() {
                let w = weight(j as f64 * h);
                num = num.max((a - b).abs() * w);
                den = den.max(a.abs() * w);
            }
            num / den
        });
        stages.push(BarrierStage {
            r,
            value_at_one: b1,
            drift,
            unknowns: sol.report.unknowns,
            iterations: sol.report.iterations,
        });
        prev = Some(head);
        last = Some(u);
    }
    let drift = stages.last().and_then(|st| st.drift).unwrap_or(0.0);
    if drift > BARRIER_DRIFT_LIMIT {
        return Err(Error::NotCauchy {
            drift,
            limit: BARRIER_DRIFT_LIMIT,
        });
    }
    Ok(Barrier {
        s,
        h,
        b: last.expect("at least one stage"),
        stages,
        compared,
        reach: r_list[r_list.len() - 1] / 4.0,
    })
}

#[derive(Debug, Clone)]
pub struct Capacitary {
    pub r: f64,
    pub u: GridFunction,
    pub report: SolveReport,
    /// `Phi r^s / (x_d)^s` on the scan region.
    pub scan: BoundScan,
    pub min_value: f64,
    pub max_value: f64,
    /// Largest decrease between adjacent nodes along the scan line.
    pub monotone_defect: f64,
}

/// One-dimensional capacitary function: `L Phi = 0` in `(0, 2r)`,
/// `Phi = 1` on `[2r, inf)`, `Phi = 0` on `(-inf, 0]`.
pub fn capacitary_phi(k: &LevyKernel, r: f64, h: f64) -> Result<Capacitary> {
    require_dim(k, 1)?;
    if h > r / 64.0 * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("capacitary function needs h <= r/64, got h = {h}, r = {r}")));
    }
    let grid = padded_line(2.0 * r, h)?;
    let p = Problem::new(
        k.clone(),
        Domain::Interval { a: 0.0, b: 2.0 * r },
        Field::zero(),
        Field::Step {
            direction: [1.0, 0.0],
            threshold: 2.0 * r,
            value: 1.0,
        },
        grid,
    )?;
    let sol = solve(&p)?;
    let s = k.s();
    let scan = BoundScan::from_ratios(
        sol.u
            .interior_nodes()
            .filter(|(x, _)| x[0] > r / 64.0 && x[0] < r)
            .map(|(x, v)| v * r.powf(s) / x[0].powf(s)),
    );
    let v = &sol.u.values;
    Ok(Capacitary {
        r,
        scan,
        min_value: v.iter().cloned().fold(f64::INFINITY, f64::min),
        max_value: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        monotone_defect: v.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max),
        u: sol.u,
        report: sol.report,
    })
}

/// Two-dimensional capacitary function on `B_{2r} ∩ {x_2 > shift}` with
/// `Phi = 1` on `B_{2r}^c ∩ {x_2 > 0}` and zero on `{x_2 <= 0}`, solved on
/// an `n x n` grid over `[-2r - 2h, 2r + 2h]^2`.
pub fn capacitary_phi_2d(k: &LevyKernel, r: f64, shift: f64, n: usize) -> Result<Capacitary> {
    require_dim(k, 2)?;
    let half = 2.0 * r * (n as f64 - 1.0) / (n as f64 - 5.0);
    let grid = Grid::square(-half, half, n)?;
    let h = grid.h;
    if h > r / 64.0 * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "capacitary function needs h <= r/64; {n} nodes give h = {h}"
        )));
    }
    let two_r = 2.0 * r;
    let exterior = Field::custom(
        move |x: Point| {
            if x[1] > 0.0 && x[0].hypot(x[1]) >= two_r {
                1.0
            } else {
                0.0
            }
        },
        (1.0, 0.0),
    );
    let p = Problem::new(
        k.clone(),
        Domain::HalfDisk { shift, radius: two_r },
        Field::zero(),
        exterior,
        grid,
    )?;
    let sol = solve(&p)?;
    let s = k.s();
    let scan = BoundScan::from_ratios(
        sol.u
            .interior_nodes()
            .filter(|(x, _)| x[0].abs() <= 0.5 * r && x[1] > r / 64.0 && x[1] < r)
            .map(|(x, v)| v * r.powf(s) / x[1].powf(s)),
    );
    let line: Vec<f64> = (0..grid.n[1])
        .map(|j| sol.u.values[grid.index(grid.n[0] / 2, j)])
        .collect();
    let v = &sol.u.values;
    Ok(Capacitary {
        r,
        scan,
        min_value: v.iter().cloned().fold(f64::INFINITY, f64::min),
        max_value: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        monotone_defect: line.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max),
        u: sol.u,
        report: sol.report,
    })
}

/// Center and radius of the ball bounding a two-dimensional domain.
fn bounding_ball(d: &Domain) -> Result<(Point, f64)> {
    match d {
        Domain::EpigraphBall { radius, lift, .. } => Ok(([0.0, *lift], *radius)),
        Domain::HalfDisk { radius, .. } => Ok(([0.0, 0.0], *radius)),
        Domain::Ball { center, radius } => Ok((*center, *radius)),
        _ => Err(Error::Parameter("comparison function needs a domain bounded by a ball".into())),
    }
}

/// Comparison function `L g = 0` in `Omega ∩ B_rho`, `g = 1` outside `B_rho`
/// and `g = 0` on the rest of the complement, where `rho` is the radius of
/// the ball bounding the domain.
pub fn comparison_g(k: &LevyKernel, domain: &Domain, grid: Grid) -> Result<GridFunction> {
    require_dim(k, 2)?;
    let (center, rho) = bounding_ball(domain)?;
    let p = Problem::new(
        k.clone(),
        domain.clone(),
        Field::zero(),
        Field::OutsideBall {
            center,
            radius: rho,
            value: 1.0,
        },
        grid,
    )?;
    Ok(solve(&p)?.u)
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceReport {
    pub theta: Point,
    /// `max |u - b(x.theta)| / b(x.theta)` over the inner region.
    pub max_relative_deviation: f64,
    pub max_abs_deviation: f64,
    /// Largest relative change of `u` under tangential shifts of a quarter
    /// box width within the inner region.
    pub tangential_defect: f64,
    pub nodes: usize,
}

/// Solves `L u = 0` on `{x.theta > 0}` inside the grid box with exterior
/// data `b(x.theta)` from the one-dimensional barrier of the projected
/// kernel, and compares `u` with `b(x.theta)` on the inner half of the box.
pub fn halfspace_consistency(k: &LevyKernel, b: &Barrier, theta: Point, grid: Grid) -> Result<HalfspaceReport> {
    require_dim(k, 2)?;
    let tn = theta[0].hypot(theta[1]);
    let theta = [theta[0] / tn, theta[1] / tn];
    let (lo, hi) = grid.node_rect();
    let h = grid.h;
    let domain = Domain::HalfPlaneBox {
        direction: theta,
        lo: [lo[0] + h, lo[1] + h],
        hi: [hi[0] - h, hi[1] - h],
    };
    let closure = b.closure(theta);
    let p = Problem::new(k.clone(), domain, Field::zero(), closure.clone(), grid)?;
    let u = solve(&p)?.u;
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let half = [0.25 * (hi[0] - lo[0]), 0.25 * (hi[1] - lo[1])];
    let inner = |x: Point| {
        (x[0] - center[0]).abs() <= half[0] + 1e-12
            && (x[1] - center[1]).abs() <= half[1] + 1e-12
            && x[0] * theta[0] + x[1] * theta[1] >= 4.0 * h - 1e-12
    };
    let tangent = [-theta[1], theta[0]];
    let shift = 0.5 * half[0].min(half[1]);
    let mut rel: f64 = 0.0;
    let mut abs: f64 = 0.0;
    let mut tang: f64 = 0.0;
    let mut nodes = 0;
    for (x, v) in u.interior_nodes() {
        if !inner(x) {
            continue;
        }
        nodes += 1;
        let reference = closure.eval(x);
        abs = abs.max((v - reference).abs());
        rel = rel.max((v - reference).abs() / reference);
        for sgn in [-1.0, 1.0] {
            let y = [x[0] + sgn * shift * tangent[0], x[1] + sgn * shift * tangent[1]];
            if inner(y) {
                tang = tang.max((u.value_at(y) - v).abs() / reference);
            }
        }
    }
    if nodes == 0 {
        return Err(Error::Scan("no grid nodes in the inner region".into()));
    }
    Ok(HalfspaceReport {
        theta,
        max_relative_deviation: rel,
        max_abs_deviation: abs,
        tangential_defect: tang,
        nodes,
    })
}

/// Barrier of the kernel projected onto `theta`, built at spacing `h`.
pub fn projected_barrier(k: &LevyKernel, theta: Point, r_list: &[f64], h: f64) -> Result<Barrier> {
    let k1 = project_to_direction(k, theta)?;
    halfline_barrier(&k1, r_list, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{lattice, stable_normalized};

    #[test]
    fn torsion_is_symmetric() {
        let k = lattice(1, 0.5, 1.0, -20, 20).unwrap();
        let t = torsion(&k, 1.0, 1.0 / 128.0).unwrap();
        let v = samples_from_zero(&t.u);
        let n = 128;
        for j in 0..=n {
            assert!((v[j] - v[n - j]).abs() < 1e-9 * v[n / 2]);
        }
        assert!(t.scan.lower > 0.0);
    }

    #[test]
    fn interval_solution_is_monotone_between_zero_and_one() {
        let k = stable_normalized(0.4).unwrap();
        let b = interval_solution_b1(&k, 1.0 / 256.0).unwrap();
        assert!(b.monotone_defect <= 1e-9);
        let v = &b.u.values;
        assert!(v.iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)));
        assert!(b.scan.constant < 10.0);
    }

    #[test]
    fn capacitary_function_bounds() {
        let k = stable_normalized(0.5).unwrap();
        let c = capacitary_phi(&k, 1.0, 1.0 / 64.0).unwrap();
        assert!(c.min_value >= -1e-9 && c.max_value <= 1.0 + 1e-9);
        assert!(c.monotone_defect <= 1e-9);
        assert!(c.scan.constant.is_finite());
    }

    #[test]
    fn short_barrier_list_is_rejected() {
        let k = stable_normalized(0.5).unwrap();
        assert!(halfline_barrier(&k, &[4.0, 8.0], 1.0 / 16.0).is_err());
        assert!(halfline_barrier(&k, &[4.0, 6.0, 12.0], 1.0 / 16.0).is_err());
    }

    #[test]
    fn stable_barrier_is_a_power() {
        let k = stable_normalized(0.5).unwrap();
        let b = halfline_barrier(&k, &[4.0, 8.0, 16.0], 1.0 / 64.0).unwrap();
        let slope = b.loglog_slope(1.0 / 16.0, 1.0).unwrap();
        assert!((slope - 0.5).abs() < 0.03, "slope {slope}");
    }
}
