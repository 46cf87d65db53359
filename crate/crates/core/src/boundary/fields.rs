//! Analysis of solved fields near the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{LevyKernel, Point};
use crate::quadrature::{integrate, integrate_tail, GaussRule, Tol};
use crate::solver::special::ols;
use crate::solver::{Domain, Grid, GridFunction};

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy)]
pub struct DecayOptions {
    /// Boundary points are taken within `radius` of `center`.
    pub center: Point,
    pub radius: f64,
    pub boundary_points: usize,
    /// Fit window `[layers h, diam / 8]` in distance to the boundary.
    pub layers: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            center: [0.0, 0.0],
            radius: 0.3,
            boundary_points: 24,
            layers: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalFit {
    pub z: Point,
    pub normal: Point,
    pub slope: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub s_hat: f64,
    pub c_hat: f64,
    pub window: (f64, f64),
    pub normals: Vec<NormalFit>,
}

/// Minimum number of samples per normal in `decay_fit`.
pub const MIN_NORMAL_SAMPLES: usize = 5;

/// Pooled regression of `ln |u|` on `ln d_Omega` over nodes lying within one
/// cell of inward normals at boundary points, restricted to
/// `d_Omega in [layers h, diam / 8]`. Nodes are used directly, so exact
/// powers of the distance are recovered exactly.
pub fn decay_fit(u: &GridFunction, domain: &Domain, opts: DecayOptions) -> Result<DecayFit> {
    let g = &u.grid;
    let h = g.h;
    let lo = opts.layers * h;
    let hi = domain.diameter() / 8.0;
    if hi <= lo {
        return Err(Error::Scan(format!("fit window [{lo:.4}, {hi:.4}] is empty; refine the grid")));
    }
    let samples = if g.dim == 1 {
        domain.boundary_samples(2, opts.center, f64::INFINITY)
    } else {
        domain.boundary_samples(opts.boundary_points, opts.center, opts.radius)
    };
    let min_normals = if g.dim == 1 { 1 } else { 8 };
    if samples.len() < min_normals {
        return Err(Error::Scan(format!("only {} boundary points in the scan region", samples.len())));
    }
    let mut pooled = Vec::new();
    let mut normals = Vec::new();
    for b in &samples {
        let mut pts = Vec::new();
        for k in 0..g.len() {
            let x = g.coord(k);
            let rel = [x[0] - b.z[0], x[1] - b.z[1]];
            let along = rel[0] * b.normal[0] + rel[1] * b.normal[1];
            let across = (rel[0] * b.normal[1] - rel[1] * b.normal[0]).abs();
            if along <= 0.0 || across > h * (1.0 + 1e-9) || along > 2.0 * hi {
                continue;
            }
            let d = domain.dist_to_boundary(x);
            let v = u.values[k].abs();
            if d >= lo - 1e-12 && d <= hi + 1e-12 && v > 0.0 {
                pts.push((d.ln(), v.ln()));
            }
        }
        if pts.len() < MIN_NORMAL_SAMPLES {
            return Err(Error::Scan(format!(
                "normal at ({:.4}, {:.4}) has {} usable samples, need {MIN_NORMAL_SAMPLES}",
                b.z[0],
                b.z[1],
                pts.len()
            )));
        }
        normals.push(NormalFit {
            z: b.z,
            normal: b.normal,
            slope: ols(&pts).0,
            samples: pts.len(),
        });
        pooled.extend(pts);
    }
    let (slope, intercept) = ols(&pooled);
    Ok(DecayFit {
        s_hat: slope,
        c_hat: intercept.exp(),
        window: (lo, hi),
        normals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfRatio {
    pub c_hat: f64,
    pub argmin: Option<Point>,
    pub nodes: usize,
    /// Set when the field vanishes on the whole band.
    pub degenerate: bool,
}

/// `min u / d_Omega^s` over interior nodes in `B_r0(center)` with
/// `d_Omega in [4h, r0/4]`.
pub fn hopf_ratio(u: &GridFunction, domain: &Domain, s: f64, center: Point, r0: f64) -> Result<HopfRatio> {
    let h = u.grid.h;
    let (lo, hi) = (4.0 * h, r0 / 4.0);
    let mut best = f64::INFINITY;
    let mut arg = None;
    let mut nodes = 0;
    for (x, v) in u.interior_nodes() {
        if dist(x, center) > r0 {
            continue;
        }
        let d = domain.dist_to_boundary(x);
        if d < lo - 1e-12 || d > hi + 1e-12 {
            continue;
        }
        if v < 0.0 {
            return Err(Error::Scan(format!("u = {v:e} < 0 at ({:.4}, {:.4}); the Hopf ratio needs u >= 0", x[0], x[1])));
        }
        nodes += 1;
        let r = v / d.powf(s);
        if r < best {
            best = r;
            arg = Some(x);
        }
    }
    if nodes == 0 {
        return Err(Error::Scan(format!("no nodes with distance in [{lo:.4}, {hi:.4}]")));
    }
    Ok(HopfRatio {
        c_hat: best,
        argmin: arg,
        nodes,
        degenerate: best == 0.0,
    })
}

/// Node sets with this many members or fewer use all pairs in Hölder scans.
pub const ALL_PAIRS_LIMIT: usize = 2000;
const DISTANCE_BINS: usize = 16;
const PAIRS_PER_BIN: usize = 20_000;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HolderReport {
    pub seminorm: f64,
    pub pairs: usize,
    pub argmax: Option<(Point, Point)>,
}

/// `sup |v(x) - v(y)| / |x - y|^alpha` over masked node pairs with
/// `|x - y| >= 2h`. Small sets use every pair; larger ones draw seeded
/// samples stratified into log-distance bins.
pub fn holder_on_grid(grid: &Grid, values: &[f64], mask: &[bool], alpha: f64, seed: u64) -> HolderReport {
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| mask[k]).collect();
    let h = grid.h;
    let min_sep = 2.0 * h * (1.0 - 1e-12);
    let pair = |a: usize, b: usize| -> Option<f64> {
        let (x, y) = (grid.coord(a), grid.coord(b));
        let d = dist(x, y);
        (d >= min_sep).then(|| (values[a] - values[b]).abs() / d.powf(alpha))
    };
    let mut best = 0.0;
    let mut arg = None;
    let mut count = 0;
    if nodes.len() <= ALL_PAIRS_LIMIT {
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                if let Some(q) = pair(a, b) {
                    count += 1;
                    if q > best {
                        best = q;
                        arg = Some((a, b));
                    }
                }
            }
        }
    } else {
        let (lo, hi) = grid.node_rect();
        let dmax = dist(lo, hi).max(2.0 * h * 1.01);
        let ratio = (dmax / (2.0 * h)).powf(1.0 / DISTANCE_BINS as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for bin in 0..DISTANCE_BINS {
            let r0 = 2.0 * h * ratio.powi(bin as i32);
            for _ in 0..PAIRS_PER_BIN {
                let a = nodes[rng.random_range(0..nodes.len())];
                let r = r0 * ratio.powf(rng.random::<f64>());
                let (i, j) = grid.ij(a);
                let (di, dj) = if grid.dim == 1 {
                    let sgn = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    ((sgn * r / h).round() as isize, 0)
                } else {
                    let phi = rng.random::<f64>() * std::f64::consts::TAU;
                    ((r * phi.cos() / h).round() as isize, (r * phi.sin() / h).round() as isize)
                };
                let (ti, tj) = (i as isize + di, j as isize + dj);
                if ti < 0 || tj < 0 || ti as usize >= grid.n[0] || tj as usize >= grid.n[1] {
                    continue;
                }
                let b = grid.index(ti as usize, tj as usize);
                if !mask[b] {
                    continue;
                }
                if let Some(q) = pair(a, b) {
                    count += 1;
                    if q > best {
                        best = q;
                        arg = Some((a, b));
                    }
                }
            }
        }
    }
    HolderReport {
        seminorm: best,
        pairs: count,
        argmax: arg.map(|(a, b)| (grid.coord(a), grid.coord(b))),
    }
}

/// Hölder seminorm of `u` over nodes where `region` holds.
pub fn holder_seminorm<F: Fn(Point) -> bool>(u: &GridFunction, alpha: f64, region: F) -> HolderReport {
    let g = &u.grid;
    let mask: Vec<bool> = (0..g.len()).map(|k| region(g.coord(k))).collect();
    holder_on_grid(g, &u.values, &mask, alpha, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub seminorm: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub nodes: usize,
    pub pairs: usize,
}

/// Hölder seminorm of `u1 / u2` over interior nodes in `B_radius(center)`
/// at distance at least `2h` from the boundary.
pub fn harnack_quotient(
    u1: &GridFunction,
    u2: &GridFunction,
    domain: &Domain,
    alpha: f64,
    center: Point,
    radius: f64,
) -> Result<HarnackReport> {
    if u1.grid != u2.grid {
        return Err(Error::Parameter("quotient needs both fields on the same grid".into()));
    }
    let g = &u1.grid;
    let h = g.h;
    let mut q = vec![0.0; g.len()];
    let mut mask = vec![false; g.len()];
    let (mut qmin, mut qmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut nodes = 0;
    for k in 0..g.len() {
        let x = g.coord(k);
        if !u1.interior[k] || dist(x, center) > radius || domain.dist_to_boundary(x) < 2.0 * h * (1.0 - 1e-12) {
            continue;
        }
        let den = u2.values[k];
        if !(den > 1e-300) {
            return Err(Error::Division(vec![x[0], x[1]]));
        }
        q[k] = u1.values[k] / den;
        qmin = qmin.min(q[k]);
        qmax = qmax.max(q[k]);
        mask[k] = true;
        nodes += 1;
    }
    if nodes < 2 {
        return Err(Error::Scan("fewer than two nodes in the quotient region".into()));
    }
    let rep = holder_on_grid(g, &q, &mask, alpha, 0);
    Ok(HarnackReport {
        seminorm: rep.seminorm,
        q_min: qmin,
        q_max: qmax,
        nodes,
        pairs: rep.pairs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub q_z: f64,
    pub c_hat: f64,
    /// `(r, sup_{B_r(z)} |u - q g| / r^{s + alpha})`.
    pub radii: Vec<(f64, f64)>,
    /// Max over min of the constants on the three largest radii.
    pub top_three_spread: f64,
}

/// Fits `u ≈ q_z g` near the boundary point `z` by least squares on the
/// smallest dyadic ball `B_r(z)`, `r = 2^-j >= 8h`, and measures the
/// remainder on the dyadic balls up to `r_max`.
pub fn expansion_check(
    u: &GridFunction,
    g: &GridFunction,
    z: Point,
    s: f64,
    alpha: f64,
    r_max: f64,
) -> Result<ExpansionReport> {
    if u.grid != g.grid {
        return Err(Error::Parameter("expansion needs both fields on the same grid".into()));
    }
    let grid = &u.grid;
    let mut r = 2f64.powi((8.0 * grid.h).log2().ceil() as i32);
    let r_min = r;
    let mut radii = Vec::new();
    while r <= r_max * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    if radii.is_empty() {
        return Err(Error::Scan(format!("no dyadic radius in [8h, {r_max}]")));
    }
    let in_ball = |k: usize, r: f64| u.interior[k] && dist(grid.coord(k), z) <= r;
    let (mut ug, mut gg) = (0.0, 0.0);
    for k in 0..grid.len() {
        if in_ball(k, r_min) {
            ug += u.values[k] * g.values[k];
            gg += g.values[k] * g.values[k];
        }
    }
    let g_scale = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(gg > 1e-24 * g_scale * g_scale) || gg == 0.0 {
        return Err(Error::Fit(format!("comparison function vanishes on B_{r_min:.4}(z)")));
    }
    let q = ug / gg;
    let mut out = Vec::new();
    for &r in &radii {
        let mut sup: f64 = 0.0;
        for k in 0..grid.len() {
            if in_ball(k, r) {
                sup = sup.max((u.values[k] - q * g.values[k]).abs());
            }
        }
        out.push((r, sup / r.powf(s + alpha)));
    }
    let c_hat = out.iter().map(|p| p.1).fold(0.0, f64::max);
    let top: Vec<f64> = out.iter().rev().take(3).map(|p| p.1).collect();
    let spread = if top.len() == 3 {
        let mx = top.iter().cloned().fold(0.0, f64::max);
        let mn = top.iter().cloned().fold(f64::INFINITY, f64::min);
        if mn > 0.0 {
            mx / mn
        } else {
            f64::INFINITY
        }
    } else {
        f64::NAN
    };
    Ok(ExpansionReport {
        q_z: q,
        c_hat,
        radii: out,
        top_three_spread: spread,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub value: f64,
    pub argmax: Point,
    pub points: usize,
}

const TAIL_ANGLES: usize = 64;
const TAIL_POINTS: usize = 16;

/// `sup_{x in B_r(c)} int_{|y - c| >= R} |u(y)| K(y - x) dy` over up to 16
/// grid nodes of `B_r(c)`, using grid values inside the box and the
/// exterior closure beyond it.
pub fn tail_supremum(u: &GridFunction, k: &LevyKernel, center: Point, r_inner: f64, r_outer: f64) -> Result<TailReport> {
    let s = k.s();
    let (gg, gamma) = u.exterior.growth();
    if gg > 0.0 && gamma >= 2.0 * s {
        return Err(Error::DivergentTail(format!(
            "closure grows like |x|^{gamma}, not integrable against a kernel of order 2s = {}",
            2.0 * s
        )));
    }
    if r_inner >= r_outer {
        return Err(Error::Parameter("inner radius must be below the outer radius".into()));
    }
    let grid = &u.grid;
    let mut pts: Vec<Point> = (0..grid.len())
        .map(|i| grid.coord(i))
        .filter(|&x| dist(x, center) <= r_inner)
        .collect();
    if pts.is_empty() {
        pts.push(center);
    }
    if pts.len() > TAIL_POINTS {
        // Farthest nodes from the center first, then an even spread.
        pts.sort_by(|a, b| dist(*b, center).partial_cmp(&dist(*a, center)).unwrap());
        let stride = pts.len() / TAIL_POINTS;
        pts = pts.iter().step_by(stride.max(1)).take(TAIL_POINTS).copied().collect();
    }
    let (blo, bhi) = grid.node_rect();
    let env = k.envelope();
    let vals: Result<Vec<f64>> = pts
        .par_iter()
        .map(|&x| {
            let xn = dist(x, [0.0, 0.0]) + dist(center, [0.0, 0.0]);
            let mut total = 0.0;
            for a in k.atoms() {
                let y = [x[0] + a.loc[0], x[1] + a.loc[1]];
                if dist(y, center) >= r_outer {
                    total += a.mass * u.value_at(y).abs();
                }
            }
            let Some(d) = k.density() else {
                return Ok(total);
            };
            let ray = |e: Point| -> Result<f64> {
                let f = |t: f64| {
                    let y = [center[0] + t * e[0], center[1] + t * e[1]];
                    let jac = if grid.dim == 2 { t } else { 1.0 };
                    u.value_at(y).abs() * d.eval([y[0] - x[0], y[1] - x[1]]) * jac
                };
                // Leave the grid box before switching to the tail integrator.
                let mut exit = f64::INFINITY;
                for ax in 0..grid.dim {
                    if e[ax] > 0.0 {
                        exit = exit.min((bhi[ax] - center[ax]) / e[ax]);
                    } else if e[ax] < 0.0 {
                        exit = exit.min((blo[ax] - center[ax]) / e[ax]);
                    }
                }
                let mut acc = 0.0;
                let mut start = r_outer;
                if exit > r_outer {
                    acc += integrate(f, r_outer, exit, &[], Tol::new(1e-14, 1e-9), "tail inside box")?.value;
                    start = exit;
                }
                // For |y - c| = t >= t0: |y - x| >= t / 2 and 1 + |y| <= 2t.
                let t0 = 2.0 * (1.0 + xn);
                let dim = grid.dim as f64;
                acc += integrate_tail(
                    f,
                    start,
                    |t| {
                        if gg == 0.0 {
                            0.0
                        } else if t >= t0 {
                            gg * 2f64.powf(gamma + dim + 2.0 * s) * env * t.powf(gamma - 2.0 * s) / (2.0 * s - gamma)
                        } else {
                            f64::INFINITY
                        }
                    },
                    k.tail_cutoff,
                    Tol::new(1e-14, 1e-9),
                    "tail beyond box",
                )?
                .value;
                Ok(acc)
            };
            if grid.dim == 1 {
                total += ray([1.0, 0.0])? + ray([-1.0, 0.0])?;
            } else {
                let rule = GaussRule::new(TAIL_ANGLES);
                let half = std::f64::consts::PI;
                for (t, w) in rule.x.iter().zip(&rule.w) {
                    let phi = half * (1.0 + t);
                    total += w * half * ray([phi.cos(), phi.sin()])?;
                }
            }
            Ok(total)
        })
        .collect();
    let vals = vals?;
    let (i, v) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(TailReport {
        value: v,
        argmax: pts[i],
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::stable;
    use crate::solver::Field;

    fn synthetic(grid: Grid, domain: &Domain, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = (0..grid.len()).map(|k| f(domain.dist_to_boundary(grid.coord(k)))).collect();
        let interior = (0..grid.len()).map(|k| domain.contains(grid.coord(k))).collect();
        GridFunction {
            grid,
            values,
            interior,
            exterior: Field::zero(),
        }
    }

    fn epigraph() -> Domain {
        Domain::EpigraphBall {
            coeff: 1.0,
            exponent: 1.5,
            radius: 0.95,
            lift: 0.0,
            left_coeff: None,
        }
    }

    #[test]
    fn decay_fit_recovers_exact_powers() {
        let g = Grid::square(-1.0, 1.0, 64).unwrap();
        let d = epigraph();
        for beta in [0.5, 1.0, 1.3] {
            let u = synthetic(g, &d, |t| 2.0 * t.powf(beta));
            let f = decay_fit(&u, &d, DecayOptions::default()).unwrap();
            assert!((f.s_hat - beta).abs() < 1e-6, "beta {beta}: {}", f.s_hat);
            assert!((f.c_hat - 2.0).abs() < 1e-5);
            assert!(f.normals.len() >= 8 && f.normals.iter().all(|n| n.samples >= MIN_NORMAL_SAMPLES));
        }
    }

    #[test]
    fn holder_of_power_is_one() {
        let g = Grid::interval(-0.5, 1.0, 300).unwrap();
        let s = 0.4;
        let values = (0..g.len()).map(|k| g.coord(k)[0].max(0.0).powf(s)).collect();
        let u = GridFunction {
            grid: g,
            values,
            interior: vec![true; g.len()],
            exterior: Field::zero(),
        };
        let r = holder_seminorm(&u, s, |x| x[0] >= -1e-12);
        assert!((r.seminorm - 1.0).abs() < 1e-6, "{}", r.seminorm);
        let c = holder_seminorm(&u.scaled(0.0), s, |_| true);
        assert_eq!(c.seminorm, 0.0);
    }

    #[test]
    fn quotient_of_multiples_is_constant() {
        let g = Grid::square(-1.0, 1.0, 40).unwrap();
        let d = epigraph();
        let u2 = synthetic(g, &d, |t| t.sqrt());
        let u1 = u2.scaled(2.0);
        let r = harnack_quotient(&u1, &u2, &d, 0.25, [0.0, 0.3], 0.5).unwrap();
        assert!(r.seminorm < 1e-12 && (r.q_min - 2.0).abs() < 1e-12 && (r.q_max - 2.0).abs() < 1e-12);
        let zero = u2.scaled(0.0);
        assert!(matches!(harnack_quotient(&u1, &zero, &d, 0.25, [0.0, 0.3], 0.5), Err(Error::Division(_))));
    }

    #[test]
    fn expansion_of_comparison_function_itself() {
        let g = Grid::square(-1.0, 1.0, 64).unwrap();
        let d = epigraph();
        let gf = synthetic(g, &d, |t| t.sqrt());
        let e = expansion_check(&gf, &gf, [0.0, 0.0], 0.5, 0.25, 0.9).unwrap();
        assert!((e.q_z - 1.0).abs() < 1e-12 && e.c_hat < 1e-12);
    }

    #[test]
    fn tail_of_constant_field_is_the_kernel_tail_mass() {
        let k = stable(2, 0.5, 1.0).unwrap();
        let g = Grid::square(-3.0, 3.0, 13).unwrap();
        let u = GridFunction {
            grid: g,
            values: vec![1.0; g.len()],
            interior: vec![false; g.len()],
            exterior: Field::Const { value: 1.0 },
        };
        let r = tail_supremum(&u, &k, [0.0, 0.0], 0.0, 2.0).unwrap();
        let exact = k.tail_mass(2.0).unwrap();
        assert!((r.value - exact).abs() < 1e-3 * exact, "{} vs {exact}", r.value);
    }
}
