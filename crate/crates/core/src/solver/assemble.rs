//! Discretization of `L u(x) = int (u(x) - u(x + y)) K(dy)` on a uniform grid.
//!
//! * `|y| < h`: second-order Taylor stencil carrying the second moment of `K`
//!   over the small ball.
//! * Inside the node box: the mass of each grid cell (minus the small ball)
//!   is attached to the cell's node, giving an offset-only weight table, so
//!   the matrix is symmetric and Toeplitz-structured.
//! * Atoms with `|a| >= h` are split (bi)linearly between the straddling nodes.
//! * Beyond the cell rectangle of the box the exterior data is integrated
//!   exactly against the kernel, node by node.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::field::Field;
use super::geometry::Domain;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::kernels::{LevyKernel, Moment, Point};
use crate::quadrature::{integrate, integrate_tail, GaussRule, Tol};

/// Cells within this Chebyshev offset of the origin use nested adaptive quadrature.
const NEAR_CELLS: isize = 3;
/// Gauss–Legendre points per angular segment of the far field.
const FAR_ANGULAR_POINTS: usize = 16;

/// A nonlocal Dirichlet problem `L u = f` in the domain, `u = g` outside.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: LevyKernel,
    pub domain: Domain,
    pub rhs: Field,
    pub exterior: Field,
    pub grid: Grid,
}

impl Problem {
    pub fn new(kernel: LevyKernel, domain: Domain, rhs: Field, exterior: Field, grid: Grid) -> Result<Problem> {
        if kernel.dim() != domain.dim() || grid.dim != domain.dim() {
            return Err(Error::Parameter("kernel, domain and grid dimensions differ".into()));
        }
        let (g, gamma) = exterior.growth();
        if g > 0.0 && gamma >= 2.0 * kernel.s() {
            return Err(Error::Parameter(format!(
                "exterior data grows like |x|^{gamma}, which is not integrable against the kernel (needs < {})",
                2.0 * kernel.s()
            )));
        }
        let (dlo, dhi) = domain.bbox();
        let (nlo, nhi) = grid.node_rect();
        let h = grid.h;
        let axes = grid.dim;
        for a in 0..axes {
            if dlo[a] < nlo[a] + h * (1.0 - 1e-9) || dhi[a] > nhi[a] - h * (1.0 - 1e-9) {
                return Err(Error::Parameter(format!(
                    "domain must lie at least one cell inside the grid box along axis {a}"
                )));
            }
        }
        let p = Problem {
            kernel,
            domain,
            rhs,
            exterior,
            grid,
        };
        if !(0..p.grid.len()).any(|k| p.domain.contains(p.grid.coord(k))) {
            return Err(Error::Parameter("the grid has no nodes inside the domain".into()));
        }
        Ok(p)
    }
}

/// Weights `W(p, q)` for node offsets `|p| <= mx`, `|q| <= my`.
#[derive(Debug, Clone)]
pub struct OffsetTable {
    pub mx: usize,
    pub my: usize,
    pub data: Vec<f64>,
}

impl OffsetTable {
    fn new(mx: usize, my: usize) -> Self {
        OffsetTable {
            mx,
            my,
            data: vec![0.0; (2 * mx + 1) * (2 * my + 1)],
        }
    }

    fn idx(&self, p: isize, q: isize) -> usize {
        ((q + self.my as isize) as usize) * (2 * self.mx + 1) + (p + self.mx as isize) as usize
    }

    pub fn in_range(&self, p: isize, q: isize) -> bool {
        p.unsigned_abs() <= self.mx && q.unsigned_abs() <= self.my
    }

    pub fn get(&self, p: isize, q: isize) -> f64 {
        self.data[self.idx(p, q)]
    }

    /// Adds `w` at `(p, q)` and `(-p, -q)` (once at the origin).
    fn add_pair(&mut self, p: isize, q: isize, w: f64) {
        let i = self.idx(p, q);
        self.data[i] += w;
        if p != 0 || q != 0 {
            let j = self.idx(-p, -q);
            self.data[j] += w;
        }
    }

    fn add(&mut self, p: isize, q: isize, w: f64) {
        let i = self.idx(p, q);
        self.data[i] += w;
    }
}

/// The assembled discrete operator restricted to the unknowns.
#[derive(Debug, Clone)]
pub struct Operator {
    pub grid: Grid,
    /// Node index of each unknown.
    pub nodes: Vec<usize>,
    /// Unknown index of each node, `usize::MAX` for fixed nodes.
    pub slot: Vec<usize>,
    pub table: OffsetTable,
    pub diag: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Exterior data at the fixed nodes (zero at unknowns).
    pub fixed_values: Vec<f64>,
    pub stats: AssemblyStats,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AssemblyStats {
    pub unknowns: usize,
    pub min_weight: f64,
    pub near_moment_11: f64,
    pub near_moment_12: f64,
    pub near_moment_22: f64,
}

impl Operator {
    /// `(A x)_k = diag_k x_k - sum_l W(node_l - node_k) x_l`, by direct summation.
    pub fn apply_direct(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        self.nodes
            .par_iter()
            .enumerate()
            .map(|(k, &nk)| {
                let (ik, jk) = g.ij(nk);
                let mut acc = self.diag[k] * x[k];
                for (l, &nl) in self.nodes.iter().enumerate() {
                    if l != k {
                        let (il, jl) = g.ij(nl);
                        acc -= self.table.get(il as isize - ik as isize, jl as isize - jk as isize) * x[l];
                    }
                }
                acc
            })
            .collect()
    }

    /// Dense symmetric matrix in row-major order.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let g = &self.grid;
        let mut a = vec![0.0; n * n];
        a.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let (ik, jk) = g.ij(self.nodes[k]);
            for (l, &nl) in self.nodes.iter().enumerate() {
                let (il, jl) = g.ij(nl);
                row[l] = if l == k {
                    self.diag[k]
                } else {
                    -self.table.get(il as isize - ik as isize, jl as isize - jk as isize)
                };
            }
        });
        a
    }
}

pub fn assemble(p: &Problem) -> Result<Operator> {
    let g = p.grid;
    let k = &p.kernel;
    let h = g.h;
    let dim = g.dim;

    let slot_nodes: Vec<usize> = (0..g.len()).filter(|&n| p.domain.contains(g.coord(n))).collect();
    let mut slot = vec![usize::MAX; g.len()];
    for (i, &n) in slot_nodes.iter().enumerate() {
        slot[n] = i;
    }

    let mx = g.n[0] - 1;
    let my = if dim == 2 { g.n[1] - 1 } else { 0 };
    let mut table = OffsetTable::new(mx, my);

    // Cells minus the small ball.
    fill_cells(k, h, &mut table)?;

    // Small-ball second moment: density part plus atoms inside the ball.
    let mut m = density_ball_moment(k, h)?;
    for a in k.atoms() {
        if a.radius() < h {
            m.m11 += a.mass * a.loc[0] * a.loc[0];
            m.m12 += a.mass * a.loc[0] * a.loc[1];
            m.m22 += a.mass * a.loc[1] * a.loc[1];
        }
    }
    let h2 = 2.0 * h * h;
    if dim == 1 {
        table.add_pair(1, 0, m.m11 / h2);
    } else {
        let c = m.m12.abs() / h2;
        table.add_pair(1, 0, (m.m11 - m.m12.abs()) / h2);
        table.add_pair(0, 1, (m.m22 - m.m12.abs()) / h2);
        if m.m12 >= 0.0 {
            table.add_pair(1, 1, c);
        } else {
            table.add_pair(1, -1, c);
        }
    }

    // Atoms outside the small ball, split between straddling nodes.
    let snapped = snap_atoms(k, h, dim);
    for &(off, w) in &snapped {
        if table.in_range(off[0], off[1]) {
            table.add(off[0], off[1], w);
        }
    }

    let min_weight = table.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_weight = table.data.iter().cloned().fold(0.0, f64::max);
    if min_weight < -1e-12 * max_weight {
        return Err(Error::Assembly(format!(
            "negative interaction weight {min_weight:e}; the small-ball cross moment {:e} exceeds a diagonal moment ({:e}, {:e})",
            m.m12, m.m11, m.m22
        )));
    }

    // Row sums over the box via a summed-area table of the weights.
    let sat = SummedArea::new(&table);

    let fixed_values: Vec<f64> = (0..g.len())
        .map(|n| if slot[n] == usize::MAX { p.exterior.eval(g.coord(n)) } else { 0.0 })
        .collect();
    let fixed_nonzero: Vec<usize> = (0..g.len())
        .filter(|&n| slot[n] == usize::MAX && fixed_values[n] != 0.0)
        .collect();

    let rect = g.cell_rect();
    let per_node: Result<Vec<(f64, f64)>> = slot_nodes
        .par_iter()
        .map(|&n| {
            let x = g.coord(n);
            let (i, j) = g.ij(n);
            let (ii, jj) = (i as isize, j as isize);
            let in_box_sum = sat.sum(
                -ii,
                g.n[0] as isize - 1 - ii,
                -jj,
                g.n[1] as isize - 1 - jj,
            );
            let (far_mass, far_load) = far_field(k, &p.exterior, x, rect, dim)?;
            let mut diag = in_box_sum + far_mass;
            let mut load = far_load;
            for &(off, w) in &snapped {
                let ti = ii + off[0];
                let tj = jj + off[1];
                let inside = ti >= 0 && tj >= 0 && (ti as usize) < g.n[0] && (tj as usize) < g.n[1];
                if !inside {
                    let y = [x[0] + off[0] as f64 * h, x[1] + off[1] as f64 * h];
                    diag += w;
                    load += w * p.exterior.eval(y);
                }
            }
            for &f in &fixed_nonzero {
                let (fi, fj) = g.ij(f);
                load += table.get(fi as isize - ii, fj as isize - jj) * fixed_values[f];
            }
            Ok((diag, load + p.rhs.eval(x)))
        })
        .collect();
    let per_node = per_node?;
    let diag = per_node.iter().map(|v| v.0).collect();
    let rhs = per_node.iter().map(|v| v.1).collect();

    Ok(Operator {
        grid: g,
        stats: AssemblyStats {
            unknowns: slot_nodes.len(),
            min_weight,
            near_moment_11: m.m11,
            near_moment_12: m.m12,
            near_moment_22: m.m22,
        },
        nodes: slot_nodes,
        slot,
        table,
        diag,
        rhs,
        fixed_values,
    })
}

fn density_ball_moment(k: &LevyKernel, h: f64) -> Result<Moment> {
    let mut m = k.ball_moment(h, 1e-12)?;
    for a in k.atoms() {
        if a.radius() <= h {
            m.m11 -= a.mass * a.loc[0] * a.loc[0];
            m.m12 -= a.mass * a.loc[0] * a.loc[1];
            m.m22 -= a.mass * a.loc[1] * a.loc[1];
        }
    }
    Ok(m)
}

/// Offsets and weights of atoms with `|a| >= h` after linear splitting.
fn snap_atoms(k: &LevyKernel, h: f64, dim: usize) -> Vec<([isize; 2], f64)> {
    let mut out = Vec::new();
    for a in k.atoms() {
        if a.radius() < h {
            continue;
        }
        let u = a.loc[0] / h;
        let p0 = u.floor();
        let fx = u - p0;
        let (q0, fy) = if dim == 2 {
            let v = a.loc[1] / h;
            (v.floor(), v - v.floor())
        } else {
            (0.0, 0.0)
        };
        let corners = [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ];
        for (dp, dq, w) in corners {
            if w <= 0.0 {
                continue;
            }
            let off = [p0 as isize + dp, q0 as isize + dq];
            if off == [0, 0] {
                continue;
            }
            out.push((off, a.mass * w));
        }
    }
    out
}

fn fill_cells(k: &LevyKernel, h: f64, table: &mut OffsetTable) -> Result<()> {
    let Some(d) = k.density() else {
        return Ok(());
    };
    let (mx, my) = (table.mx as isize, table.my as isize);
    if k.dim() == 1 {
        let vals: Result<Vec<f64>> = (1..=mx)
            .into_par_iter()
            .map(|p| {
                let a = ((p as f64 - 0.5) * h).max(h);
                let b = (p as f64 + 0.5) * h;
                let br = d.radial_breaks(a, b);
                Ok(integrate(|t| d.eval([t, 0.0]), a, b, &br, Tol::new(0.0, 1e-12), "cell weight")?.value)
            })
            .collect();
        for (p, v) in (1..=mx).zip(vals?) {
            table.add_pair(p, 0, v);
        }
        return Ok(());
    }
    // Half plane of offsets: p > 0, or p == 0 and q > 0.
    let offsets: Vec<(isize, isize)> = (0..=mx)
        .flat_map(|p| (-my..=my).map(move |q| (p, q)))
        .filter(|&(p, q)| p > 0 || q > 0)
        .collect();
    let rule = GaussRule::new(8);
    let vals: Result<Vec<f64>> = offsets
        .par_iter()
        .map(|&(p, q)| cell_integral(d.as_ref(), h, p, q, &rule))
        .collect();
    for (&(p, q), v) in offsets.iter().zip(vals?) {
        table.add_pair(p, q, v);
    }
    Ok(())
}

/// `int` of the density over cell `(p, q)` minus the open ball of radius `h`.
fn cell_integral(d: &dyn crate::kernels::Density, h: f64, p: isize, q: isize, rule: &GaussRule) -> Result<f64> {
    let x0 = (p as f64 - 0.5) * h;
    let x1 = (p as f64 + 0.5) * h;
    let y0 = (q as f64 - 0.5) * h;
    let y1 = (q as f64 + 0.5) * h;
    let near_corner = [x0.abs().min(x1.abs()), y0.abs().min(y1.abs())];
    let rmin = if p.abs() <= 0 || x0 * x1 <= 0.0 { 0.0 } else { near_corner[0] }
        .hypot(if y0 * y1 <= 0.0 { 0.0 } else { near_corner[1] });
    let rmax = x0.abs().max(x1.abs()).hypot(y0.abs().max(y1.abs()));
    let breaks = d.radial_breaks(rmin, rmax);
    let near = p.abs().max(q.abs()) <= NEAR_CELLS;
    if !near && breaks.is_empty() {
        let mut acc = 0.0;
        for (xi, wi) in rule.x.iter().zip(&rule.w) {
            let x = 0.5 * (x0 + x1) + 0.5 * h * xi;
            for (yj, wj) in rule.x.iter().zip(&rule.w) {
                let y = 0.5 * (y0 + y1) + 0.5 * h * yj;
                acc += wi * wj * d.eval([x, y]);
            }
        }
        return Ok(acc * 0.25 * h * h);
    }
    let mut circle_r = breaks.clone();
    circle_r.push(h);
    let inner = |x: f64| -> f64 {
        // y-range of the cell minus |(x, y)| < h, with breaks where circles cross.
        let mut segs = vec![(y0, y1)];
        if x.abs() < h {
            let c = (h * h - x * x).sqrt();
            segs = vec![(y0, y1.min(-c)), (y0.max(c), y1)];
        }
        let mut acc = 0.0;
        for (a, b) in segs {
            if b <= a {
                continue;
            }
            let ybr: Vec<f64> = circle_r
                .iter()
                .filter(|&&r| r > x.abs())
                .flat_map(|&r| {
                    let c = (r * r - x * x).sqrt();
                    [-c, c]
                })
                .collect();
            acc += integrate(|y| d.eval([x, y]), a, b, &ybr, Tol::new(0.0, 1e-11), "cell inner")
                .map(|e| e.value)
                .unwrap_or(f64::NAN);
        }
        acc
    };
    let mut xbr: Vec<f64> = circle_r.iter().flat_map(|&r| [-r, r]).collect();
    xbr.push(0.0);
    let v = integrate(inner, x0, x1, &xbr, Tol::new(0.0, 1e-10), "cell weight")?.value;
    if !v.is_finite() {
        return Err(Error::Quadrature {
            what: format!("cell ({p}, {q})"),
            estimate: v,
            error: f64::NAN,
        });
    }
    Ok(v)
}

struct SummedArea {
    mx: isize,
    my: isize,
    w: usize,
    s: Vec<f64>,
}

impl SummedArea {
    fn new(t: &OffsetTable) -> Self {
        let w = 2 * t.mx + 1;
        let hgt = 2 * t.my + 1;
        let mut s = vec![0.0; (w + 1) * (hgt + 1)];
        for j in 0..hgt {
            for i in 0..w {
                let v = t.data[j * w + i];
                s[(j + 1) * (w + 1) + i + 1] =
                    v + s[j * (w + 1) + i + 1] + s[(j + 1) * (w + 1) + i] - s[j * (w + 1) + i];
            }
        }
        SummedArea {
            mx: t.mx as isize,
            my: t.my as isize,
            w,
            s,
        }
    }

    /// Sum of weights over offsets `p0..=p1`, `q0..=q1`.
    fn sum(&self, p0: isize, p1: isize, q0: isize, q1: isize) -> f64 {
        let a0 = (p0 + self.mx) as usize;
        let a1 = (p1 + self.mx) as usize + 1;
        let b0 = (q0 + self.my) as usize;
        let b1 = (q1 + self.my) as usize + 1;
        let at = |i: usize, j: usize| self.s[j * (self.w + 1) + i];
        at(a1, b1) - at(a0, b1) - at(a1, b0) + at(a0, b0)
    }
}

/// Mass of the density beyond the cell rectangle seen from `x`, and the
/// integral of the exterior data against it.
fn far_field(k: &LevyKernel, g: &Field, x: Point, rect: (Point, Point), dim: usize) -> Result<(f64, f64)> {
    if k.density().is_none() {
        return Ok((0.0, 0.0));
    }
    if dim == 1 {
        let mut mass = 0.0;
        let mut load = 0.0;
        for (e, ell) in [([1.0, 0.0], rect.1[0] - x[0]), ([-1.0, 0.0], x[0] - rect.0[0])] {
            let (m, l) = ray(k, g, x, e, ell, 1)?;
            mass += m;
            load += l;
        }
        return Ok((mass, load));
    }
    let corners = [
        [rect.0[0], rect.0[1]],
        [rect.1[0], rect.0[1]],
        [rect.1[0], rect.1[1]],
        [rect.0[0], rect.1[1]],
    ];
    let mut angles: Vec<f64> = corners
        .iter()
        .map(|c| (c[1] - x[1]).atan2(c[0] - x[0]).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.push(angles[0] + 2.0 * PI);
    let rule = GaussRule::new(FAR_ANGULAR_POINTS);
    let mut mass = 0.0;
    let mut load = 0.0;
    for seg in angles.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = 0.5 * (b - a);
        for (t, w) in rule.x.iter().zip(&rule.w) {
            let phi = 0.5 * (a + b) + half * t;
            let e = [phi.cos(), phi.sin()];
            let ell = exit_distance(x, e, rect);
            let (m, l) = ray(k, g, x, e, ell, 2)?;
            mass += w * half * m;
            load += w * half * l;
        }
    }
    Ok((mass, load))
}

fn exit_distance(x: Point, e: Point, rect: (Point, Point)) -> f64 {
    let mut t = f64::INFINITY;
    for a in 0..2 {
        if e[a] > 1e-300 {
            t = t.min((rect.1[a] - x[a]) / e[a]);
        } else if e[a] < -1e-300 {
            t = t.min((rect.0[a] - x[a]) / e[a]);
        }
    }
    t
}

/// `int_ell^inf rho(r e) r^{d-1} dr` and `int_ell^inf g(x + r e) rho(r e) r^{d-1} dr`.
fn ray(k: &LevyKernel, g: &Field, x: Point, e: Point, ell: f64, dim: usize) -> Result<(f64, f64)> {
    let d = k.density().expect("density present");
    let s = k.s();
    let env = d.envelope();
    let pw = (dim - 1) as i32;
    let mass = match d.ray_tail(e, ell) {
        Some(v) => v,
        None => {
            integrate_tail(
                |r| d.eval([r * e[0], r * e[1]]) * r.powi(pw),
                ell,
                |t| env * t.powf(-2.0 * s) / (2.0 * s),
                k.tail_cutoff,
                Tol::new(1e-15, 1e-11),
                "far-field mass",
            )?
            .value
        }
    };
    let load = match g.constant_on_ray(x, e, ell) {
        Some(c) => c * mass,
        None => {
            let (gg, gamma) = g.growth();
            let xn = x[0].hypot(x[1]);
            integrate_tail(
                |r| g.eval([x[0] + r * e[0], x[1] + r * e[1]]) * d.eval([r * e[0], r * e[1]]) * r.powi(pw),
                ell,
                |t| {
                    if t >= 1.0 + xn {
                        2f64.powf(gamma) * gg * env * t.powf(gamma - 2.0 * s) / (2.0 * s - gamma)
                    } else {
                        f64::INFINITY
                    }
                },
                k.tail_cutoff,
                Tol::new(1e-15, 1e-10),
                "far-field load",
            )?
            .value
        }
    };
    Ok((mass, load))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{lattice, stable};

    #[test]
    fn table_is_symmetric_and_rows_sum_to_total_mass_outside_ball() {
        let k = stable(2, 0.5, 1.0).unwrap();
        let g = Grid::square(-1.0, 1.0, 9).unwrap();
        let p = Problem::new(
            k.clone(),
            Domain::Ball {
                center: [0.0, 0.0],
                radius: 0.7,
            },
            Field::Const { value: 1.0 },
            Field::zero(),
            g,
        )
        .unwrap();
        let op = assemble(&p).unwrap();
        let t = &op.table;
        for q in -(t.my as isize)..=t.my as isize {
            for pp in -(t.mx as isize)..=t.mx as isize {
                assert_eq!(t.get(pp, q), t.get(-pp, -q));
            }
        }
        // Center node: in-box cells + far field = mass outside the small ball,
        // up to the near-field stencil weights.
        let center = op.nodes.iter().position(|&n| {
            let c = g.coord(n);
            c[0].abs() < 1e-12 && c[1].abs() < 1e-12
        });
        let c = center.unwrap();
        let m = op.stats;
        let stencil = (m.near_moment_11 + m.near_moment_22 - m.near_moment_12.abs()) / (g.h * g.h);
        let outside = k.tail_mass(g.h).unwrap();
        // Cells minus ball plus far field exhaust the exterior of the small ball.
        let diag_minus_stencil = op.diag[c] - stencil;
        assert!(
            (diag_minus_stencil - outside).abs() < 1e-6 * outside,
            "{diag_minus_stencil} vs {outside}"
        );
    }

    #[test]
    fn atoms_split_linearly() {
        let k = lattice(1, 0.5, 1.0, 0, 0).unwrap();
        let snapped = snap_atoms(&k, 0.4, 1);
        // atom at 1.0 = 2.5 h: half to offsets 2 and 3.
        let w: f64 = snapped.iter().filter(|(o, _)| o[0] == 2).map(|(_, w)| w).sum();
        assert!((w - 0.5).abs() < 1e-12);
    }
}
