//! Finite-difference/quadrature solver for nonlocal Dirichlet problems
//! `L u = f` in a domain, `u = g` outside it.

pub mod assemble;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod special;

use serde::Serialize;

pub use assemble::{assemble, AssemblyStats, Operator, Problem};
pub use field::Field;
pub use geometry::{BoundarySample, Domain};
pub use grid::{Grid, GridFunction};

use crate::error::Result;
use linalg::{pcg, Circulant, Cholesky, FastOperator, Jacobi, Preconditioner};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Systems with at most this many unknowns are factored densely.
    pub dense_limit: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            dense_limit: 3000,
            cg_tol: 1e-11,
            cg_max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    CgCirculant,
    CgJacobi,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub unknowns: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    pub assembly: AssemblyStats,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    pub report: SolveReport,
}

pub fn solve(p: &Problem) -> Result<Solution> {
    solve_with(p, SolveOptions::default())
}

pub fn solve_with(p: &Problem, opts: SolveOptions) -> Result<Solution> {
    let op = assemble(p)?;
    let n = op.nodes.len();
    let (x, method, iterations, residual) = if n <= opts.dense_limit {
        let ch = Cholesky::new(op.dense(), n)?;
        let x = ch.solve(&op.rhs);
        let r = op.apply_direct(&x);
        let num: f64 = r.iter().zip(&op.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = op.rhs.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-300);
        (x, SolveMethod::Cholesky, 0, num / den)
    } else {
        let fast = FastOperator::new(&op);
        let contiguous = op.grid.dim == 1 && op.nodes.windows(2).all(|w| w[1] == w[0] + 1);
        let (pre, method): (Box<dyn Preconditioner>, SolveMethod) = if contiguous {
            (Box::new(Circulant::new(&op)), SolveMethod::CgCirculant)
        } else {
            (Box::new(Jacobi::new(&op.diag)), SolveMethod::CgJacobi)
        };
        let (x, rep) = pcg(|v| fast.apply(v), pre.as_ref(), &op.rhs, opts.cg_tol, opts.cg_max_iter)?;
        (x, method, rep.iterations, rep.relative_residual)
    };
    let g = op.grid;
    let mut values = op.fixed_values.clone();
    let mut interior = vec![false; g.len()];
    for (k, &node) in op.nodes.iter().enumerate() {
        values[node] = x[k];
        interior[node] = true;
    }
    Ok(Solution {
        u: GridFunction {
            grid: g,
            values,
            interior,
            exterior: p.exterior.clone(),
        },
        report: SolveReport {
            method,
            unknowns: n,
            iterations,
            relative_residual: residual,
            assembly: op.stats,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::stable_normalized;
    use libm::tgamma;

    fn torsion_constant(s: f64) -> f64 {
        tgamma(0.5) / (4f64.powf(s) * tgamma(1.0 + s) * tgamma(0.5 + s))
    }

    #[test]
    fn fractional_torsion_on_interval() {
        let s = 0.5;
        let k = stable_normalized(s).unwrap();
        let g = Grid::interval(-0.25, 1.25, 96).unwrap();
        let p = Problem::new(k, Domain::Interval { a: 0.0, b: 1.0 }, Field::Const { value: 1.0 }, Field::zero(), g).unwrap();
        let sol = solve(&p).unwrap();
        let c = torsion_constant(s);
        let mut worst: f64 = 0.0;
        for (x, u) in sol.u.interior_nodes() {
            let exact = c * (x[0] * (1.0 - x[0])).powf(s);
            if x[0] > 0.2 && x[0] < 0.8 {
                worst = worst.max((u - exact).abs() / exact);
            }
        }
        assert!(worst < 0.02, "relative error {worst}");
    }

    #[test]
    fn fast_apply_matches_dense() {
        let k = crate::kernels::stable(2, 0.6, 1.0).unwrap();
        let g = Grid::square(-1.0, 1.0, 13).unwrap();
        let p = Problem::new(
            k,
            Domain::Ball {
                center: [0.0, 0.0],
                radius: 0.8,
            },
            Field::Const { value: 1.0 },
            Field::zero(),
            g,
        )
        .unwrap();
        let op = assemble(&p).unwrap();
        let x: Vec<f64> = (0..op.nodes.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = op.apply_direct(&x);
        let b = FastOperator::new(&op).apply(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9 * u.abs().max(1.0));
        }
    }

    #[test]
    fn cg_and_cholesky_agree_in_one_dimension() {
        let k = stable_normalized(0.3).unwrap();
        let g = Grid::interval(-0.5, 1.5, 64).unwrap();
        let p = Problem::new(k, Domain::Interval { a: 0.0, b: 1.0 }, Field::Const { value: 1.0 }, Field::zero(), g).unwrap();
        let a = solve(&p).unwrap();
        let b = solve_with(
            &p,
            SolveOptions {
                dense_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(b.report.method, SolveMethod::CgCirculant);
        for (u, v) in a.u.values.iter().zip(&b.u.values) {
            assert!((u - v).abs() < 1e-8);
        }
    }
}
