//! Linear algebra for the assembled operator: dense Cholesky for small
//! systems, FFT-accelerated matrix-vector products and preconditioned
//! conjugate gradients for large ones.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::assemble::Operator;
use crate::error::{Error, Result};

/// Dense Cholesky factorization `A = L L^T` of a row-major SPD matrix.
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(mut a: Vec<f64>, n: usize) -> Result<Cholesky> {
        assert_eq!(a.len(), n * n);
        let gersh = gershgorin_lower(&a, n);
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    row: j,
                    pivot: d,
                    min_eig: gersh,
                });
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            let (head, tail) = a.split_at_mut((j + 1) * n);
            let row_j = &head[j * n..j * n + j];
            for row_i in tail.chunks_mut(n) {
                let mut v = row_i[j];
                for k in 0..j {
                    v -= row_i[k] * row_j[k];
                }
                row_i[j] = v / d;
            }
        }
        Ok(Cholesky { n, l: a })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l[i * n + k] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        y
    }
}

/// Gershgorin lower bound on the smallest eigenvalue.
fn gershgorin_lower(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let row = &a[i * n..(i + 1) * n];
            let off: f64 = row.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v.abs()).sum();
            row[i] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// 2D (or 1D) complex FFT on a row-major `nx x ny` array.
struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix: p.plan_fft_inverse(nx),
            iy: p.plan_fft_inverse(ny),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        fx.process(data);
        if self.ny > 1 {
            let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
            for i in 0..self.nx {
                for j in 0..self.ny {
                    col[j] = data[j * self.nx + i];
                }
                fy.process(&mut col);
                for j in 0..self.ny {
                    data[j * self.nx + i] = col[j];
                }
            }
        }
    }
}

/// `x -> A x` for the assembled operator using circular convolution of the
/// weight table with the zero-padded unknowns.
pub struct FastOperator<'a> {
    op: &'a Operator,
    fft: Fft2,
    kernel_hat: Vec<Complex64>,
    lx: usize,
    ly: usize,
}

impl<'a> FastOperator<'a> {
    pub fn new(op: &'a Operator) -> Self {
        let g = &op.grid;
        let lx = 2 * g.n[0];
        let ly = if g.dim == 2 { 2 * g.n[1] } else { 1 };
        let t = &op.table;
        let mut k = vec![Complex64::new(0.0, 0.0); lx * ly];
        for q in -(t.my as isize)..=t.my as isize {
            for p in -(t.mx as isize)..=t.mx as isize {
                let i = p.rem_euclid(lx as isize) as usize;
                let j = q.rem_euclid(ly as isize) as usize;
                k[j * lx + i] = Complex64::new(t.get(p, q), 0.0);
            }
        }
        let fft = Fft2::new(lx, ly);
        fft.run(&mut k, false);
        FastOperator {
            op,
            fft,
            kernel_hat: k,
            lx,
            ly,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.op.grid;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.lx * self.ly];
        for (k, &n) in self.op.nodes.iter().enumerate() {
            let (i, j) = g.ij(n);
            buf[j * self.lx + i] = Complex64::new(x[k], 0.0);
        }
        self.fft.run(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.run(&mut buf, true);
        let scale = 1.0 / (self.lx * self.ly) as f64;
        self.op
            .nodes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let (i, j) = g.ij(n);
                self.op.diag[k] * x[k] - buf[j * self.lx + i].re * scale
            })
            .collect()
    }
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

pub struct Jacobi {
    inv: Vec<f64>,
}

impl Jacobi {
    pub fn new(diag: &[f64]) -> Self {
        Jacobi {
            inv: diag.iter().map(|d| 1.0 / d).collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv).map(|(a, b)| a * b).collect()
    }
}

/// Strang circulant approximation of a 1D operator on contiguous unknowns.
pub struct Circulant {
    n: usize,
    eig: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Circulant {
    pub fn new(op: &Operator) -> Self {
        let n = op.nodes.len();
        let mean_diag = op.diag.iter().sum::<f64>() / n as f64;
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = Complex64::new(mean_diag, 0.0);
        for k in 1..=n / 2 {
            let w = if k <= op.table.mx { op.table.get(k as isize, 0) } else { 0.0 };
            c[k] -= w;
            if n - k != k {
                c[n - k] -= w;
            }
        }
        let mut p = FftPlanner::new();
        let fwd = p.plan_fft_forward(n);
        let inv = p.plan_fft_inverse(n);
        fwd.process(&mut c);
        let floor = 1e-3 * op.diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let eig = c.iter().map(|v| v.re.max(floor)).collect();
        Circulant { n, eig, fwd, inv }
    }
}

impl Preconditioner for Circulant {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut b: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut b);
        for (v, e) in b.iter_mut().zip(&self.eig) {
            *v /= e;
        }
        self.inv.process(&mut b);
        b.iter().map(|v| v.re / self.n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `A x = b`.
pub fn pcg<A, P>(a: A, m: &P, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgReport)>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Preconditioner + ?Sized,
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite {
                row: it,
                pivot: pap,
                min_eig: f64::NAN,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    relative_residual: res,
                },
            ));
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / bnorm;
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let c = Cholesky::new(a.clone(), 3).unwrap();
        let x = c.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|k| a[i * 3 + k] * x[k]).sum();
            assert!((ax - [1.0, 2.0, 3.0][i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_reports_failing_row() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        match Cholesky::new(a, 2) {
            Err(Error::NotPositiveDefinite { row, min_eig, .. }) => {
                assert_eq!(row, 1);
                assert!(min_eig < 0.0);
            }
            _ => panic!("expected failure"),
        }
    }

    #[test]
    fn pcg_matches_direct_on_tridiagonal() {
        let n = 50;
        let a = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = 2.5 * x[i];
                    if i > 0 {
                        v -= x[i - 1];
                    }
                    if i + 1 < n {
                        v -= x[i + 1];
                    }
                    v
                })
                .collect()
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, rep) = pcg(a, &Jacobi::new(&vec![2.5; n]), &b, 1e-12, 500).unwrap();
        let r = a(&x);
        assert!(rep.relative_residual <= 1e-12);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
    }
}
