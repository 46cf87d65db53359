//! Uniform node grids and functions sampled on them.

use serde::{Deserialize, Serialize};

use super::field::Field;
use crate::error::{Error, Result};
use crate::kernels::Point;

/// Nodes `origin + (i h, j h)`, `0 <= i < n[0]`, `0 <= j < n[1]`; in one
/// dimension `n[1] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub origin: [f64; 2],
    pub h: f64,
    pub n: [usize; 2],
}

impl Grid {
    pub fn line(x0: f64, h: f64, n: usize) -> Result<Grid> {
        if !(h > 0.0) || n < 3 {
            return Err(Error::Parameter("grid needs h > 0 and at least 3 nodes".into()));
        }
        Ok(Grid {
            dim: 1,
            origin: [x0, 0.0],
            h,
            n: [n, 1],
        })
    }

    /// Nodes `x0 + j h` covering `[a, b]` with `h = (b - a) / cells`.
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Grid> {
        Grid::line(a, (b - a) / cells as f64, cells + 1)
    }

    pub fn plane(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Grid> {
        if !(h > 0.0) || nx < 3 || ny < 3 {
            return Err(Error::Parameter("grid needs h > 0 and at least 3x3 nodes".into()));
        }
        Ok(Grid {
            dim: 2,
            origin,
            h,
            n: [nx, ny],
        })
    }

    /// Square grid with `n x n` nodes on `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Grid> {
        Grid::plane([lo, lo], (hi - lo) / (n - 1) as f64, n, n)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n[0], k / self.n[0])
    }

    pub fn coord(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        [
            self.origin[0] + i as f64 * self.h,
            if self.dim == 2 {
                self.origin[1] + j as f64 * self.h
            } else {
                0.0
            },
        ]
    }

    /// Union of the node cells: `[x_0 - h/2, x_last + h/2]` per axis.
    pub fn cell_rect(&self) -> (Point, Point) {
        let hh = 0.5 * self.h;
        let lo = [self.origin[0] - hh, self.origin[1] - hh];
        let hi = [
            self.origin[0] + (self.n[0] - 1) as f64 * self.h + hh,
            self.origin[1] + (self.n[1] - 1) as f64 * self.h + hh,
        ];
        if self.dim == 1 {
            ([lo[0], 0.0], [hi[0], 0.0])
        } else {
            (lo, hi)
        }
    }

    /// Node extent `[x_0, x_last]` per axis.
    pub fn node_rect(&self) -> (Point, Point) {
        (
            self.origin,
            [
                self.origin[0] + (self.n[0] - 1) as f64 * self.h,
                self.origin[1] + (self.n[1] - 1) as f64 * self.h,
            ],
        )
    }
}

/// Values at every grid node together with the exterior data used off the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Whether the node is an unknown of the discrete problem.
    pub interior: Vec<bool>,
    pub exterior: Field,
}

impl GridFunction {
    /// Linear (1D) or bilinear (2D) interpolation inside the node box; the
    /// exterior field elsewhere.
    pub fn value_at(&self, x: Point) -> f64 {
        let g = &self.grid;
        let u = (x[0] - g.origin[0]) / g.h;
        let nx = g.n[0];
        if g.dim == 1 {
            if u < 0.0 || u > (nx - 1) as f64 {
                return self.exterior.eval(x);
            }
            let i = (u.floor() as usize).min(nx - 2);
            let f = u - i as f64;
            return self.values[i] * (1.0 - f) + self.values[i + 1] * f;
        }
        let v = (x[1] - g.origin[1]) / g.h;
        let ny = g.n[1];
        if u < 0.0 || v < 0.0 || u > (nx - 1) as f64 || v > (ny - 1) as f64 {
            return self.exterior.eval(x);
        }
        let i = (u.floor() as usize).min(nx - 2);
        let j = (v.floor() as usize).min(ny - 2);
        let fx = u - i as f64;
        let fy = v - j as f64;
        let at = |a: usize, b: usize| self.values[g.index(a, b)];
        (1.0 - fx) * (1.0 - fy) * at(i, j)
            + fx * (1.0 - fy) * at(i + 1, j)
            + (1.0 - fx) * fy * at(i, j + 1)
            + fx * fy * at(i + 1, j + 1)
    }

    /// Node coordinates and values of the unknowns.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        (0..self.grid.len())
            .filter(|&k| self.interior[k])
            .map(|k| (self.grid.coord(k), self.values[k]))
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            interior: self.interior.clone(),
            exterior: Field::Scaled {
                factor: c,
                inner: Box::new(self.exterior.clone()),
            },
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = if self.grid.dim == 1 {
            String::from("x,u,interior\n")
        } else {
            String::from("x,y,u,interior\n")
        };
        for k in 0..self.grid.len() {
            let p = self.grid.coord(k);
            let flag = u8::from(self.interior[k]);
            if self.grid.dim == 1 {
                out.push_str(&format!("{:.10e},{:.12e},{flag}\n", p[0], self.values[k]));
            } else {
                out.push_str(&format!("{:.10e},{:.10e},{:.12e},{flag}\n", p[0], p[1], self.values[k]));
            }
        }
        out
    }

    /// Reads the output of `to_csv`; the grid is recovered from the node
    /// coordinates, which must be listed in index order.
    pub fn from_csv(text: &str, exterior: Field) -> Result<GridFunction> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
        let dim = match header.as_slice() {
            ["x", "u", "interior"] => 1,
            ["x", "y", "u", "interior"] => 2,
            _ => return Err(Error::Parameter(format!("unexpected solution header {header:?}"))),
        };
        let mut pts = Vec::new();
        let mut values = Vec::new();
        let mut interior = Vec::new();
        for (no, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parameter(format!("solution line {}: cannot parse '{line}'", no + 2));
            if cells.len() != dim + 2 {
                return Err(bad());
            }
            let num = |c: &str| c.parse::<f64>().map_err(|_| bad());
            let x = num(cells[0])?;
            let y = if dim == 2 { num(cells[1])? } else { 0.0 };
            pts.push([x, y]);
            values.push(num(cells[dim])?);
            interior.push(cells[dim + 1] == "1");
        }
        if pts.len() < 3 {
            return Err(Error::Parameter("solution needs at least 3 nodes".into()));
        }
        let h = pts[1][0] - pts[0][0];
        let nx = if dim == 1 {
            pts.len()
        } else {
            pts.iter().take_while(|p| (p[1] - pts[0][1]).abs() < 1e-9 * h.abs().max(1e-300)).count()
        };
        if !(h > 0.0) || pts.len() % nx != 0 {
            return Err(Error::Parameter("solution nodes do not form a uniform grid".into()));
        }
        let grid = if dim == 1 {
            Grid::line(pts[0][0], h, nx)?
        } else {
            Grid::plane(pts[0], h, nx, pts.len() / nx)?
        };
        for (k, p) in pts.iter().enumerate() {
            let q = grid.coord(k);
            if (p[0] - q[0]).abs() > 1e-6 * h || (p[1] - q[1]).abs() > 1e-6 * h {
                return Err(Error::Parameter(format!("solution node {k} at {p:?} is off the grid")));
            }
        }
        Ok(GridFunction {
            grid,
            values,
            interior,
            exterior,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let g = Grid::square(-1.0, 1.0, 11).unwrap();
        let f = |p: Point| 1.0 + 2.0 * p[0] - 0.5 * p[1];
        let values = (0..g.len()).map(|k| f(g.coord(k))).collect();
        let gf = GridFunction {
            grid: g,
            values,
            interior: vec![true; g.len()],
            exterior: Field::zero(),
        };
        let x = [0.3333, -0.71];
        assert!((gf.value_at(x) - f(x)).abs() < 1e-13);
        assert_eq!(gf.value_at([2.0, 0.0]), 0.0);
    }

    #[test]
    fn cell_rect_extends_half_cell() {
        let g = Grid::interval(0.0, 1.0, 4).unwrap();
        let (lo, hi) = g.cell_rect();
        assert!((lo[0] + 0.125).abs() < 1e-15 && (hi[0] - 1.125).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_recovers_grid() {
        for g in [Grid::interval(-0.5, 1.5, 20).unwrap(), Grid::plane([-1.0, -0.1], 0.125, 17, 9).unwrap()] {
            let gf = GridFunction {
                grid: g,
                values: (0..g.len()).map(|k| (k as f64 * 0.7).sin()).collect(),
                interior: (0..g.len()).map(|k| k % 3 == 0).collect(),
                exterior: Field::zero(),
            };
            let back = GridFunction::from_csv(&gf.to_csv(), Field::zero()).unwrap();
            assert_eq!(back.grid.n, g.n);
            assert!((back.grid.h - g.h).abs() < 1e-9);
            assert_eq!(back.interior, gf.interior);
            for (a, b) in back.values.iter().zip(&gf.values) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }
}
