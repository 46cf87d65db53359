//! Fourier symbol `A(xi) = int (1 - cos(xi h)) K(dh)` of one-dimensional kernels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::{log_space, Spline};
use crate::kernels::LevyKernel;
use crate::quadrature::{integrate, Tol};

/// Half periods summed before the oscillatory tail starts.
const TAIL_HALF_PERIODS: f64 = 8.5;

#[derive(Debug, Clone, Copy)]
pub struct SymbolOptions {
    pub rel_tol: f64,
}

impl Default for SymbolOptions {
    fn default() -> Self {
        SymbolOptions { rel_tol: 1e-10 }
    }
}

pub fn eval_symbol(k: &LevyKernel, xi: f64) -> Result<f64> {
    eval_symbol_with(k, xi, SymbolOptions::default())
}

/// Symbol at `xi`. The density integral splits into a small-`h` part
/// (dyadic shells with a second-moment remainder bound), a moderate part
/// integrated directly, and a tail written as mass minus an alternating
/// cosine series summed with repeated averaging.
pub fn eval_symbol_with(k: &LevyKernel, xi: f64, opts: SymbolOptions) -> Result<f64> {
    if k.dim() != 1 {
        return Err(Error::Parameter("symbol evaluation is one-dimensional".into()));
    }
    if !xi.is_finite() {
        return Err(Error::Parameter(format!("frequency must be finite, got {xi}")));
    }
    let x = xi.abs();
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for a in k.atoms() {
        total += 2.0 * a.mass * (0.5 * x * a.loc[0]).sin().powi(2);
    }
    if let Some(d) = k.density() {
        let s = k.s();
        let env = d.envelope();
        let tol = opts.rel_tol * (env * x.powf(2.0 * s) * 1e-2).max(1e-300);
        let rho = |t: f64| d.eval([t, 0.0]);
        let integrand = |t: f64| 4.0 * (0.5 * x * t).sin().powi(2) * rho(t);

        // (0, h0]: dyadic shells downward.
        let h0 = 1.0 / x;
        let mut inner = 0.0;
        let mut hi = h0;
        loop {
            let lo = 0.5 * hi;
            let br = d.radial_breaks(lo, hi);
            inner += integrate(integrand, lo, hi, &br, Tol::new(tol * 1e-2, opts.rel_tol), "symbol near field")?
                .value;
            hi = lo;
            let bound = x * x * env * hi.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            if bound <= tol {
                break;
            }
            if hi < 1e-300 {
                return Err(Error::Truncation { bound, tol });
            }
        }

        // (h0, z]: a few oscillations, integrated directly.
        let z = TAIL_HALF_PERIODS * std::f64::consts::PI / x;
        let br = d.radial_breaks(h0, z);
        let mid = integrate(integrand, h0, z, &br, Tol::new(tol * 1e-2, opts.rel_tol), "symbol mid field")?.value;

        // (z, inf): mass minus cosine transform.
        let mass = k.density_tail_mass(z)?;
        let osc = 2.0 * cosine_tail(&rho, |a, b| d.radial_breaks(a, b), x, z, tol * 0.1)?;
        total += inner + mid + mass - osc;
    }
    Ok(total)
}

/// `int_z^inf cos(x t) f(t) dt` where `cos(x z) = 0`, summing half periods.
fn cosine_tail<F, B>(f: &F, breaks: B, x: f64, z: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    B: Fn(f64, f64) -> Vec<f64>,
{
    let step = std::f64::consts::PI / x;
    let term = |j: usize| -> Result<f64> {
        let a = z + j as f64 * step;
        let b = a + step;
        let br = breaks(a, b);
        Ok(integrate(
            |t| (x * t).cos() * f(t),
            a,
            b,
            &br,
            Tol::new(tol * 1e-3, 1e-12),
            "symbol oscillatory tail",
        )?
        .value)
    };
    let levels = 12;
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut n_target = 48;
    let mut last = f64::NAN;
    while n_target <= 1 << 14 {
        while partial.len() < n_target {
            sum += term(partial.len())?;
            partial.push(sum);
        }
        let est = averaged(&partial, levels);
        let prev = averaged(&partial[..partial.len() - 1], levels);
        let err = (est - prev).abs();
        if err <= tol {
            return Ok(est);
        }
        last = est;
        n_target *= 2;
    }
    Err(Error::Quadrature {
        what: "oscillatory symbol tail".into(),
        estimate: last,
        error: f64::NAN,
    })
}

/// Repeated pairwise averaging of the final partial sums.
fn averaged(partial: &[f64], levels: usize) -> f64 {
    let n = partial.len();
    let l = levels.min(n - 1);
    let mut row: Vec<f64> = partial[n - 1 - l..].to_vec();
    for _ in 0..l {
        row = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    row[0]
}

/// 512 log-spaced frequencies on `[1e-3, 1e3]`.
pub fn default_grid() -> Vec<f64> {
    log_space(1e-3, 1e3, 512)
}

/// Symbol values on a positive frequency grid with fitted two-sided bounds
/// `lambda <= A(xi) / |xi|^{2s} <= Lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolTable {
    pub s: f64,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_lower: f64,
    pub fitted_upper: f64,
}

impl SymbolTable {
    pub fn from_values(s: f64, xi: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xi.len() != values.len() || xi.len() < 8 {
            return Err(Error::Parameter("symbol table needs at least 8 matching samples".into()));
        }
        if xi.windows(2).any(|w| !(w[1] > w[0])) || xi[0] <= 0.0 {
            return Err(Error::Parameter("symbol grid must be positive and increasing".into()));
        }
        let mut t = SymbolTable {
            s,
            xi,
            values,
            fitted_lower: 0.0,
            fitted_upper: 0.0,
        };
        t.fit_bounds()?;
        Ok(t)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(s: f64, xi: Vec<f64>, f: F) -> Result<Self> {
        let values = xi.iter().map(|&x| f(x)).collect();
        Self::from_values(s, xi, values)
    }

    /// Recomputes the bounds; the grid must span at least four decades.
    pub fn fit_bounds(&mut self) -> Result<()> {
        let span = self.xi[self.xi.len() - 1] / self.xi[0];
        if span < 1e4 * (1.0 - 1e-9) {
            return Err(Error::Parameter(format!(
                "symbol bounds need at least four decades of frequencies, grid spans {span:e}"
            )));
        }
        let ratios = self
            .xi
            .iter()
            .zip(&self.values)
            .map(|(x, a)| a / x.powf(2.0 * self.s));
        self.fitted_lower = ratios.clone().fold(f64::INFINITY, f64::min);
        self.fitted_upper = ratios.fold(0.0, f64::max);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,A,A_over_xi_2s\n");
        for (x, a) in self.xi.iter().zip(&self.values) {
            out.push_str(&format!("{x:.12e},{a:.12e},{:.12e}\n", a / x.powf(2.0 * self.s)));
        }
        out
    }
}

pub fn build_symbol_table(k: &LevyKernel, grid: &[f64]) -> Result<SymbolTable> {
    let values: Result<Vec<f64>> = grid.par_iter().map(|&x| eval_symbol(k, x)).collect();
    SymbolTable::from_values(k.s(), grid.to_vec(), values?)
}

/// Cubic spline of `ln A` against `ln xi`, extended beyond the table by the
/// power law matching the slope over the outermost octave.
#[derive(Debug, Clone)]
pub struct LogSymbol {
    spline: Spline,
    lo: (f64, f64, f64),
    hi: (f64, f64, f64),
}

impl LogSymbol {
    pub fn new(t: &SymbolTable) -> Result<Self> {
        if let Some(i) = t.values.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::Resolution {
                xi: t.xi[i],
                reason: "symbol is not positive".into(),
            });
        }
        let u: Vec<f64> = t.xi.iter().map(|x| x.ln()).collect();
        let v: Vec<f64> = t.values.iter().map(|a| a.ln()).collect();
        let spline = Spline::new(u.clone(), v.clone());
        let n = u.len();
        let ln2 = std::f64::consts::LN_2;
        let slope_lo = if u[n - 1] - u[0] > ln2 {
            (spline.eval(u[0] + ln2) - v[0]) / ln2
        } else {
            2.0 * t.s
        };
        let slope_hi = if u[n - 1] - u[0] > ln2 {
            (v[n - 1] - spline.eval(u[n - 1] - ln2)) / ln2
        } else {
            2.0 * t.s
        };
        Ok(LogSymbol {
            lo: (u[0], v[0], slope_lo.clamp(0.0, 2.0)),
            hi: (u[n - 1], v[n - 1], slope_hi.clamp(0.0, 2.0)),
            spline,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo.0.exp(), self.hi.0.exp())
    }

    /// `ln A(|xi|)`; `-inf` at zero.
    pub fn ln_a(&self, xi: f64) -> f64 {
        let x = xi.abs();
        if x == 0.0 {
            return f64::NEG_INFINITY;
        }
        let u = x.ln();
        if u < self.lo.0 {
            self.lo.1 + self.lo.2 * (u - self.lo.0)
        } else if u > self.hi.0 {
            self.hi.1 + self.hi.2 * (u - self.hi.0)
        } else {
            self.spline.eval(u)
        }
    }

    pub fn a(&self, xi: f64) -> f64 {
        self.ln_a(xi).exp()
    }

    /// Interpolation nodes in `xi`.
    pub fn knots(&self) -> Vec<f64> {
        self.spline.x().iter().map(|u| u.exp()).collect()
    }

    /// Log-slopes used beyond the table at the low and high ends.
    pub fn end_slopes(&self) -> (f64, f64) {
        (self.lo.2, self.hi.2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusAudit {
    pub case: String,
    pub c_max: f64,
    pub violations: Vec<(f64, f64, f64)>,
}

/// Checks `|A(xi) - A(xi + eps)| <= C m(xi, eps)` with the modulus `m`
/// appropriate to the order: `eps^{2s}` for `s < 1/2`,
/// `eps ln(e + xi/eps)` at `s = 1/2`, `eps (xi + eps)^{2s-1}` above.
/// Off-grid values come from the log-spline interpolant.
pub fn audit_symbol_modulus(t: &SymbolTable, eps: &[f64], c_allowed: f64) -> Result<ModulusAudit> {
    let ls = LogSymbol::new(t)?;
    let s = t.s;
    let case = if (s - 0.5).abs() < 1e-12 {
        "logarithmic"
    } else if s < 0.5 {
        "holder"
    } else {
        "lipschitz_weighted"
    };
    let mut c_max: f64 = 0.0;
    let mut violations = Vec::new();
    for (&x, &a) in t.xi.iter().zip(&t.values) {
        for &e in eps {
            if !(e > 0.0) {
                return Err(Error::Parameter("modulus offsets must be positive".into()));
            }
            let diff = (a - ls.a(x + e)).abs();
            let m = match case {
                "logarithmic" => e * (std::f64::consts::E + x / e).ln(),
                "holder" => e.powf(2.0 * s),
                _ => e * (x + e).powf(2.0 * s - 1.0),
            };
            let c = diff / m;
            c_max = c_max.max(c);
            if c > c_allowed {
                violations.push((x, e, c));
            }
        }
    }
    Ok(ModulusAudit {
        case: case.into(),
        c_max,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{lattice, stable_normalized, tempered};

    #[test]
    fn stable_symbol_is_power_law() {
        for s in [0.3, 0.5, 0.7] {
            let k = stable_normalized(s).unwrap();
            for xi in [1e-3, 0.1, 3.0, 100.0, 1e3] {
                let a = eval_symbol(&k, xi).unwrap();
                let exact = xi.powf(2.0 * s);
                assert!((a - exact).abs() < 1e-8 * exact, "s={s} xi={xi}: {a} vs {exact}");
            }
        }
    }

    #[test]
    fn lattice_symbol_is_finite_sum() {
        let k = lattice(1, 0.5, 1.0, -3, 3).unwrap();
        let xi = 1.7;
        let direct: f64 = (-3..=3)
            .map(|j| 2.0 * 2f64.powi(-j) * (1.0 - (xi * 2f64.powi(j)).cos()))
            .sum();
        assert!((eval_symbol(&k, xi).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn tempered_symbol_matches_closed_form() {
        // int_R (1 - cos(xi h)) e^{-|h|} |h|^{-1-2s} dh
        //   = 2 Gamma(-2s) [1 - (1 + xi^2)^s cos(2s atan xi)]
        let s = 0.3;
        let k = tempered(1, s, 1.0, 1.0).unwrap();
        for xi in [0.01f64, 1.0, 50.0] {
            let exact = 2.0
                * libm::tgamma(-2.0 * s)
                * (1.0 - (1.0 + xi * xi).powf(s) * (2.0 * s * f64::atan(xi)).cos());
            let a = eval_symbol(&k, xi).unwrap();
            assert!((a - exact).abs() < 1e-8 * exact, "xi={xi}: {a} vs {exact}");
        }
    }

    #[test]
    fn truncated_tail_is_reported() {
        // No closed-form tail, so the shell sum must stop at the cutoff.
        let custom = crate::kernels::LevyKernel::new(
            1,
            0.1,
            Some(std::sync::Arc::new(crate::kernels::density::Custom {
                dim: 1,
                envelope: 1.0,
                f: std::sync::Arc::new(|h: [f64; 2]| h[0].abs().powf(-1.2)),
                label: "plain".into(),
            })),
            vec![],
            "plain",
        )
        .unwrap();
        let mut custom = custom;
        custom.tail_cutoff = 10.0;
        assert!(matches!(eval_symbol(&custom, 3.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn table_requires_four_decades() {
        let g = log_space(1.0, 100.0, 16);
        assert!(SymbolTable::from_fn(0.5, g, |x| x).is_err());
    }

    #[test]
    fn modulus_audit_for_pure_power() {
        let g = default_grid();
        let t = SymbolTable::from_fn(0.3, g, |x| x.powf(0.6)).unwrap();
        let rep = audit_symbol_modulus(&t, &[1e-3, 1e-2, 0.1], 2.0).unwrap();
        assert_eq!(rep.case, "holder");
        assert!(rep.c_max <= 2.0, "{}", rep.c_max);
        assert!(rep.violations.is_empty());
    }
}
