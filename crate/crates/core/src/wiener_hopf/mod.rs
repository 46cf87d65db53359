//! Wiener–Hopf factorization `A = A_+ A_-` of a one-dimensional symbol and
//! the Fourier model of the half-line barrier.
//!
//! With `P(xi) = p.v. int ln A(theta) / (theta - xi) dtheta` the factors are
//! `A_+- = sqrt(A) exp(-+ i P / (2 pi))`. For `A = |xi|^{2s}` one gets
//! `P = s pi^2 sign(xi)` and `A_-(xi) = |xi|^s e^{i pi s sign(xi) / 2}`.

pub mod crosscheck;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::{log_space, Spline};
use crate::quadrature::{integrate, tanh_sinh, Tol};
use crate::symbol::{LogSymbol, SymbolTable};

pub use crosscheck::{spectral_crosscheck, CrosscheckOptions, CrosscheckReport};

/// Decades by which the phase table extends past the symbol table.
const PHASE_EXTENSION_DECADES: f64 = 3.0;

/// Minimum grid density for principal-value integrals.
const MIN_POINTS_PER_DECADE: f64 = 8.0;

/// `sum_{k>=0} x^{2k+1} / (2k+1)^2` for `|x| < 1`.
fn chi2(x: f64) -> f64 {
    let x2 = x * x;
    let mut p = x;
    let mut sum = 0.0;
    for k in 0..10_000 {
        let d = (2 * k + 1) as f64;
        let t = p / (d * d);
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
        p *= x2;
    }
    sum
}

/// Principal value `P(xi)` from the log-symbol model, written as
/// `int_0^inf (ln A(xi + t) - ln A(|xi - t|)) / t dt` and split into
/// `(0, xi/2)`, the log-singular window `(xi/2, 3xi/2)`, and the tail,
/// whose part beyond the table is summed in closed form.
fn pv_raw(ls: &LogSymbol, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi < 0.0 {
        return Ok(-pv_raw(ls, -xi)?);
    }
    let l = |t: f64| ls.ln_a(t);
    let (lo, hi) = ls.range();
    let tol = Tol::new(1e-13, 1e-12);

    let kinks = |a: f64, b: f64| -> Vec<f64> {
        [lo - xi, xi - lo, hi - xi, xi - hi, lo + xi, hi + xi]
            .into_iter()
            .map(f64::abs)
            .filter(|&t| t > a && t < b)
            .collect()
    };

    let f1 = |t: f64| (l(xi + t) - l(xi - t)) / t;
    let i1 = integrate(f1, 0.0, 0.5 * xi, &kinks(0.0, 0.5 * xi), tol, "pv near window")?.value;

    // Singular windows. Next to t = xi the integrand carries ln A(|xi - t|),
    // which is smooth in ln|xi - t| only up to the first knot; tanh-sinh
    // handles the log singularity there and the rest is split at knots.
    let knots = ls.knots();
    let gap = knots
        .iter()
        .map(|&k| (k - 2.0 * xi).abs())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let eta0 = lo.min(0.5 * xi).min(gap);
    let window_breaks = |a: f64, b: f64| -> Vec<f64> {
        knots
            .iter()
            .flat_map(|&k| [xi - k, k - xi, xi + k])
            .filter(|&t| t > a && t < b)
            .collect()
    };
    let i2a = tanh_sinh(
        |t, _, db| (l(xi + t) - l(db)) / t,
        xi - eta0,
        xi,
        1e-13,
        "pv singular window",
    )?
    .value
        + integrate(
            |t| (l(xi + t) - l(xi - t)) / t,
            0.5 * xi,
            xi - eta0,
            &window_breaks(0.5 * xi, xi - eta0),
            tol,
            "pv window",
        )?
        .value;
    let i2b = tanh_sinh(
        |t, da, _| (l(xi + t) - l(da)) / t,
        xi,
        xi + eta0,
        1e-13,
        "pv singular window",
    )?
    .value
        + integrate(
            |t| (l(xi + t) - l(t - xi)) / t,
            xi + eta0,
            1.5 * xi,
            &window_breaks(xi + eta0, 1.5 * xi),
            tol,
            "pv window",
        )?
        .value;

    let theta = (1.5 * xi).max(hi + xi);
    let f3 = |t: f64| (l(xi + t) - l(t - xi)) / t;
    let mut i3 = 0.0;
    let mut a = 1.5 * xi;
    while a < theta {
        let b = (2.0 * a).min(theta);
        i3 += integrate(f3, a, b, &kinks(a, b), tol, "pv tail")?.value;
        a = b;
    }
    let (_, slope_hi) = ls.end_slopes();
    let beyond = slope_hi * 2.0 * chi2(xi / theta);
    Ok(i1 + i2a + i2b + i3 + beyond)
}

/// Principal value `p.v. int ln A(theta) / (theta - xi) dtheta` for `xi`
/// inside the table range.
pub fn pv_log_integral(t: &SymbolTable, xi: f64) -> Result<f64> {
    check_resolution(t, xi)?;
    let ls = LogSymbol::new(t)?;
    pv_raw(&ls, xi)
}

fn check_resolution(t: &SymbolTable, xi: f64) -> Result<()> {
    let (lo, hi) = (t.xi[0], t.xi[t.xi.len() - 1]);
    let x = xi.abs();
    if x != 0.0 && (x < lo * (1.0 - 1e-12) || x > hi * (1.0 + 1e-12)) {
        return Err(Error::Resolution {
            xi,
            reason: format!("outside tabulated range [{lo:e}, {hi:e}]"),
        });
    }
    let decades = (hi / lo).log10();
    let density = (t.xi.len() - 1) as f64 / decades;
    if density < MIN_POINTS_PER_DECADE {
        return Err(Error::Resolution {
            xi,
            reason: format!("{density:.1} points per decade, need {MIN_POINTS_PER_DECADE}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct WienerHopfFactors {
    pub s: f64,
    /// Symmetric frequency grid: the negated table grid followed by the table grid.
    pub xi: Vec<f64>,
    pub symbol: Vec<f64>,
    pub phase: Vec<f64>,
    pub a_plus: Vec<Complex64>,
    pub a_minus: Vec<Complex64>,
    log_symbol: LogSymbol,
    phase_spline: Spline,
    phase_ends: (f64, f64),
    /// `+1` for the standard factorization, `-1` when the roles of `A_+`
    /// and `A_-` have been exchanged.
    orientation: f64,
}

pub fn factor_symbol(t: &SymbolTable) -> Result<WienerHopfFactors> {
    if !(t.fitted_lower > 0.0) {
        return Err(Error::DegenerateKernel(format!(
            "symbol lower bound {} is not positive",
            t.fitted_lower
        )));
    }
    check_resolution(t, t.xi[0])?;
    let ls = LogSymbol::new(t)?;
    let phase_pos: Result<Vec<f64>> = t.xi.par_iter().map(|&x| pv_raw(&ls, x)).collect();
    let phase_pos = phase_pos?;

    let (lo, hi) = ls.range();
    let ext = 10f64.powf(PHASE_EXTENSION_DECADES);
    let n_ext = (16.0 * PHASE_EXTENSION_DECADES) as usize + 1;
    let below = log_space(lo / ext, lo, n_ext);
    let above = log_space(hi, hi * ext, n_ext);
    let below_p: Result<Vec<f64>> = below[..n_ext - 1].par_iter().map(|&x| pv_raw(&ls, x)).collect();
    let above_p: Result<Vec<f64>> = above[1..].par_iter().map(|&x| pv_raw(&ls, x)).collect();
    let mut u: Vec<f64> = below[..n_ext - 1].iter().map(|x| x.ln()).collect();
    let mut p = below_p?;
    u.extend(t.xi.iter().map(|x| x.ln()));
    p.extend(phase_pos.iter().copied());
    u.extend(above[1..].iter().map(|x| x.ln()));
    p.extend(above_p?);
    let phase_ends = (p[0], p[p.len() - 1]);
    let phase_spline = Spline::new(u, p);

    let n = t.xi.len();
    let mut xi = Vec::with_capacity(2 * n);
    let mut symbol = Vec::with_capacity(2 * n);
    let mut phase = Vec::with_capacity(2 * n);
    for i in (0..n).rev() {
        xi.push(-t.xi[i]);
        symbol.push(t.values[i]);
        phase.push(-phase_pos[i]);
    }
    for i in 0..n {
        xi.push(t.xi[i]);
        symbol.push(t.values[i]);
        phase.push(phase_pos[i]);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let a_plus = symbol
        .iter()
        .zip(&phase)
        .map(|(a, p)| Complex64::from_polar(a.sqrt(), -p / two_pi))
        .collect();
    let a_minus = symbol
        .iter()
        .zip(&phase)
        .map(|(a, p)| Complex64::from_polar(a.sqrt(), p / two_pi))
        .collect();
    Ok(WienerHopfFactors {
        s: t.s,
        xi,
        symbol,
        phase,
        a_plus,
        a_minus,
        log_symbol: ls,
        phase_spline,
        phase_ends,
        orientation: 1.0,
    })
}

impl WienerHopfFactors {
    /// Interpolated `P(xi)`, odd in `xi`, held constant past the phase table.
    pub fn phase_at(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let x = xi.abs();
        let u = x.ln();
        let xs = self.phase_spline.x();
        let v = if u <= xs[0] {
            self.phase_ends.0
        } else if u >= xs[xs.len() - 1] {
            self.phase_ends.1
        } else {
            self.phase_spline.eval(u)
        };
        v * xi.signum()
    }

    pub fn symbol_at(&self, xi: f64) -> f64 {
        self.log_symbol.a(xi)
    }

    pub fn log_symbol(&self) -> &LogSymbol {
        &self.log_symbol
    }

    pub fn a_minus_at(&self, xi: f64) -> Complex64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        Complex64::from_polar(
            self.symbol_at(xi).sqrt(),
            self.orientation * self.phase_at(xi) / two_pi,
        )
    }

    pub fn a_plus_at(&self, xi: f64) -> Complex64 {
        self.a_minus_at(xi).conj()
    }

    /// The factorization with `A_+` and `A_-` exchanged. Used to check that
    /// the barrier cross-check detects a wrong phase.
    pub fn swapped(&self) -> Self {
        let mut f = self.clone();
        std::mem::swap(&mut f.a_plus, &mut f.a_minus);
        f.orientation = -f.orientation;
        f
    }

    pub fn identity_report(&self) -> IdentityReport {
        let n = self.xi.len();
        let mut product: f64 = 0.0;
        let mut conj: f64 = 0.0;
        let mut reflect: f64 = 0.0;
        for i in 0..n {
            let a = self.symbol[i];
            product = product.max((self.a_plus[i] * self.a_minus[i] - a).norm() / a);
            conj = conj.max((self.a_plus[i].conj() - self.a_minus[i]).norm() / a.sqrt());
            let j = n - 1 - i;
            reflect = reflect.max((self.a_plus[j] - self.a_plus[i].conj()).norm() / a.sqrt());
        }
        IdentityReport {
            product,
            conjugation: conj,
            reflection: reflect,
        }
    }
}

/// Largest relative violations of `A_+ A_- = A`, `conj(A_+) = A_-` and
/// `A_+(-xi) = conj(A_+(xi))` on the grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    pub product: f64,
    pub conjugation: f64,
    pub reflection: f64,
}

/// Fourier transform `w = F[b]` of the half-line barrier,
/// `w(xi) = a / (xi A_-(xi))`, with `a = -i c` scaled so that `b(1) = 1`.
#[derive(Debug, Clone)]
pub struct BarrierSpectrum {
    pub xi: Vec<f64>,
    pub w: Vec<Complex64>,
    pub normalization: Complex64,
    factors: WienerHopfFactors,
}

pub fn barrier_spectrum(f: &WienerHopfFactors) -> Result<BarrierSpectrum> {
    if f.xi.iter().any(|&x| x == 0.0) {
        return Err(Error::Parameter("frequency grid contains zero".into()));
    }
    let b1 = unit_value(f)?;
    if !(b1.abs() > 1e-300) || !b1.is_finite() {
        return Err(Error::Fit(format!("unnormalizable barrier transform: b(1) = {b1}")));
    }
    let normalization = Complex64::new(0.0, -1.0 / b1);
    let w = f
        .xi
        .iter()
        .map(|&x| normalization / (x * f.a_minus_at(x)))
        .collect();
    Ok(BarrierSpectrum {
        xi: f.xi.clone(),
        w,
        normalization,
        factors: f.clone(),
    })
}

impl BarrierSpectrum {
    pub fn w_at(&self, xi: f64) -> Complex64 {
        self.normalization / (xi * self.factors.a_minus_at(xi))
    }

    pub fn factors(&self) -> &WienerHopfFactors {
        &self.factors
    }

    /// Beyond-table model `w(xi) ~ q |xi|^{-1-sigma}` for `xi > 0` large:
    /// returns `(q, sigma)`.
    fn high_tail(&self) -> (Complex64, f64) {
        let hi = self.factors.log_symbol.range().1 * 10f64.powf(PHASE_EXTENSION_DECADES);
        let sigma = 0.5 * self.factors.log_symbol.end_slopes().1;
        (self.w_at(hi) * hi.powf(1.0 + sigma), sigma)
    }
}

/// `b(1)` for the unnormalized transform `w0 = -i / (xi A_-(xi))`, i.e.
/// `(1/pi) Re int_0^inf w0(xi) (e^{i xi} - 1) dxi`.
fn unit_value(f: &WienerHopfFactors) -> Result<f64> {
    let w0 = |x: f64| Complex64::new(0.0, -1.0) / (x * f.a_minus_at(x));
    let (lo, hi) = f.log_symbol.range();
    let i = Complex64::i();

    // (0, lo): w0 ~ q x^{-1-sigma}, expand e^{ix} - 1.
    let sigma_lo = 0.5 * f.log_symbol.end_slopes().0;
    let q_lo = w0(lo) * lo.powf(1.0 + sigma_lo);
    let mut head = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for n in 1..40 {
        term *= i * lo / n as f64;
        let add = term / (n as f64 - sigma_lo);
        head += add;
        if add.norm() < 1e-17 {
            break;
        }
    }
    head *= q_lo * lo.powf(-sigma_lo);

    // [lo, hi]: numerical, real part only, on geometric panels.
    let re = |x: f64| (w0(x) * (Complex64::from_polar(1.0, x) - 1.0)).re;
    let mut body = 0.0;
    let edges = log_space(lo, hi, 241);
    for e in edges.windows(2) {
        body += integrate(re, e[0], e[1], &[], Tol::new(1e-14, 1e-11), "barrier normalization")?.value;
    }

    // (hi, inf): w0 ~ q x^{-1-sigma}; the constant part integrates in closed
    // form and the oscillatory part by its asymptotic expansion.
    let sigma_hi = 0.5 * f.log_symbol.end_slopes().1;
    let q_hi = w0(hi) * hi.powf(1.0 + sigma_hi);
    let minus_part = -q_hi * hi.powf(-sigma_hi) / sigma_hi;
    let osc = q_hi * oscillatory_power_tail(1.0 + sigma_hi, hi);
    let tail = osc + minus_part;

    Ok((head.re + body + tail.re) / std::f64::consts::PI)
}

/// `int_x^inf t^{-mu} e^{i t} dt` for large `x` by repeated integration by parts.
fn oscillatory_power_tail(mu: f64, x: f64) -> Complex64 {
    let i = Complex64::i();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = i * x.powf(-mu) * Complex64::from_polar(1.0, x);
    let mut m = mu;
    for _ in 0..30 {
        sum += coef;
        coef *= -i * m / x;
        m += 1.0;
        if coef.norm() < 1e-18 {
            break;
        }
    }
    sum
}
