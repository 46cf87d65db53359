//! Moduli of continuity and the s-Dini integral `int_0^1 w(t)^s / t dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tol};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Modulus {
    Zero,
    /// `t^alpha`.
    Power { alpha: f64 },
    /// `ln(e/t)^{-p}`.
    LogPower { p: f64 },
    /// Linear interpolation of `w` in `ln t` on the nodes `t` (increasing,
    /// ending at 1), continued below the table by the first-segment power law.
    Tabulated { t: Vec<f64>, w: Vec<f64> },
}

impl Modulus {
    /// `w(e^{-u})`, usable far beyond the underflow of `e^{-u}`.
    pub fn eval_log(&self, u: f64) -> f64 {
        match self {
            Modulus::Zero => 0.0,
            Modulus::Power { alpha } => (-alpha * u).exp(),
            Modulus::LogPower { p } => (1.0 + u).powf(-p),
            Modulus::Tabulated { t, w } => {
                let lt = -u;
                let l0 = t[0].ln();
                if lt <= l0 {
                    let l1 = t[1].ln();
                    let slope = (w[1].ln() - w[0].ln()) / (l1 - l0);
                    return (w[0].ln() + slope * (lt - l0)).exp();
                }
                let n = t.len();
                for i in 0..n - 1 {
                    let (a, b) = (t[i].ln(), t[i + 1].ln());
                    if lt <= b {
                        let f = (lt - a) / (b - a);
                        return w[i] * (1.0 - f) + w[i + 1] * f;
                    }
                }
                w[n - 1]
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.eval_log(-t.ln())
    }

    /// Checks that the modulus is nonnegative and nondecreasing on `(0, 1]`;
    /// tabulated moduli must also be concave (64 sampled points).
    pub fn validate(&self) -> Result<()> {
        match self {
            Modulus::Zero => return Ok(()),
            Modulus::Power { alpha } if !(*alpha > 0.0 && *alpha <= 1.0) => {
                return Err(Error::Parameter(format!("power modulus needs 0 < alpha <= 1, got {alpha}")));
            }
            Modulus::LogPower { p } if !(*p > 0.0) => {
                return Err(Error::Parameter(format!("log-power modulus needs p > 0, got {p}")));
            }
            Modulus::Tabulated { t, w } => {
                if t.len() < 2 || t.len() != w.len() {
                    return Err(Error::Parameter("tabulated modulus needs matching t and w with >= 2 entries".into()));
                }
                if t.windows(2).any(|p| p[1] <= p[0]) || t[0] <= 0.0 || (t[t.len() - 1] - 1.0).abs() > 1e-12 {
                    return Err(Error::Parameter("tabulated modulus needs increasing t in (0, 1] ending at 1".into()));
                }
                if w.iter().any(|&v| !(v > 0.0)) || w.windows(2).any(|p| p[1] < p[0]) {
                    return Err(Error::Parameter("tabulated modulus must be positive and nondecreasing".into()));
                }
                let pts: Vec<f64> = (0..64).map(|i| t[0] + (1.0 - t[0]) * i as f64 / 63.0).collect();
                for win in pts.windows(3) {
                    let (a, b, c) = (win[0], win[1], win[2]);
                    let mid = self.eval(a) + (self.eval(c) - self.eval(a)) * (b - a) / (c - a);
                    if self.eval(b) < mid - 1e-12 * mid.abs() {
                        return Err(Error::Parameter(format!("tabulated modulus is not concave near t = {b}")));
                    }
                }
            }
            _ => {}
        }
        let mut prev = 0.0;
        for i in 0..64 {
            let t = 2f64.powf(-(63 - i) as f64 / 4.0);
            let v = self.eval(t);
            if v < prev - 1e-15 {
                return Err(Error::Parameter(format!("modulus decreases near t = {t}")));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiniResult {
    pub finite: bool,
    /// Integral value when finite; partial sum when divergent.
    pub value: f64,
    pub error: f64,
    /// Decay exponent `q` of the integrand `~ u^{-q}` in `u = ln(1/t)`
    /// estimated from the last dyadic blocks; `q <= 1` signals divergence.
    pub tail_rate: f64,
    /// Integrals over `u in [0, 1]` and then `[2^k, 2^{k+1}]`.
    pub blocks: Vec<f64>,
}

/// Sums positive block contributions `b_k` (blocks of doubling length),
/// estimating the tail geometrically from the last ratio. Returns
/// `(sum, error, rate, finite, blocks)`.
pub(crate) fn dyadic_series<F: FnMut(usize) -> Result<f64>>(
    mut block: F,
    max_blocks: usize,
    rel_tol: f64,
) -> Result<(f64, f64, f64, bool, Vec<f64>)> {
    let mut blocks = Vec::new();
    let mut sum = 0.0;
    let mut rate = f64::INFINITY;
    let mut slow = 0;
    for k in 0..max_blocks {
        let b = block(k)?;
        blocks.push(b);
        sum += b;
        if b == 0.0 && k >= 2 {
            if blocks[k - 1] == 0.0 {
                return Ok((sum, 0.0, f64::INFINITY, true, blocks));
            }
            continue;
        }
        if k < 3 || blocks[k - 1] <= 0.0 {
            continue;
        }
        let ratio = b / blocks[k - 1];
        // A block sum of u^{-q} over [U, 2U] scales like U^{1-q}.
        rate = 1.0 - ratio.log2();
        if ratio < 1.0 {
            let tail = b * ratio / (1.0 - ratio);
            let prev_ratio = blocks[k - 1] / blocks[k - 2];
            let settled = (ratio - prev_ratio).abs() < 0.05 * (1.0 - ratio);
            if (settled && tail <= rel_tol * sum) || tail <= 1e-3 * rel_tol * sum {
                let error = tail * (ratio - prev_ratio).abs() / (1.0 - ratio) + 1e-16 * sum;
                return Ok((sum + tail, error, rate, true, blocks));
            }
        }
        if rate <= 1.0 + 1e-3 && k >= 12 {
            slow += 1;
            if slow >= 6 {
                return Ok((sum, f64::INFINITY, rate, false, blocks));
            }
        } else {
            slow = 0;
        }
    }
    Ok((sum, f64::INFINITY, rate, rate > 1.0 + 1e-3, blocks))
}

/// `int_0^1 w(t)^s / t dt = int_0^inf w(e^{-u})^s du`, summed over doubling
/// blocks in `u` with a geometric tail estimate; slowly decaying blocks flag
/// divergence.
pub fn dini_integral(w: &Modulus, s: f64) -> Result<DiniResult> {
    dini_integral_below(w, s, 1.0)
}

/// `int_0^r w(t)^s / t dt`.
pub fn dini_integral_below(w: &Modulus, s: f64, r: f64) -> Result<DiniResult> {
    w.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("order s must lie in (0, 1), got {s}")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Parameter(format!("upper limit must lie in (0, 1], got {r}")));
    }
    let u0 = -r.ln();
    let f = |u: f64| w.eval_log(u).powf(s);
    let tol = Tol::new(1e-17, 1e-13);
    let (value, error, rate, finite, blocks) = dyadic_series(
        |k| {
            let (a, b) = if k == 0 { (0.0, 1.0) } else { (2f64.powi(k as i32 - 1), 2f64.powi(k as i32)) };
            Ok(integrate(f, u0 + a, u0 + b, &[], tol, "dini block")?.value)
        },
        200,
        1e-12,
    )?;
    if finite && !value.is_finite() {
        return Err(Error::DivergentTail("non-finite Dini sum".into()));
    }
    Ok(DiniResult {
        finite,
        value,
        error,
        tail_rate: rate,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_modulus_has_closed_form_integral() {
        for (alpha, s) in [(0.5, 0.5), (0.25, 0.3), (1.0, 0.9)] {
            let r = dini_integral(&Modulus::Power { alpha }, s).unwrap();
            assert!(r.finite);
            assert!((r.value - 1.0 / (s * alpha)).abs() < 1e-9, "{} vs {}", r.value, 1.0 / (s * alpha));
        }
    }

    #[test]
    fn log_power_at_critical_exponents() {
        for s in [0.3, 0.5, 0.7] {
            let r = dini_integral(&Modulus::LogPower { p: 2.0 / s }, s).unwrap();
            assert!(r.finite && (r.value - 1.0).abs() < 1e-6, "s={s}: {}", r.value);
            let d = dini_integral(&Modulus::LogPower { p: 1.0 / s }, s).unwrap();
            assert!(!d.finite, "s={s}: {:?}", d.value);
            assert!(d.tail_rate <= 1.0 + 1e-3);
        }
    }

    #[test]
    fn tabulated_non_concave_is_rejected() {
        let bad = Modulus::Tabulated {
            t: vec![0.01, 0.5, 1.0],
            w: vec![0.01, 0.02, 1.0],
        };
        assert!(bad.validate().is_err());
        let good = Modulus::Tabulated {
            t: vec![0.01, 0.5, 1.0],
            w: vec![0.3, 0.9, 1.0],
        };
        good.validate().unwrap();
        assert!(dini_integral(&good, 0.5).unwrap().finite);
    }
}
