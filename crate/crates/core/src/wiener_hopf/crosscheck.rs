//! Comparison of a solver barrier against the Wiener–Hopf transform model.
//!
//! The solver profile `b(t)` on `[0, T]` is sampled with spacing `H`,
//! tapered by `cos^4(pi t / 2T)` and transformed by direct summation. The
//! model is the periodized transform `sum_k w(xi + 2 pi k / H)`, since
//! sampling folds all frequencies into `(-pi/H, pi/H)`. A real scale is
//! fitted as the band mean of `Re(F / W)` and the residual is the RMS of
//! `|F / (a W) - 1|` over log-spaced band frequencies in
//! `[8 pi / T, pi / (4H)]`.

use num_complex::Complex64;
use serde::Serialize;

use super::BarrierSpectrum;
use crate::error::{Error, Result};
use crate::interp::log_space;

#[derive(Debug, Clone, Copy)]
pub struct CrosscheckOptions {
    /// Window length `T`; it should stay well inside the region where the
    /// finite-domain barrier approximates the half-line one.
    pub window: f64,
    pub target_samples: usize,
    pub band_points: usize,
    pub tolerance: f64,
    pub alias_terms: usize,
}

impl CrosscheckOptions {
    pub fn new(window: f64) -> Self {
        CrosscheckOptions {
            window,
            target_samples: 512,
            band_points: 48,
            tolerance: 0.05,
            alias_terms: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrosscheckSample {
    pub xi: f64,
    pub measured_re: f64,
    pub measured_im: f64,
    pub model_re: f64,
    pub model_im: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub band: (f64, f64),
    pub sample_spacing: f64,
    pub fitted_scale: f64,
    pub residual_rms: f64,
    pub residual_max: f64,
    pub pass: bool,
    pub samples: Vec<CrosscheckSample>,
}

/// `values[j] = b(j h)` for `j = 0, 1, ...`.
pub fn spectral_crosscheck(
    spec: &BarrierSpectrum,
    values: &[f64],
    h: f64,
    opts: CrosscheckOptions,
) -> Result<CrosscheckReport> {
    let t_win = opts.window;
    if !(h > 0.0 && t_win > 0.0) {
        return Err(Error::Parameter("spacing and window must be positive".into()));
    }
    let stride = ((t_win / (opts.target_samples as f64 * h)).round() as usize).max(1);
    let hs = stride as f64 * h;
    let n = (t_win / hs).floor() as usize;
    if n * stride >= values.len() {
        return Err(Error::Parameter(format!(
            "window {t_win} exceeds the sampled range {}",
            (values.len() - 1) as f64 * h
        )));
    }
    let lo = 8.0 * std::f64::consts::PI / t_win;
    let hi = std::f64::consts::PI / (4.0 * hs);
    if !(hi > lo * 1.5) {
        return Err(Error::EmptyBand(format!(
            "band [{lo:.4}, {hi:.4}] is empty; use more samples or a longer window"
        )));
    }
    let band = log_space(lo, hi, opts.band_points.max(4));

    let taper = |t: f64| (std::f64::consts::PI * t / (2.0 * t_win)).cos().powi(4);
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|j| {
            let t = j as f64 * hs;
            (t, values[j * stride] * taper(t))
        })
        .collect();

    let (q, sigma) = spec.high_tail();
    let two_pi = 2.0 * std::f64::consts::PI;
    let kmax = opts.alias_terms as f64;
    let model = |xi: f64| -> Complex64 {
        let mut w = spec.w_at(xi);
        for k in 1..=opts.alias_terms {
            let d = two_pi * k as f64 / hs;
            w += spec.w_at(xi + d) + spec.w_at(xi - d);
        }
        let e_plus = xi + two_pi * (kmax + 0.5) / hs;
        let e_minus = two_pi * (kmax + 0.5) / hs - xi;
        w += hs / two_pi * (q * e_plus.powf(-sigma) + q.conj() * e_minus.powf(-sigma)) / sigma;
        w
    };

    let mut ratios = Vec::with_capacity(band.len());
    let mut rows = Vec::with_capacity(band.len());
    for &xi in &band {
        let mut f = Complex64::new(0.0, 0.0);
        for &(t, v) in &samples {
            f += v * Complex64::from_polar(1.0, -xi * t);
        }
        f *= hs;
        let w = model(xi);
        ratios.push(f / w);
        rows.push((xi, f, w));
    }
    let a = ratios.iter().map(|r| r.re).sum::<f64>() / ratios.len() as f64;
    if !(a.abs() > 0.0) {
        return Err(Error::Fit("fitted scale vanishes".into()));
    }
    let errs: Vec<f64> = ratios.iter().map(|r| (r / a - 1.0).norm()).collect();
    let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    let max = errs.iter().cloned().fold(0.0, f64::max);
    let samples = rows
        .iter()
        .zip(&errs)
        .map(|(&(xi, f, w), &e)| CrosscheckSample {
            xi,
            measured_re: f.re,
            measured_im: f.im,
            model_re: a * w.re,
            model_im: a * w.im,
            relative_error: e,
        })
        .collect();
    Ok(CrosscheckReport {
        band: (lo, hi),
        sample_spacing: hs,
        fitted_scale: a,
        residual_rms: rms,
        residual_max: max,
        pass: rms <= opts.tolerance,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{default_grid, SymbolTable};
    use crate::wiener_hopf::{barrier_spectrum, factor_symbol};

    fn stable_spectrum(s: f64) -> BarrierSpectrum {
        let t = SymbolTable::from_fn(s, default_grid(), |x| x.powf(2.0 * s)).unwrap();
        barrier_spectrum(&factor_symbol(&t).unwrap()).unwrap()
    }

    #[test]
    fn exact_power_profile_passes_and_swapped_phase_fails() {
        let s = 0.5;
        let h = 1.0 / 64.0;
        let values: Vec<f64> = (0..2000).map(|j| (j as f64 * h).powf(s)).collect();
        let spec = stable_spectrum(s);
        let rep = spectral_crosscheck(&spec, &values, h, CrosscheckOptions::new(16.0)).unwrap();
        assert!(rep.residual_rms < 0.01, "rms {}", rep.residual_rms);
        assert!((rep.fitted_scale - 1.0).abs() < 0.01, "scale {}", rep.fitted_scale);

        let wrong = barrier_spectrum(&spec.factors().swapped()).unwrap();
        let bad = spectral_crosscheck(&wrong, &values, h, CrosscheckOptions::new(16.0)).unwrap();
        assert!(!bad.pass, "swapped phase residual {}", bad.residual_rms);
    }

    #[test]
    fn tiny_window_has_empty_band() {
        let spec = stable_spectrum(0.5);
        let values = vec![0.0; 100];
        let mut o = CrosscheckOptions::new(0.5);
        o.target_samples = 16;
        let r = spectral_crosscheck(&spec, &values, 0.01, o);
        assert!(matches!(r, Err(Error::EmptyBand(_))));
    }
}
