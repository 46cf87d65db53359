//! Absolutely continuous parts of Lévy kernels.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points in R^1 or R^2; one-dimensional densities ignore the second slot.
pub type Point = [f64; 2];

pub fn norm(h: Point) -> f64 {
    h[0].hypot(h[1])
}

/// A symmetric nonnegative Lévy density `rho` on R^d, d in {1, 2}.
pub trait Density: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, h: Point) -> f64;

    /// A constant `E` with `rho(h) <= E |h|^{-d-2s}` for all `h`.
    fn envelope(&self) -> f64;

    /// Radii in `[lo, hi]` across which `rho` may jump.
    fn radial_breaks(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// `int_r^inf rho(t e) t^{d-1} dt` along the unit vector `e`, when a
    /// closed form exists.
    fn ray_tail(&self, _e: Point, _r: f64) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

fn radius_power(dim: usize, s: f64, r: f64) -> f64 {
    r.powf(-(dim as f64) - 2.0 * s)
}

/// `c |h|^{-d-2s}`.
#[derive(Debug, Clone)]
pub struct Stable {
    pub dim: usize,
    pub s: f64,
    pub c: f64,
}

impl Density for Stable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, h: Point) -> f64 {
        let r = norm(h);
        if r == 0.0 {
            return f64::INFINITY;
        }
        self.c * radius_power(self.dim, self.s, r)
    }
    fn envelope(&self) -> f64 {
        self.c
    }
    fn ray_tail(&self, _e: Point, r: f64) -> Option<f64> {
        Some(self.c * r.powf(-2.0 * self.s) / (2.0 * self.s))
    }
    fn describe(&self) -> String {
        format!("stable(d={}, s={}, c={})", self.dim, self.s, self.c)
    }
}

/// `c exp(-|h|/scale) |h|^{-d-2s}`.
#[derive(Debug, Clone)]
pub struct Tempered {
    pub dim: usize,
    pub s: f64,
    pub c: f64,
    pub scale: f64,
}

impl Density for Tempered {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, h: Point) -> f64 {
        let r = norm(h);
        if r == 0.0 {
            return f64::INFINITY;
        }
        self.c * (-r / self.scale).exp() * radius_power(self.dim, self.s, r)
    }
    fn envelope(&self) -> f64 {
        self.c
    }
    fn describe(&self) -> String {
        format!(
            "tempered_stable(d={}, s={}, c={}, scale={})",
            self.dim, self.s, self.c, self.scale
        )
    }
}

/// Log-periodic band: radii whose `log_q` has fractional part in `[lo, hi)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LogBand {
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

impl LogBand {
    fn contains(&self, r: f64) -> bool {
        let v = r.ln() / self.ratio.ln();
        let f = v - v.floor();
        f >= self.lo && f < self.hi
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let lq = self.ratio.ln();
        let k0 = (lo.ln() / lq).floor() as i64 - 1;
        let k1 = (hi.ln() / lq).ceil() as i64 + 1;
        let mut out = Vec::new();
        for k in k0..=k1 {
            for frac in [self.lo, self.hi] {
                let r = ((k as f64 + frac) * lq).exp();
                if r > lo && r < hi {
                    out.push(r);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

/// Stable profile restricted to a union of annuli and/or a log-periodic band.
#[derive(Debug, Clone)]
pub struct Banded {
    pub dim: usize,
    pub s: f64,
    pub c: f64,
    pub annuli: Vec<(f64, f64)>,
    pub band: Option<LogBand>,
}

impl Banded {
    fn inside(&self, r: f64) -> bool {
        self.annuli.iter().any(|&(a, b)| r >= a && r < b)
            || self.band.is_some_and(|b| b.contains(r))
    }
}

impl Density for Banded {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, h: Point) -> f64 {
        let r = norm(h);
        if r == 0.0 || !self.inside(r) {
            return 0.0;
        }
        self.c * radius_power(self.dim, self.s, r)
    }
    fn envelope(&self) -> f64 {
        self.c
    }
    fn radial_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .annuli
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&r| r > lo && r < hi)
            .collect();
        if let Some(b) = &self.band {
            out.extend(b.breaks(lo, hi));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
    fn describe(&self) -> String {
        format!(
            "banded(d={}, s={}, c={}, annuli={:?}, band={:?})",
            self.dim, self.s, self.c, self.annuli, self.band
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    amp: f64,
    freq: f64,
    angular: f64,
    phase: f64,
}

/// `c a(h) |h|^{-d-2s}` with a seeded multiplier `a` taking values in
/// `[lo, hi]`. The multiplier oscillates in `ln |h|` and, in two dimensions,
/// in the even angular harmonics, so `a(-h) = a(h)`.
#[derive(Debug, Clone)]
pub struct RandomField {
    pub dim: usize,
    pub s: f64,
    pub c: f64,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
    modes: Vec<Mode>,
}

impl RandomField {
    pub fn new(dim: usize, s: f64, c: f64, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let mut modes: Vec<Mode> = (0..n)
            .map(|_| Mode {
                amp: rng.random_range(0.2..1.0),
                freq: rng.random_range(0.3..3.0),
                angular: if dim == 2 {
                    rng.random_range(0..3) as f64
                } else {
                    0.0
                },
                phase: rng.random_range(0.0..2.0 * PI),
            })
            .collect();
        let total: f64 = modes.iter().map(|m| m.amp).sum();
        for m in &mut modes {
            m.amp /= total;
        }
        RandomField {
            dim,
            s,
            c,
            lo,
            hi,
            seed,
            modes,
        }
    }

    pub fn multiplier(&self, h: Point) -> f64 {
        let r = norm(h);
        let lr = r.ln();
        let ang = if self.dim == 2 { h[1].atan2(h[0]) } else { 0.0 };
        let mut v = 0.0;
        for m in &self.modes {
            v += m.amp * (m.freq * lr + 2.0 * m.angular * ang + m.phase).cos();
        }
        self.lo + (self.hi - self.lo) * 0.5 * (1.0 + v)
    }
}

impl Density for RandomField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, h: Point) -> f64 {
        let r = norm(h);
        if r == 0.0 {
            return f64::INFINITY;
        }
        self.c * self.multiplier(h) * radius_power(self.dim, self.s, r)
    }
    fn envelope(&self) -> f64 {
        self.c * self.hi
    }
    fn describe(&self) -> String {
        format!(
            "random(d={}, s={}, c={}, range=[{}, {}], seed={})",
            self.dim, self.s, self.c, self.lo, self.hi, self.seed
        )
    }
}

/// One-dimensional density given by `g(ln |t|) |t|^{-1-2s}` with `g`
/// tabulated and interpolated linearly, held constant beyond the table.
#[derive(Debug, Clone)]
pub struct Tabulated {
    pub s: f64,
    pub log_t: Vec<f64>,
    pub g: Vec<f64>,
}

impl Density for Tabulated {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, h: Point) -> f64 {
        let t = h[0].abs();
        if t == 0.0 {
            return f64::INFINITY;
        }
        crate::interp::linear(&self.log_t, &self.g, t.ln()) * t.powf(-1.0 - 2.0 * self.s)
    }
    fn envelope(&self) -> f64 {
        self.g.iter().cloned().fold(0.0, f64::max)
    }
    fn describe(&self) -> String {
        format!("tabulated(s={}, points={})", self.s, self.g.len())
    }
}

/// `r^{d+2s} rho(r h)`: the density of the rescaled kernel `r^{2s} K(r .)`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub inner: Arc<dyn Density>,
    pub s: f64,
    pub r: f64,
}

impl Density for Rescaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, h: Point) -> f64 {
        let d = self.dim() as f64;
        self.r.powf(d + 2.0 * self.s) * self.inner.eval([self.r * h[0], self.r * h[1]])
    }
    fn envelope(&self) -> f64 {
        self.inner.envelope()
    }
    fn radial_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.inner
            .radial_breaks(lo * self.r, hi * self.r)
            .into_iter()
            .map(|b| b / self.r)
            .collect()
    }
    fn ray_tail(&self, e: Point, t: f64) -> Option<f64> {
        self.inner
            .ray_tail(e, t * self.r)
            .map(|v| v * self.r.powf(2.0 * self.s))
    }
    fn describe(&self) -> String {
        format!("rescaled({}, r={})", self.inner.describe(), self.r)
    }
}

/// A user-supplied density.
#[derive(Clone)]
pub struct Custom {
    pub dim: usize,
    pub envelope: f64,
    pub f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub label: String,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.label)
    }
}

impl Density for Custom {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, h: Point) -> f64 {
        (self.f)(h)
    }
    fn envelope(&self) -> f64 {
        self.envelope
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_multiplier_stays_in_range_and_is_even() {
        let f = RandomField::new(2, 0.4, 1.0, 0.5, 2.0, 7);
        for i in 0..200 {
            let r = 1e-3 * 1.07f64.powi(i);
            let a = 0.37 * i as f64;
            let h = [r * a.cos(), r * a.sin()];
            let m = f.multiplier(h);
            assert!((0.5..=2.0).contains(&m));
            assert!((m - f.multiplier([-h[0], -h[1]])).abs() < 1e-12);
        }
    }

    #[test]
    fn log_band_membership_matches_breaks() {
        let b = LogBand {
            ratio: 2.0,
            lo: 0.0,
            hi: 0.5,
        };
        assert!(b.contains(1.2));
        assert!(!b.contains(1.6));
        let br = b.breaks(0.9, 4.1);
        assert_eq!(br.len(), 5);
        assert!((br[0] - 1.0).abs() < 1e-12 && (br[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
