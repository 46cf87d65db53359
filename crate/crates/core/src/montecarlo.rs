//! Exit times of the one-dimensional Lévy process generated by `-L`.
//!
//! Jumps of size at most `delta` are replaced by a Brownian motion with the
//! same variance; larger jumps arrive as a compound Poisson process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::LevyKernel;
use crate::solver::special::BoundScan;

/// Number of quantiles of the density jump law.
pub const QUANTILES: usize = 4096;
const TABLE_STEPS_PER_OCTAVE: f64 = 16.0;
const TABLE_MIN_FRACTION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathConfig {
    /// Small-jump threshold.
    pub delta: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Paths still inside at this time count as unfinished.
    pub horizon: f64,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Parameter("path config needs delta, dt and horizon > 0".into()));
        }
        if self.paths < 100 {
            return Err(Error::Parameter(format!("path count must be at least 100, got {}", self.paths)));
        }
        Ok(())
    }
}

/// Small-jump variance and large-jump law of a one-dimensional kernel.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    pub delta: f64,
    /// `int_{|h| <= delta} h^2 K(dh)`.
    pub variance: f64,
    /// `K(|h| > delta)`.
    pub rate: f64,
    atom_mass: f64,
    atom_cum: Vec<f64>,
    atom_loc: Vec<f64>,
    /// Radii at survival fractions `1 - j / QUANTILES` of the density part.
    quantiles: Vec<f64>,
    /// Power-law decay of the density survival beyond the last quantile.
    tail_exponent: f64,
}

impl JumpLaw {
    pub fn new(k: &LevyKernel, delta: f64) -> Result<JumpLaw> {
        if k.dim() != 1 {
            return Err(Error::Parameter("exit-time simulation needs a one-dimensional kernel".into()));
        }
        let variance = k.ball_moment(delta, 1e-10)?.m11;
        let mut atom_loc = Vec::new();
        let mut atom_cum = Vec::new();
        let mut atom_mass = 0.0;
        for a in k.atoms() {
            if a.radius() > delta {
                atom_mass += a.mass;
                atom_cum.push(atom_mass);
                atom_loc.push(a.loc[0]);
            }
        }
        let density_mass = k.density_tail_mass(delta)?;
        let (quantiles, tail_exponent) = if density_mass > 0.0 {
            density_quantiles(k, delta, density_mass)?
        } else {
            (Vec::new(), 0.0)
        };
        Ok(JumpLaw {
            delta,
            variance,
            rate: atom_mass + density_mass,
            atom_mass,
            atom_cum,
            atom_loc,
            quantiles,
            tail_exponent,
        })
    }

    pub fn sample_jump<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.rate;
        if u < self.atom_mass {
            let i = self.atom_cum.partition_point(|&c| c <= u).min(self.atom_loc.len() - 1);
            return self.atom_loc[i];
        }
        let r = self.sample_radius(rng.random::<f64>());
        if rng.random::<bool>() {
            r
        } else {
            -r
        }
    }

    /// Radius with density survival fraction `1 - u`.
    fn sample_radius(&self, u: f64) -> f64 {
        let pos = u * QUANTILES as f64;
        let j = pos.floor() as usize;
        if j + 1 < QUANTILES {
            // Log-radius is interpolated against log-survival.
            let (sa, sb) = ((QUANTILES - j) as f64, (QUANTILES - j - 1) as f64);
            let f = (sa.ln() - ((1.0 - u) * QUANTILES as f64).ln()) / (sa.ln() - sb.ln());
            let (a, b) = (self.quantiles[j].ln(), self.quantiles[j + 1].ln());
            return (a + f * (b - a)).exp();
        }
        let q = ((1.0 - u) * QUANTILES as f64).max(1e-300);
        self.quantiles[QUANTILES - 1] * q.powf(-1.0 / self.tail_exponent)
    }
}

/// Quantile radii of the density jump law on `|h| > delta`, from a log-grid
/// table of the survival function.
fn density_quantiles(k: &LevyKernel, delta: f64, total: f64) -> Result<(Vec<f64>, f64)> {
    let step = 2f64.powf(1.0 / TABLE_STEPS_PER_OCTAVE);
    let mut r = vec![delta];
    let mut surv = vec![1.0];
    loop {
        let next = r[r.len() - 1] * step;
        let sv = k.density_tail_mass(next)? / total;
        r.push(next);
        surv.push(sv);
        if sv < TABLE_MIN_FRACTION || next > k.tail_cutoff {
            break;
        }
    }
    let n = r.len();
    let last = (surv[n - 2].ln() - surv[n - 1].ln()) / (r[n - 1].ln() - r[n - 2].ln());
    let tail_exponent = if last.is_finite() && last > 0.0 { last } else { 2.0 * k.s() };
    let mut quantiles = Vec::with_capacity(QUANTILES);
    let mut i = 0;
    for j in 0..QUANTILES {
        let target = 1.0 - j as f64 / QUANTILES as f64;
        while i + 2 < n && surv[i + 1] > target {
            i += 1;
        }
        let (la, lb) = (surv[i].ln(), surv[i + 1].ln());
        let f = if la > lb { ((la - target.ln()) / (la - lb)).clamp(0.0, 1.0) } else { 0.0 };
        quantiles.push((r[i].ln() + f * (r[i + 1].ln() - r[i].ln())).exp());
    }
    Ok((quantiles, tail_exponent))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitEstimate {
    pub x: f64,
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub ci_halfwidth: f64,
    pub paths: usize,
    /// Paths still inside at the horizon, counted with exit time = horizon.
    pub unfinished: usize,
}

/// Exit time of one path started at `x`, or `None` past the horizon.
fn exit_time(law: &JumpLaw, x0: f64, r: f64, cfg: &PathConfig, rng: &mut ChaCha8Rng) -> Option<f64> {
    let sigma = law.variance.sqrt();
    let sdt = sigma * cfg.dt.sqrt();
    let mut next_jump = if law.rate > 0.0 {
        rng.sample::<f64, _>(Exp1) / law.rate
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    let mut x = x0;
    loop {
        if t + cfg.dt < next_jump {
            t += cfg.dt;
            if sigma > 0.0 {
                x += sdt * rng.sample::<f64, _>(StandardNormal);
            }
        } else {
            let dt = next_jump - t;
            if sigma > 0.0 {
                x += sigma * dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            t = next_jump;
            x += law.sample_jump(rng);
            next_jump += rng.sample::<f64, _>(Exp1) / law.rate;
        }
        if x <= 0.0 || x >= r {
            return Some(t);
        }
        if t >= cfg.horizon {
            return None;
        }
    }
}

fn estimate_with(law: &JumpLaw, x: f64, r: f64, cfg: &PathConfig, stream: u64) -> Result<ExitEstimate> {
    if !(x > 0.0 && x < r) {
        return Ok(ExitEstimate {
            x,
            mean: 0.0,
            ci_halfwidth: 0.0,
            paths: cfg.paths,
            unfinished: 0,
        });
    }
    let times: Vec<Option<f64>> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((stream << 32) | p);
            exit_time(law, x, r, cfg, &mut rng)
        })
        .collect();
    let unfinished = times.iter().filter(|t| t.is_none()).count();
    if unfinished * 100 > cfg.paths {
        return Err(Error::Horizon {
            exited: cfg.paths - unfinished,
            paths: cfg.paths,
        });
    }
    let n = cfg.paths as f64;
    let vals = times.iter().map(|t| t.unwrap_or(cfg.horizon));
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(ExitEstimate {
        x,
        mean,
        ci_halfwidth: 1.96 * (var / n).sqrt(),
        paths: cfg.paths,
        unfinished,
    })
}

/// Mean exit time from `(0, r)` of the process started at `x`.
pub fn estimate_exit_time(k: &LevyKernel, x: f64, r: f64, cfg: &PathConfig) -> Result<ExitEstimate> {
    cfg.validate()?;
    let law = JumpLaw::new(k, cfg.delta)?;
    estimate_with(&law, x, r, cfg, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitProfile {
    pub r: f64,
    pub s: f64,
    pub rows: Vec<ExitEstimate>,
    /// Ratios `mean / (x ∧ (r - x))^s` over the interior points.
    pub bound: BoundScan,
}

impl ExitProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,mean,ci\n");
        for e in &self.rows {
            out += &format!("{},{},{}\n", e.x, e.mean, e.ci_halfwidth);
        }
        out
    }
}

/// Exit-time estimates at each `x`; point `i` uses the RNG streams
/// `(i << 32) | path`, so every row is reproducible on its own.
pub fn exit_time_profile(k: &LevyKernel, r: f64, xs: &[f64], cfg: &PathConfig) -> Result<ExitProfile> {
    cfg.validate()?;
    let law = JumpLaw::new(k, cfg.delta)?;
    let mut rows = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        rows.push(estimate_with(&law, x, r, cfg, i as u64)?);
    }
    let s = k.s();
    let bound = BoundScan::from_ratios(
        rows.iter()
            .filter(|e| e.x > 0.0 && e.x < r)
            .map(|e| e.mean / e.x.min(r - e.x).powf(s)),
    );
    Ok(ExitProfile { r, s, rows, bound })
}
