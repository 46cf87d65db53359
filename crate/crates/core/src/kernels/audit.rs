//! Dyadic scan of the two-sided scale-invariant ellipticity bounds.
//!
//! Upper: `sup_r r^{2s} K({r < |h| <= 2r})`.
//! Lower: `inf_r inf_e r^{2s-2} int_{0 < |h| <= r} (h.e)^2 K(dh)`.

use serde::Serialize;

use super::{LevyKernel, Moment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaleRow {
    pub r: f64,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub upper_const: f64,
    pub lower_const: f64,
    pub scanned_range: (f64, f64),
    pub passes: bool,
    pub rows: Vec<ScaleRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    pub r_min: f64,
    pub r_max: f64,
    pub n_directions: usize,
    /// Return a report instead of an error when the lower bound vanishes.
    pub allow_degenerate: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            r_min: 2f64.powi(-20),
            r_max: 2f64.powi(10),
            n_directions: 16,
            allow_degenerate: false,
        }
    }
}

fn min_directional(m: &Moment, dim: usize, n_dir: usize) -> f64 {
    if dim == 1 {
        return m.m11;
    }
    (0..n_dir)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / n_dir as f64;
            m.directional([a.cos(), a.sin()])
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn audit_ellipticity(k: &LevyKernel, opts: AuditOptions) -> Result<EllipticityReport> {
    if !(opts.r_min > 0.0 && opts.r_max >= opts.r_min) {
        return Err(Error::Parameter("scan range must satisfy 0 < r_min <= r_max".into()));
    }
    let s = k.s();
    let n_dir = opts.n_directions.max(1);
    let mut radii = vec![opts.r_min];
    while radii.last().unwrap() * 2.0 <= opts.r_max * (1.0 + 1e-12) {
        radii.push(radii.last().unwrap() * 2.0);
    }
    let mut ball = k.ball_moment(opts.r_min, 1e-12)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let upper = r.powf(2.0 * s) * k.shell_mass(r, 2.0 * r)?;
        let lower = r.powf(2.0 * s - 2.0) * min_directional(&ball, k.dim(), n_dir);
        rows.push(ScaleRow { r, upper, lower });
        ball = ball.add(k.shell_moment(r, 2.0 * r)?);
    }
    let upper_const = rows.iter().map(|r| r.upper).fold(0.0, f64::max);
    let lower_const = rows.iter().map(|r| r.lower).fold(f64::INFINITY, f64::min);
    let passes = upper_const.is_finite() && lower_const > 0.0;
    if lower_const <= 0.0 && !opts.allow_degenerate {
        let at = rows.iter().find(|r| r.lower <= 0.0).map_or(0.0, |r| r.r);
        return Err(Error::DegenerateKernel(format!(
            "directional second moment vanishes at scale r = {at:e}"
        )));
    }
    Ok(EllipticityReport {
        upper_const,
        lower_const,
        scanned_range: (opts.r_min, *radii.last().unwrap()),
        passes,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{banded, lattice, stable};

    #[test]
    fn stable_constants_are_scale_free() {
        let s = 0.4;
        let k = stable(1, s, 1.0).unwrap();
        let rep = audit_ellipticity(&k, AuditOptions { r_min: 1e-3, r_max: 1e3, ..Default::default() }).unwrap();
        let up = 2.0 * (1.0 - 2f64.powf(-2.0 * s)) / (2.0 * s);
        let lo = 2.0 / (2.0 - 2.0 * s);
        for row in &rep.rows {
            assert!((row.upper - up).abs() < 1e-8 * up);
            assert!((row.lower - lo).abs() < 1e-8 * lo);
        }
    }

    #[test]
    fn annulus_only_kernel_is_degenerate() {
        let k = banded(1, 0.5, 1.0, vec![(1.0, 2.0)], None).unwrap();
        let err = audit_ellipticity(&k, AuditOptions { r_min: 0.25, r_max: 4.0, ..Default::default() });
        assert!(matches!(err, Err(Error::DegenerateKernel(_))));
        let rep = audit_ellipticity(
            &k,
            AuditOptions {
                r_min: 0.25,
                r_max: 4.0,
                allow_degenerate: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!rep.passes);
    }

    #[test]
    fn lattice_shell_convention_places_boundary_atoms_inside() {
        // Atoms at 2^k, scan starting on an atom radius: shell (1,2] holds the atom at 2.
        let s = 0.5;
        let k = lattice(1, s, 1.0, -30, 30).unwrap();
        let rep = audit_ellipticity(&k, AuditOptions { r_min: 1.0, r_max: 8.0, ..Default::default() }).unwrap();
        // r^{2s} * 2 * 2^{-2s} with r = 1, atom at 2 on both sides.
        assert!((rep.rows[0].upper - 2.0 * 2f64.powf(-2.0 * s)).abs() < 1e-12);
    }
}
