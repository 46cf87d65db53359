//! Projection of a two-dimensional kernel onto a line through the origin.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use super::density::{Density, Tabulated};
use super::{Atom, LevyKernel};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tol};

/// Points per octave of the tabulated marginal density.
const PER_OCTAVE: usize = 8;
const T_MIN: f64 = 1e-8;
const T_MAX: f64 = 1e8;

/// Marginal of `K` along the unit direction `theta`: the one-dimensional
/// kernel acting on functions of `x . theta`.
pub fn project_to_direction(k: &LevyKernel, theta: [f64; 2]) -> Result<LevyKernel> {
    if k.dim() != 2 {
        return Err(Error::Parameter("projection needs a two-dimensional kernel".into()));
    }
    let n = theta[0].hypot(theta[1]);
    if !(n > 0.0) {
        return Err(Error::Parameter("direction must be nonzero".into()));
    }
    let th = [theta[0] / n, theta[1] / n];
    let perp = [-th[1], th[0]];
    let s = k.s();

    let density = match k.density() {
        None => None,
        Some(d) => {
            let octaves = (T_MAX / T_MIN).log2();
            let npts = (octaves * PER_OCTAVE as f64).round() as usize + 1;
            let log_t = crate::interp::lin_space(T_MIN.ln(), T_MAX.ln(), npts);
            let mut g = Vec::with_capacity(npts);
            for &lt in &log_t {
                let t = lt.exp();
                let v = marginal(d.as_ref(), th, perp, t)?;
                g.push(v * t.powf(1.0 + 2.0 * s));
            }
            Some(Arc::new(Tabulated { s, log_t, g }) as Arc<dyn Density>)
        }
    };

    let atoms: Vec<Atom> = k
        .atoms()
        .iter()
        .filter_map(|a| {
            let t = a.loc[0] * th[0] + a.loc[1] * th[1];
            (t.abs() > 1e-12 * a.radius()).then_some(Atom {
                loc: [t, 0.0],
                mass: a.mass,
            })
        })
        .collect();
    LevyKernel::new(
        1,
        s,
        density,
        atoms,
        format!("{} projected on ({:.4}, {:.4})", k.label(), th[0], th[1]),
    )
}

/// `int_R rho(t theta + v perp) dv` for `t > 0`.
fn marginal(d: &dyn Density, th: [f64; 2], perp: [f64; 2], t: f64) -> Result<f64> {
    let mut breaks: Vec<f64> = d
        .radial_breaks(t, f64::MAX)
        .into_iter()
        .take(400)
        .flat_map(|b| {
            let phi = (t / b).acos();
            [-phi, phi]
        })
        .collect();
    breaks.push(0.0);
    let f = |phi: f64| {
        let tan = phi.tan();
        let c = phi.cos();
        let h = [t * (th[0] + tan * perp[0]), t * (th[1] + tan * perp[1])];
        let v = d.eval(h) * t / (c * c);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let e = integrate(f, -FRAC_PI_2, FRAC_PI_2, &breaks, Tol::new(0.0, 1e-10), "projected density")?;
    Ok(e.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{lattice, stable};

    #[test]
    fn stable_marginal_is_stable_with_beta_constant() {
        let s = 0.5;
        let k = stable(2, s, 1.0).unwrap();
        let p = project_to_direction(&k, [0.6, 0.8]).unwrap();
        // int cos^{2s}(phi) dphi over (-pi/2, pi/2) = sqrt(pi) Gamma(s+1/2)/Gamma(s+1)
        let beta = std::f64::consts::PI.sqrt() * libm::tgamma(s + 0.5) / libm::tgamma(s + 1.0);
        for t in [1e-3, 0.7, 55.0] {
            let v = p.density_at([t, 0.0]) * t.powf(1.0 + 2.0 * s);
            assert!((v - beta).abs() < 1e-8 * beta, "t={t}: {v} vs {beta}");
        }
    }

    #[test]
    fn lattice_projection_drops_perpendicular_atoms() {
        let k = lattice(2, 0.5, 1.0, -2, 2).unwrap();
        let p = project_to_direction(&k, [1.0, 0.0]).unwrap();
        assert_eq!(p.atoms().len(), 10);
    }
}
