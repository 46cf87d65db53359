//! Symmetric Lévy kernels on R^1 and R^2: density plus atoms.

pub mod audit;
pub mod density;
pub mod project;
pub mod spec;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_tail, Tol};

pub use audit::{audit_ellipticity, AuditOptions, EllipticityReport, ScaleRow};
pub use density::{Density, LogBand, Point};
pub use project::project_to_direction;
pub use spec::KernelSpec;

/// Number of trapezoid nodes for angular integrals of two-dimensional
/// densities. Smooth periodic integrands converge spectrally.
pub const ANGULAR_NODES: usize = 192;

/// A point mass of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub loc: Point,
    pub mass: f64,
}

impl Atom {
    pub fn radius(&self) -> f64 {
        density::norm(self.loc)
    }
}

/// Symmetric second-moment matrix of a kernel piece; in one dimension only
/// `m11` is used.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moment {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Moment {
    pub fn add(self, o: Moment) -> Moment {
        Moment {
            m11: self.m11 + o.m11,
            m12: self.m12 + o.m12,
            m22: self.m22 + o.m22,
        }
    }

    /// `int (h.e)^2` for the unit vector `e`.
    pub fn directional(&self, e: Point) -> f64 {
        self.m11 * e[0] * e[0] + 2.0 * self.m12 * e[0] * e[1] + self.m22 * e[1] * e[1]
    }
}

/// A symmetric Lévy measure `K(dh) = rho(h) dh + sum_j m_j delta_{a_j}`.
#[derive(Clone)]
pub struct LevyKernel {
    dim: usize,
    s: f64,
    density: Option<Arc<dyn Density>>,
    atoms: Vec<Atom>,
    /// Radius beyond which tail integrals stop and a certified remainder
    /// bound must meet the requested tolerance.
    pub tail_cutoff: f64,
    label: String,
}

impl fmt::Debug for LevyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyKernel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("s", &self.s)
            .field("atoms", &self.atoms.len())
            .finish()
    }
}

impl LevyKernel {
    /// Builds a kernel after checking that it is symmetric and nonnegative.
    pub fn new(
        dim: usize,
        s: f64,
        density: Option<Arc<dyn Density>>,
        atoms: Vec<Atom>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Parameter(format!("order s must lie in (0,1), got {s}")));
        }
        if let Some(d) = &density {
            if d.dim() != dim {
                return Err(Error::Parameter("density dimension mismatch".into()));
            }
            check_density_symmetry(d.as_ref())?;
        }
        check_atoms(&atoms, dim)?;
        if density.is_none() && atoms.is_empty() {
            return Err(Error::DegenerateKernel("kernel has no mass".into()));
        }
        Ok(LevyKernel {
            dim,
            s,
            density,
            atoms,
            tail_cutoff: 1e40,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self) -> Option<&Arc<dyn Density>> {
        self.density.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density_at(&self, h: Point) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.eval(h))
    }

    pub fn envelope(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.envelope())
    }

    /// Surface measure of the unit sphere in the kernel's dimension
    /// (2 in one dimension: the two directions).
    fn sphere(&self) -> f64 {
        if self.dim == 1 {
            2.0
        } else {
            2.0 * PI
        }
    }

    fn breaks(&self, a: f64, b: f64) -> Vec<f64> {
        self.density
            .as_ref()
            .map_or_else(Vec::new, |d| d.radial_breaks(a, b))
    }

    /// Density integral over `a < |h| <= b` of `|h|^p * angular(e)` where
    /// `angular` is evaluated on unit vectors.
    fn density_shell_with<W: Fn(Point) -> f64>(
        &self,
        a: f64,
        b: f64,
        p: i32,
        angular: W,
        what: &str,
    ) -> Result<f64> {
        let Some(d) = &self.density else {
            return Ok(0.0);
        };
        if b <= a {
            return Ok(0.0);
        }
        let breaks = self.breaks(a, b);
        let tol = Tol::new(1e-13, 1e-11);
        if self.dim == 1 {
            let w = angular([1.0, 0.0]);
            let e = integrate(|t| d.eval([t, 0.0]) * t.powi(p), a, b, &breaks, tol, what)?;
            Ok(2.0 * w * e.value)
        } else {
            let n = ANGULAR_NODES;
            let dirs: Vec<(Point, f64)> = (0..n)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / n as f64;
                    let e = [phi.cos(), phi.sin()];
                    (e, angular(e))
                })
                .collect();
            let dphi = 2.0 * PI / n as f64;
            let e = integrate(
                |r| {
                    let mut acc = 0.0;
                    for (e, w) in &dirs {
                        if *w != 0.0 {
                            acc += w * d.eval([r * e[0], r * e[1]]);
                        }
                    }
                    acc * dphi * r.powi(p + 1)
                },
                a,
                b,
                &breaks,
                tol,
                what,
            )?;
            Ok(e.value)
        }
    }

    /// `K({a < |h| <= b})`.
    pub fn shell_mass(&self, a: f64, b: f64) -> Result<f64> {
        let mut m = self.density_shell_with(a, b, 0, |_| 1.0, "shell mass")?;
        for at in &self.atoms {
            let r = at.radius();
            if r > a && r <= b {
                m += at.mass;
            }
        }
        Ok(m)
    }

    /// Second moment of `K` restricted to `a < |h| <= b`.
    pub fn shell_moment(&self, a: f64, b: f64) -> Result<Moment> {
        let mut m = Moment {
            m11: self.density_shell_with(a, b, 2, |e| e[0] * e[0], "shell moment")?,
            ..Moment::default()
        };
        if self.dim == 2 {
            m.m12 = self.density_shell_with(a, b, 2, |e| e[0] * e[1], "shell moment")?;
            m.m22 = self.density_shell_with(a, b, 2, |e| e[1] * e[1], "shell moment")?;
        }
        for at in &self.atoms {
            let r = at.radius();
            if r > a && r <= b {
                m.m11 += at.mass * at.loc[0] * at.loc[0];
                m.m12 += at.mass * at.loc[0] * at.loc[1];
                m.m22 += at.mass * at.loc[1] * at.loc[1];
            }
        }
        Ok(m)
    }

    /// Bound on the density's second moment inside `|h| < t`.
    pub fn inner_moment_bound(&self, t: f64) -> f64 {
        self.sphere() * self.envelope() * t.powf(2.0 - 2.0 * self.s) / (2.0 - 2.0 * self.s)
    }

    /// Bound on the density's mass outside `|h| > t`.
    pub fn outer_mass_bound(&self, t: f64) -> f64 {
        self.sphere() * self.envelope() * t.powf(-2.0 * self.s) / (2.0 * self.s)
    }

    /// Second moment of `K` over `0 < |h| <= r`, summing dyadic shells down
    /// to a certified remainder below `rel_tol` times the running total.
    pub fn ball_moment(&self, r: f64, rel_tol: f64) -> Result<Moment> {
        let mut total = Moment::default();
        let mut hi = r;
        for _ in 0..4000 {
            let lo = 0.5 * hi;
            total = total.add(self.shell_moment(lo, hi)?);
            hi = lo;
            let bound = self.inner_moment_bound(hi);
            let scale = total.m11 + total.m22;
            let atoms_below = self.atoms.iter().any(|a| a.radius() <= hi);
            if !atoms_below && (bound <= rel_tol * scale || bound < 1e-300) {
                return Ok(total);
            }
        }
        Err(Error::Truncation {
            bound: self.inner_moment_bound(hi),
            tol: rel_tol,
        })
    }

    /// `K({|h| > r})`.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        let mut m: f64 = self
            .atoms
            .iter()
            .filter(|a| a.radius() > r)
            .map(|a| a.mass)
            .sum();
        if let Some(d) = &self.density {
            m += self.density_tail(d.as_ref(), r)?;
        }
        Ok(m)
    }

    /// Mass of the density part outside `|h| > r`.
    pub fn density_tail_mass(&self, r: f64) -> Result<f64> {
        match &self.density {
            Some(d) => self.density_tail(d.as_ref(), r),
            None => Ok(0.0),
        }
    }

    fn density_tail(&self, d: &dyn Density, r: f64) -> Result<f64> {
        if self.dim == 1 {
            if let Some(v) = d.ray_tail([1.0, 0.0], r) {
                return Ok(2.0 * v);
            }
        } else if let Some(v0) = d.ray_tail([1.0, 0.0], r) {
            let n = ANGULAR_NODES;
            let mut acc = 0.0;
            for k in 0..n {
                let phi = 2.0 * PI * k as f64 / n as f64;
                acc += if k == 0 {
                    v0
                } else {
                    d.ray_tail([phi.cos(), phi.sin()], r).unwrap_or(0.0)
                };
            }
            return Ok(acc * 2.0 * PI / n as f64);
        }
        let e = integrate_tail(
            |t| self.radial_mass_density(t),
            r,
            |t| self.outer_mass_bound(t),
            self.tail_cutoff,
            Tol::new(1e-15, 1e-11),
            "tail mass",
        )?;
        Ok(e.value)
    }

    /// `d/dr K({|h| <= r})` for the density part.
    pub fn radial_mass_density(&self, r: f64) -> f64 {
        let Some(d) = &self.density else {
            return 0.0;
        };
        if self.dim == 1 {
            2.0 * d.eval([r, 0.0])
        } else {
            let n = ANGULAR_NODES;
            let mut acc = 0.0;
            for k in 0..n {
                let phi = 2.0 * PI * k as f64 / n as f64;
                acc += d.eval([r * phi.cos(), r * phi.sin()]);
            }
            acc * 2.0 * PI / n as f64 * r
        }
    }

    /// The kernel `r^{2s} K(r .)`.
    pub fn rescaled(&self, r: f64) -> Result<LevyKernel> {
        if r <= 0.0 {
            return Err(Error::Parameter("rescaling factor must be positive".into()));
        }
        let density = self.density.as_ref().map(|d| {
            Arc::new(density::Rescaled {
                inner: d.clone(),
                s: self.s,
                r,
            }) as Arc<dyn Density>
        });
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                loc: [a.loc[0] / r, a.loc[1] / r],
                mass: a.mass * r.powf(2.0 * self.s),
            })
            .collect();
        let mut k = LevyKernel::new(self.dim, self.s, density, atoms, format!("{} scaled by {r}", self.label))?;
        k.tail_cutoff = self.tail_cutoff;
        Ok(k)
    }
}

fn check_density_symmetry(d: &dyn Density) -> Result<()> {
    for i in 0..64 {
        let r = 1e-3 * 1.3f64.powi(i);
        let a = 0.7 * i as f64;
        let h = if d.dim() == 1 {
            [r, 0.0]
        } else {
            [r * a.cos(), r * a.sin()]
        };
        let p = d.eval(h);
        let q = d.eval([-h[0], -h[1]]);
        if !(p >= 0.0) || !(q >= 0.0) {
            return Err(Error::Asymmetric(format!("density is negative or NaN at {h:?}")));
        }
        if (p - q).abs() > 1e-12 * p.max(q) {
            return Err(Error::Asymmetric(format!(
                "density differs under h -> -h at {h:?}: {p} vs {q}"
            )));
        }
    }
    Ok(())
}

fn check_atoms(atoms: &[Atom], dim: usize) -> Result<()> {
    for a in atoms {
        if !(a.mass > 0.0) || !a.mass.is_finite() {
            return Err(Error::Parameter(format!("atom mass must be positive, got {}", a.mass)));
        }
        if a.radius() == 0.0 {
            return Err(Error::Parameter("atom at the origin".into()));
        }
        if dim == 1 && a.loc[1] != 0.0 {
            return Err(Error::Parameter("one-dimensional atom has a second coordinate".into()));
        }
        let tol = 1e-12 * a.radius();
        let partner = atoms.iter().any(|b| {
            (b.loc[0] + a.loc[0]).abs() <= tol
                && (b.loc[1] + a.loc[1]).abs() <= tol
                && (b.mass - a.mass).abs() <= 1e-12 * a.mass
        });
        if !partner {
            return Err(Error::Asymmetric(format!(
                "atom at {:?} with mass {} has no mirror partner",
                a.loc, a.mass
            )));
        }
    }
    Ok(())
}

/// `int_R (1 - cos u) |u|^{-1-2s} du`, the symbol of `|h|^{-1-2s}` at
/// frequency one.
pub fn stable_symbol_constant(s: f64) -> f64 {
    PI / (2.0 * s * libm::tgamma(2.0 * s) * (PI * s).sin())
}

/// One-dimensional stable kernel `c |h|^{-1-2s}`.
pub fn stable(dim: usize, s: f64, c: f64) -> Result<LevyKernel> {
    LevyKernel::new(
        dim,
        s,
        Some(Arc::new(density::Stable { dim, s, c })),
        Vec::new(),
        format!("stable s={s}"),
    )
}

/// One-dimensional stable kernel normalized so that its symbol is `|xi|^{2s}`.
pub fn stable_normalized(s: f64) -> Result<LevyKernel> {
    stable(1, s, 1.0 / stable_symbol_constant(s))
}

pub fn tempered(dim: usize, s: f64, c: f64, scale: f64) -> Result<LevyKernel> {
    LevyKernel::new(
        dim,
        s,
        Some(Arc::new(density::Tempered { dim, s, c, scale })),
        Vec::new(),
        format!("tempered s={s}"),
    )
}

/// Purely atomic kernel with mass `c 2^{-2sk}` at `+-2^k e_i`, `k_min <= k <= k_max`.
pub fn lattice(dim: usize, s: f64, c: f64, k_min: i32, k_max: i32) -> Result<LevyKernel> {
    if k_min > k_max {
        return Err(Error::Parameter("lattice needs k_min <= k_max".into()));
    }
    let mut atoms = Vec::new();
    for k in k_min..=k_max {
        let r = 2f64.powi(k);
        let mass = c * r.powf(-2.0 * s);
        for axis in 0..dim {
            for sign in [1.0, -1.0] {
                let mut loc = [0.0; 2];
                loc[axis] = sign * r;
                atoms.push(Atom { loc, mass });
            }
        }
    }
    LevyKernel::new(dim, s, None, atoms, format!("lattice s={s}"))
}

pub fn banded(
    dim: usize,
    s: f64,
    c: f64,
    annuli: Vec<(f64, f64)>,
    band: Option<LogBand>,
) -> Result<LevyKernel> {
    LevyKernel::new(
        dim,
        s,
        Some(Arc::new(density::Banded {
            dim,
            s,
            c,
            annuli,
            band,
        })),
        Vec::new(),
        format!("banded s={s}"),
    )
}

/// Seeded random multiplier in `[lo, hi]` times the stable density, with
/// optional lattice atoms of weight `atom_weight`.
pub fn random(
    dim: usize,
    s: f64,
    c: f64,
    lo: f64,
    hi: f64,
    seed: u64,
    atom_weight: f64,
) -> Result<LevyKernel> {
    let d = density::RandomField::new(dim, s, c, lo, hi, seed);
    let mut atoms = Vec::new();
    if atom_weight > 0.0 {
        atoms = lattice(dim, s, atom_weight, -40, 40)?.atoms;
    }
    LevyKernel::new(dim, s, Some(Arc::new(d)), atoms, format!("random s={s} seed={seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_constant_matches_direct_integral() {
        for s in [0.2, 0.5, 0.8] {
            // 2 * int_0^inf (1 - cos u) u^{-1-2s} du, split to tame the tail.
            let f = |u: f64| 4.0 * (0.5 * u).sin().powi(2) * u.powf(-1.0 - 2.0 * s);
            let head = crate::quadrature::tanh_sinh(|_, da, _| f(da), 0.0, 2.0 * PI, 1e-13, "")
                .unwrap()
                .value;
            let mut tail = 0.0;
            let mut k = 1.0;
            let mut terms = Vec::new();
            while k < 20000.0 {
                let v = integrate(f, 2.0 * PI * k, 2.0 * PI * (k + 1.0), &[], Tol::new(1e-16, 1e-13), "")
                    .unwrap()
                    .value;
                terms.push(v);
                tail += v;
                k += 1.0;
            }
            // Remaining mass of 2 u^{-1-2s} past the last period; cosine part is negligible.
            tail += 2.0 * (2.0 * PI * k).powf(-2.0 * s) / (2.0 * s);
            let total = head + tail;
            assert!(
                (total - stable_symbol_constant(s)).abs() < 2e-4 * total,
                "s={s}: {total} vs {}",
                stable_symbol_constant(s)
            );
        }
        assert!((stable_symbol_constant(0.5) - PI).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_atoms_are_rejected() {
        let atoms = vec![Atom {
            loc: [1.0, 0.0],
            mass: 1.0,
        }];
        assert!(matches!(
            LevyKernel::new(1, 0.5, None, atoms, "bad"),
            Err(Error::Asymmetric(_))
        ));
    }

    #[test]
    fn asymmetric_density_is_rejected() {
        let d = density::Custom {
            dim: 1,
            envelope: 2.0,
            f: Arc::new(|h: Point| if h[0] > 0.0 { 2.0 } else { 1.0 } * h[0].abs().powf(-2.0)),
            label: "lopsided".into(),
        };
        assert!(matches!(
            LevyKernel::new(1, 0.5, Some(Arc::new(d)), vec![], "bad"),
            Err(Error::Asymmetric(_))
        ));
    }

    #[test]
    fn stable_shell_mass_and_tail_match_closed_forms() {
        let s = 0.3;
        let k = stable(1, s, 1.5).unwrap();
        let m = k.shell_mass(0.5, 1.0).unwrap();
        let exact = 2.0 * 1.5 * (0.5f64.powf(-2.0 * s) - 1.0) / (2.0 * s);
        assert!((m - exact).abs() < 1e-10 * exact);
        let k2 = stable(2, s, 1.0).unwrap();
        let m2 = k2.shell_mass(1.0, 2.0).unwrap();
        let exact2 = 2.0 * PI * (1.0 - 2f64.powf(-2.0 * s)) / (2.0 * s);
        assert!((m2 - exact2).abs() < 1e-9 * exact2);
        let t = k2.tail_mass(3.0).unwrap();
        assert!((t - 2.0 * PI * 3f64.powf(-2.0 * s) / (2.0 * s)).abs() < 1e-10);
    }

    #[test]
    fn numeric_tail_agrees_with_closed_form_route() {
        // Same density, once through ray_tail and once through shell sums.
        let s = 0.6;
        let closed = stable(1, s, 1.0).unwrap();
        let numeric = LevyKernel::new(
            1,
            s,
            Some(Arc::new(density::Custom {
                dim: 1,
                envelope: 1.0,
                f: Arc::new(move |h: Point| h[0].abs().powf(-1.0 - 2.0 * s)),
                label: "plain".into(),
            })),
            vec![],
            "plain",
        )
        .unwrap();
        let a = closed.tail_mass(0.7).unwrap();
        let b = numeric.tail_mass(0.7).unwrap();
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn ball_moment_of_stable() {
        let s = 0.5;
        let k = stable(2, s, 1.0).unwrap();
        let m = k.ball_moment(2.0, 1e-12).unwrap();
        // int_{|h|<r} h1^2 |h|^{-2-2s} = pi r^{2-2s} / (2-2s)
        let exact = PI * 2f64.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        assert!((m.m11 - exact).abs() < 1e-9 * exact);
        assert!(m.m12.abs() < 1e-10);
    }

    #[test]
    fn rescaled_atoms_and_density() {
        let k = lattice(1, 0.5, 1.0, -3, 3).unwrap();
        let kr = k.rescaled(2.0).unwrap();
        let a = kr.atoms()[0];
        assert!((a.loc[0].abs() - 0.0625).abs() < 1e-15);
        assert!((a.mass - 2.0 * 8.0).abs() < 1e-12);
    }
}
