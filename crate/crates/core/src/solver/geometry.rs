//! Domains: open sets in R^1 or R^2 with distance-to-boundary and boundary
//! sampling for the decay fits.

use serde::{Deserialize, Serialize};

use crate::kernels::Point;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundarySample {
    pub z: Point,
    /// Inward unit normal.
    pub normal: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    /// `(a, b)` on the line.
    Interval { a: f64, b: f64 },
    Ball { center: [f64; 2], radius: f64 },
    /// `{x2 > phi(x1)} ∩ B_radius((0, lift))` with `phi(t) = coeff t^exponent`
    /// for `t >= 0` and `left_coeff |t|^exponent` for `t < 0` (`left_coeff`
    /// defaults to `coeff`). With `exponent = 1 + alpha` the boundary near the
    /// origin is a `C^{1,alpha}` graph. Requires `|lift| < radius`.
    EpigraphBall {
        coeff: f64,
        exponent: f64,
        radius: f64,
        #[serde(default)]
        lift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left_coeff: Option<f64>,
    },
    /// `{x2 > shift} ∩ B_radius(0)`.
    HalfDisk { shift: f64, radius: f64 },
    /// `{x.direction > 0} ∩ (lo, hi)`.
    HalfPlaneBox {
        direction: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
    },
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn graph(&self, t: f64) -> f64 {
        match self {
            Domain::EpigraphBall {
                coeff,
                exponent,
                left_coeff,
                ..
            } => {
                let c = if t < 0.0 { left_coeff.unwrap_or(*coeff) } else { *coeff };
                c * t.abs().powf(*exponent)
            }
            _ => 0.0,
        }
    }

    fn graph_slope(&self, t: f64) -> f64 {
        match self {
            Domain::EpigraphBall {
                coeff,
                exponent,
                left_coeff,
                ..
            } => {
                let c = if t < 0.0 { left_coeff.unwrap_or(*coeff) } else { *coeff };
                c * exponent * t.abs().powf(exponent - 1.0) * t.signum()
            }
            _ => 0.0,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match self {
            Domain::Interval { a, b } => x[0] > *a && x[0] < *b,
            Domain::Ball { center, radius } => norm([x[0] - center[0], x[1] - center[1]]) < *radius,
            Domain::EpigraphBall { radius, lift, .. } => x[1] > self.graph(x[0]) && norm([x[0], x[1] - lift]) < *radius,
            Domain::HalfDisk { shift, radius } => x[1] > *shift && norm(x) < *radius,
            Domain::HalfPlaneBox { direction, lo, hi } => {
                x[0] * direction[0] + x[1] * direction[1] > 0.0
                    && x[0] > lo[0]
                    && x[0] < hi[0]
                    && x[1] > lo[1]
                    && x[1] < hi[1]
            }
        }
    }

    /// Distance from an interior point to the boundary (zero outside).
    pub fn dist_to_boundary(&self, x: Point) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Ball { center, radius } => radius - norm([x[0] - center[0], x[1] - center[1]]),
            Domain::EpigraphBall { radius, lift, .. } => self.dist_to_graph(x).min(radius - norm([x[0], x[1] - lift])),
            Domain::HalfDisk { shift, radius } => (x[1] - shift).min(radius - norm(x)),
            Domain::HalfPlaneBox { direction, lo, hi } => {
                let dn = norm(*direction);
                let t = (x[0] * direction[0] + x[1] * direction[1]) / dn;
                t.min(x[0] - lo[0]).min(hi[0] - x[0]).min(x[1] - lo[1]).min(hi[1] - x[1])
            }
        }
    }

    /// Distance to the graph part of an epigraph domain.
    fn dist_to_graph(&self, x: Point) -> f64 {
        let dist2 = |t: f64| {
            let dy = x[1] - self.graph(t);
            (x[0] - t).powi(2) + dy * dy
        };
        let reach = (x[1] - self.graph(x[0])).abs() + 1e-300;
        let (a, b) = (x[0] - reach, x[0] + reach);
        let n = 64;
        let mut best = x[0];
        let mut best_v = dist2(best);
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let v = dist2(t);
            if v < best_v {
                best_v = v;
                best = t;
            }
        }
        // Golden-section refinement around the best sample.
        let step = (b - a) / n as f64;
        let (mut lo, mut hi) = (best - step, best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = hi - g * (hi - lo);
            let d = lo + g * (hi - lo);
            if dist2(c) < dist2(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        best_v.min(dist2(0.5 * (lo + hi))).sqrt()
    }

    /// Axis-aligned bounding box of the closure.
    pub fn bbox(&self) -> (Point, Point) {
        match self {
            Domain::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            Domain::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Domain::EpigraphBall { radius, lift, .. } => {
                let low = self.graph(-radius).min(self.graph(*radius)).min(0.0).max(lift - radius);
                ([-radius, low], [*radius, lift + radius])
            }
            Domain::HalfDisk { shift, radius } => ([-radius, shift.max(-radius)], [*radius, *radius]),
            Domain::HalfPlaneBox { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        match self {
            Domain::Interval { a, b } => b - a,
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::EpigraphBall { radius, .. } | Domain::HalfDisk { radius, .. } => 2.0 * radius,
            _ => norm([hi[0] - lo[0], hi[1] - lo[1]]),
        }
    }

    /// About `count` boundary points with inward normals, restricted to the
    /// part of the boundary within `radius` of `center`. Corners of the
    /// domain are excluded.
    pub fn boundary_samples(&self, count: usize, center: Point, radius: f64) -> Vec<BoundarySample> {
        let within = |z: Point| norm([z[0] - center[0], z[1] - center[1]]) <= radius;
        let count = count.max(1);
        let mut out = Vec::new();
        match self {
            Domain::Interval { a, b } => {
                for (z, n) in [(*a, 1.0), (*b, -1.0)] {
                    if within([z, 0.0]) {
                        out.push(BoundarySample {
                            z: [z, 0.0],
                            normal: [n, 0.0],
                        });
                    }
                }
            }
            Domain::Ball { center: c, radius: r } => {
                for k in 0..count * 8 {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / (count * 8) as f64;
                    let z = [c[0] + r * a.cos(), c[1] + r * a.sin()];
                    if within(z) {
                        out.push(BoundarySample {
                            z,
                            normal: [-a.cos(), -a.sin()],
                        });
                    }
                }
            }
            Domain::EpigraphBall { .. } | Domain::HalfDisk { .. } => {
                let (shift, r, lift) = match self {
                    Domain::HalfDisk { shift, radius } => (*shift, *radius, 0.0),
                    Domain::EpigraphBall { radius, lift, .. } => (0.0, *radius, *lift),
                    _ => unreachable!(),
                };
                let span = radius.min(r);
                for k in 0..count {
                    let t = -span + 2.0 * span * (k as f64 + 0.5) / count as f64;
                    let z = [t, self.graph(t) + shift];
                    if !within(z) || norm([z[0], z[1] - lift]) >= 0.9 * r {
                        continue;
                    }
                    let m = self.graph_slope(t);
                    let l = (1.0 + m * m).sqrt();
                    out.push(BoundarySample {
                        z,
                        normal: [-m / l, 1.0 / l],
                    });
                }
            }
            Domain::HalfPlaneBox { direction, lo, hi } => {
                let dn = norm(*direction);
                let n = [direction[0] / dn, direction[1] / dn];
                let tangent = [-n[1], n[0]];
                for k in 0..count {
                    let t = -radius + 2.0 * radius * (k as f64 + 0.5) / count as f64;
                    let z = [center[0] + t * tangent[0], center[1] + t * tangent[1]];
                    let margin = 0.1 * (hi[0] - lo[0]).min(hi[1] - lo[1]);
                    if z[0] > lo[0] + margin && z[0] < hi[0] - margin && z[1] > lo[1] + margin && z[1] < hi[1] - margin {
                        out.push(BoundarySample { z, normal: n });
                    }
                }
            }
        }
        out
    }
}
