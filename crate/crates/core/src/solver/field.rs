//! Right-hand sides and exterior data.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::kernels::Point;

#[derive(Clone)]
pub struct CustomField {
    pub f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    /// `(G, gamma)` with `|f(x)| <= G (1 + |x|)^gamma`.
    pub growth: (f64, f64),
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomField(growth = {:?})", self.growth)
    }
}

/// A scalar field on R^d. One-dimensional problems read only `x[0]` and
/// use direction `[1, 0]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Field {
    Const {
        value: f64,
    },
    Affine {
        c0: f64,
        c: [f64; 2],
    },
    /// `max(c0 + c.x, floor)`.
    ClippedAffine {
        c0: f64,
        c: [f64; 2],
        floor: f64,
    },
    /// `value` on `|x - center| >= radius`, zero inside.
    OutsideBall {
        center: [f64; 2],
        radius: f64,
        value: f64,
    },
    /// `value` where `x.direction >= threshold`, zero elsewhere.
    Step {
        direction: [f64; 2],
        threshold: f64,
        value: f64,
    },
    /// `scale ((x.direction - shift)_+)^exponent`.
    HalfLinePower {
        direction: [f64; 2],
        shift: f64,
        scale: f64,
        exponent: f64,
    },
    /// `scale (1 + |x|)^exponent`.
    Growth {
        scale: f64,
        exponent: f64,
    },
    /// Profile `p(x.direction)`: zero for negative arguments, linear
    /// interpolation of `values` (spacing `spacing`, starting at 0), and
    /// `tail_scale t^exponent` past the table.
    Profile {
        direction: [f64; 2],
        spacing: f64,
        values: Vec<f64>,
        tail_scale: f64,
        exponent: f64,
    },
    Sum {
        parts: Vec<Field>,
    },
    Scaled {
        factor: f64,
        inner: Box<Field>,
    },
    #[serde(skip)]
    Custom(CustomField),
}

fn dot(a: Point, b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl Field {
    pub fn zero() -> Field {
        Field::Const { value: 0.0 }
    }

    pub fn custom<F: Fn(Point) -> f64 + Send + Sync + 'static>(f: F, growth: (f64, f64)) -> Field {
        Field::Custom(CustomField {
            f: Arc::new(f),
            growth,
        })
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Field::Const { value } => *value,
            Field::Affine { c0, c } => c0 + dot(x, *c),
            Field::ClippedAffine { c0, c, floor } => (c0 + dot(x, *c)).max(*floor),
            Field::OutsideBall {
                center,
                radius,
                value,
            } => {
                if (x[0] - center[0]).hypot(x[1] - center[1]) >= *radius {
                    *value
                } else {
                    0.0
                }
            }
            Field::Step {
                direction,
                threshold,
                value,
            } => {
                if dot(x, *direction) >= *threshold {
                    *value
                } else {
                    0.0
                }
            }
            Field::HalfLinePower {
                direction,
                shift,
                scale,
                exponent,
            } => {
                let t = dot(x, *direction) - shift;
                if t > 0.0 {
                    scale * t.powf(*exponent)
                } else {
                    0.0
                }
            }
            Field::Growth { scale, exponent } => scale * (1.0 + x[0].hypot(x[1])).powf(*exponent),
            Field::Profile {
                direction,
                spacing,
                values,
                tail_scale,
                exponent,
            } => {
                let t = dot(x, *direction);
                if t <= 0.0 {
                    return 0.0;
                }
                let u = t / spacing;
                let n = values.len();
                if u >= (n - 1) as f64 {
                    return tail_scale * t.powf(*exponent);
                }
                let i = u.floor() as usize;
                let f = u - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
            Field::Sum { parts } => parts.iter().map(|p| p.eval(x)).sum(),
            Field::Scaled { factor, inner } => factor * inner.eval(x),
            Field::Custom(c) => (c.f)(x),
        }
    }

    /// `(G, gamma)` with `|f(x)| <= G (1 + |x|)^gamma`.
    pub fn growth(&self) -> (f64, f64) {
        match self {
            Field::Const { value } => (value.abs(), 0.0),
            Field::Affine { c0, c } => (c0.abs() + c[0].hypot(c[1]), 1.0),
            Field::ClippedAffine { c0, c, floor } => (c0.abs() + c[0].hypot(c[1]) + floor.abs(), 1.0),
            Field::OutsideBall { value, .. } | Field::Step { value, .. } => (value.abs(), 0.0),
            Field::HalfLinePower {
                direction,
                shift,
                scale,
                exponent,
            } => {
                let dn = direction[0].hypot(direction[1]);
                (scale.abs() * (dn.max(1.0) + shift.abs()).powf(*exponent), *exponent)
            }
            Field::Growth { scale, exponent } => (scale.abs(), *exponent),
            Field::Profile {
                direction,
                values,
                tail_scale,
                exponent,
                ..
            } => {
                let dn = direction[0].hypot(direction[1]).max(1.0);
                let vmax = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                (vmax + tail_scale.abs() * dn.powf(*exponent), *exponent)
            }
            Field::Sum { parts } => {
                let mut g = 0.0;
                let mut e: f64 = 0.0;
                for p in parts {
                    let (gp, ep) = p.growth();
                    g += gp;
                    e = e.max(ep);
                }
                (g, e)
            }
            Field::Scaled { factor, inner } => {
                let (g, e) = inner.growth();
                (factor.abs() * g, e)
            }
            Field::Custom(c) => c.growth,
        }
    }

    /// The constant value of the field on the ray `x + t e`, `t >= t0`, when
    /// it is known to be constant there.
    pub fn constant_on_ray(&self, x: Point, e: Point, t0: f64) -> Option<f64> {
        match self {
            Field::Const { value } => Some(*value),
            Field::Step {
                direction,
                threshold,
                value,
            } => {
                let a = dot(x, *direction) + t0 * dot(e, *direction);
                let slope = dot(e, *direction);
                if slope >= 0.0 && a >= *threshold {
                    Some(*value)
                } else if slope <= 0.0 && a < *threshold {
                    Some(0.0)
                } else {
                    None
                }
            }
            Field::OutsideBall {
                center,
                radius,
                value,
            } => {
                // |x + t e - c| is convex in t; outside at t0 and moving away.
                let p = [x[0] + t0 * e[0] - center[0], x[1] + t0 * e[1] - center[1]];
                if p[0].hypot(p[1]) >= *radius && dot(p, e) >= 0.0 {
                    Some(*value)
                } else {
                    None
                }
            }
            Field::HalfLinePower { direction, shift, .. } => {
                let a = dot(x, *direction) + t0 * dot(e, *direction) - shift;
                if dot(e, *direction) <= 0.0 && a <= 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            Field::Profile { direction, .. } => {
                let a = dot(x, *direction) + t0 * dot(e, *direction);
                if dot(e, *direction) <= 0.0 && a <= 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            Field::Scaled { factor, inner } => inner.constant_on_ray(x, e, t0).map(|v| factor * v),
            Field::Sum { parts } => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.constant_on_ray(x, e, t0)?;
                }
                Some(acc)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_and_ray_constancy() {
        let f = Field::Step {
            direction: [1.0, 0.0],
            threshold: 2.0,
            value: 3.0,
        };
        assert_eq!(f.eval([2.0, 0.0]), 3.0);
        assert_eq!(f.eval([1.9, 0.0]), 0.0);
        assert_eq!(f.constant_on_ray([1.0, 0.0], [1.0, 0.0], 1.5), Some(3.0));
        assert_eq!(f.constant_on_ray([1.0, 0.0], [-1.0, 0.0], 0.5), Some(0.0));
        assert_eq!(f.constant_on_ray([1.0, 0.0], [1.0, 0.0], 0.5), None);
    }

    #[test]
    fn profile_interpolates_and_extends() {
        let f = Field::Profile {
            direction: [0.0, 1.0],
            spacing: 0.5,
            values: vec![0.0, 1.0, 2.0],
            tail_scale: 1.0,
            exponent: 1.0,
        };
        assert!((f.eval([5.0, 0.25]) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval([0.0, 3.0]), 3.0);
        assert_eq!(f.eval([0.0, -1.0]), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let f = Field::OutsideBall {
            center: [0.0, 0.0],
            radius: 1.0,
            value: 1.0,
        };
        let t = serde_json::to_string(&f).unwrap();
        let g: Field = serde_json::from_str(&t).unwrap();
        assert_eq!(g.eval([2.0, 0.0]), 1.0);
    }
}
