//! One-dimensional quadrature: adaptive Gauss–Kronrod, tanh–sinh for
//! endpoint singularities, fixed Gauss–Legendre rules, and a geometric
//! tail integrator for integrals over `[a, inf)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
    };
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, o: Estimate) {
        self.value += o.value;
        self.error += o.error;
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_932_491_614,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights paired with XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Single 21-point Gauss–Kronrod panel on `[a, b]`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    for j in 0..10 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * hl;
    let gauss = resg * hl;
    Estimate {
        value,
        error: (value - gauss).abs(),
    }
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est
            .error
            .partial_cmp(&o.est.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol {
            abs,
            rel,
            max_panels: 4000,
        }
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::new(1e-13, 1e-11)
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]`, splitting first
/// at any interior `breaks`. Returns an error naming `what` if the requested
/// tolerance is not reached within the panel budget.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tol,
    what: &str,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::ZERO);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    pts.extend(inner);
    pts.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = Estimate::ZERO;
    for w in pts.windows(2) {
        let est = gk21(&mut f, w[0], w[1]);
        total += est;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            est,
        });
    }
    let mut n = heap.len();
    loop {
        let target = tol.abs.max(tol.rel * total.value.abs());
        if total.error <= target {
            break;
        }
        if n >= tol.max_panels {
            if total.error <= 1e3 * target {
                break;
            }
            return Err(Error::Quadrature {
                what: what.to_string(),
                estimate: total.value,
                error: total.error,
            });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b || (p.b - p.a) <= 4.0 * f64::EPSILON * m.abs().max(1e-300) {
            // Cannot split further; keep the panel and stop refining it.
            heap.push(Panel {
                a: p.a,
                b: p.b,
                est: Estimate {
                    value: p.est.value,
                    error: 0.0,
                },
            });
            total.error -= p.est.error;
            continue;
        }
        let l = gk21(&mut f, p.a, m);
        let r = gk21(&mut f, m, p.b);
        total.value += l.value + r.value - p.est.value;
        total.error += l.error + r.error - p.est.error;
        heap.push(Panel { a: p.a, b: m, est: l });
        heap.push(Panel { a: m, b: p.b, est: r });
        n += 1;
    }
    // Re-sum to shed accumulated rounding from the incremental updates.
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.est.value;
        error += p.est.error;
    }
    Ok(Estimate {
        value: sign * value,
        error,
    })
}

/// Tanh–sinh quadrature on `[a, b]` for integrands with integrable endpoint
/// singularities. The integrand receives the abscissa and its distances to
/// `a` and `b`, which are computed without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    what: &str,
) -> Result<Estimate> {
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return Ok(Estimate::ZERO);
    }
    let pi2 = std::f64::consts::FRAC_PI_2;
    let tmax = 4.0;
    let eval = |f: &mut F, t: f64| -> f64 {
        let u = pi2 * t.sinh();
        let ch = u.cosh();
        let w = pi2 * t.cosh() / (ch * ch);
        // 1 - tanh(u) for u >= 0 without cancellation
        let comp = 1.0 / (u.exp() * ch);
        let d = half * comp;
        if d <= 0.0 || !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        let v1 = f(b - d, b - a - d, d);
        let v2 = f(a + d, d, b - a - d);
        w * (v1 + v2)
    };
    let mut step = 1.0;
    let mut sum = pi2 * f(0.5 * (a + b), half, half);
    let mut k = 1.0;
    while k * step <= tmax {
        sum += eval(&mut f, k * step);
        k += 1.0;
    }
    let mut prev = sum * step * half;
    for _level in 0..12 {
        step *= 0.5;
        let mut t = step;
        while t <= tmax {
            sum += eval(&mut f, t);
            t += 2.0 * step;
        }
        let cur = sum * step * half;
        let err = (cur - prev).abs();
        if err <= tol.max(1e-15 * cur.abs()) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        what: what.to_string(),
        estimate: prev,
        error: f64::NAN,
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A fixed Gauss–Legendre rule that can be mapped onto any interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        GaussRule { x, w }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        let mut s = 0.0;
        for (xi, wi) in self.x.iter().zip(&self.w) {
            s += wi * f(c + hl * xi);
        }
        s * hl
    }
}

/// Integral of `f` over `[a, inf)` by doubling shells `[a 2^k, a 2^{k+1}]`.
///
/// `remainder(t)` must bound `|int_t^inf f|`; shells are added until that
/// bound falls below the tolerance or `t` passes `cutoff`, in which case a
/// truncation error is returned.
pub fn integrate_tail<F, B>(
    mut f: F,
    a: f64,
    remainder: B,
    cutoff: f64,
    tol: Tol,
    what: &str,
) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
    B: Fn(f64) -> f64,
{
    assert!(a > 0.0, "tail integration needs a positive start");
    let mut total = Estimate::ZERO;
    let mut lo = a;
    loop {
        let hi = 2.0 * lo;
        let shell_tol = Tol {
            abs: tol.abs * 0.1,
            ..tol
        };
        total += integrate(&mut f, lo, hi, &[], shell_tol, what)?;
        lo = hi;
        let bound = remainder(lo);
        let target = tol.abs.max(tol.rel * total.value.abs());
        if bound <= target {
            total.error += bound;
            return Ok(total);
        }
        if lo > cutoff {
            return Err(Error::Truncation { bound, tol: target });
        }
    }
}
