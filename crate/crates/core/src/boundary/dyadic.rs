//! Dyadic schedules `r_k = 2^{-k} r_0` and the recursions built on them:
//! `N_k = sum_{n<=k} 2^{-s(k-n)} w(r_n)^s`, the Grönwall-type growth
//! `M_{k+1} = M_k (1 + C N_k) + C r_k^s` and the Hopf-type decay
//! `m_{k+1} = m_k (1 - C N_k)`.

use serde::{Deserialize, Serialize};

use super::modulus::{dini_integral_below, dyadic_series, Modulus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicSchedule {
    pub modulus: Modulus,
    pub s: f64,
    pub r0: f64,
    /// Budget constant `C`.
    pub c: f64,
    /// Constant `c_1` in `p_k = c_1 sum_{n>=k} delta_n`.
    pub c1: f64,
}

/// Largest index for which the `m_k` recursion is searched for an
/// admissible start.
pub const MAX_START: usize = 200;

impl DyadicSchedule {
    pub fn new(modulus: Modulus, s: f64, r0: f64, c: f64) -> Result<Self> {
        modulus.validate()?;
        if !(s > 0.0 && s < 1.0) || !(r0 > 0.0 && r0 <= 1.0) || !(c >= 0.0) {
            return Err(Error::Parameter(format!(
                "schedule needs s in (0,1), r0 in (0,1], C >= 0; got s={s}, r0={r0}, C={c}"
            )));
        }
        Ok(DyadicSchedule {
            modulus,
            s,
            r0,
            c,
            c1: 1.0,
        })
    }

    fn ln_r(&self, k: usize) -> f64 {
        self.r0.ln() - k as f64 * std::f64::consts::LN_2
    }

    pub fn r(&self, k: usize) -> f64 {
        self.ln_r(k).exp()
    }

    /// `r_k^s`, without underflow for large `k` until the result itself does.
    pub fn r_pow_s(&self, k: usize) -> f64 {
        (self.s * self.ln_r(k)).exp()
    }

    /// `w(r_k)`.
    pub fn omega(&self, k: usize) -> f64 {
        self.modulus.eval_log(-self.ln_r(k))
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.c * self.omega(k) * self.r(k)
    }

    /// `p_k` for `k = 0..len`; the tail sums terminate once `delta_n` is
    /// negligible (`delta_{n+1} <= delta_n / 2` for a nondecreasing modulus).
    pub fn p_sequence(&self, len: usize) -> Vec<f64> {
        let mut n_end = len;
        while n_end < len + 2000 && self.delta(n_end) > 0.0 {
            n_end += 1;
        }
        let mut p = vec![0.0; n_end + 1];
        for k in (0..n_end).rev() {
            p[k] = p[k + 1] + self.c1 * self.delta(k);
        }
        p.truncate(len);
        p
    }

    /// `N_k` for `k = 0..len`.
    pub fn n_sequence(&self, len: usize) -> Vec<f64> {
        let decay = 2f64.powf(-self.s);
        let mut out = Vec::with_capacity(len);
        let mut n = 0.0;
        for k in 0..len {
            n = decay * n + self.omega(k).powf(self.s);
            out.push(n);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    pub m: Vec<f64>,
    /// `(M_0 + C sum_{i<k} r_i^s) exp(C sum_{j<k} N_j)` for each `k`.
    pub bound: Vec<f64>,
    pub final_bound: f64,
    /// `sum_{j<K} N_j`.
    pub n_sum: f64,
    /// `(w(r_0)^s + int_0^{r_0} w^s/t dt / ln 2) / (1 - 2^{-s})`, which
    /// dominates every partial sum of `N_j`.
    pub n_sum_bound: f64,
    pub holds: bool,
    pub nondecreasing: bool,
}

pub fn gronwall_mk(sched: &DyadicSchedule, steps: usize, m0: f64) -> Result<GronwallReport> {
    let dini = dini_integral_below(&sched.modulus, sched.s, sched.r0)?;
    if !dini.finite {
        return Err(Error::DivergentTail(format!(
            "the s-Dini integral diverges (tail rate {:.4}); the Grönwall bound is infinite",
            dini.tail_rate
        )));
    }
    let c = sched.c;
    let n = sched.n_sequence(steps);
    let mut m = Vec::with_capacity(steps + 1);
    let mut bound = Vec::with_capacity(steps + 1);
    let mut mk = m0;
    // Accumulated in the same order as the recursion so that the two agree
    // exactly when every N_k vanishes.
    let mut lin = m0;
    let mut nsum = 0.0;
    m.push(mk);
    bound.push(lin);
    for (k, &nk) in n.iter().enumerate() {
        let rs = c * sched.r_pow_s(k);
        mk = mk * (1.0 + c * nk) + rs;
        lin += rs;
        nsum += nk;
        m.push(mk);
        bound.push(lin * (c * nsum).exp());
    }
    let final_bound = bound[bound.len() - 1];
    let holds = m.iter().zip(&bound).all(|(a, b)| a <= b) && m.iter().all(|a| *a <= final_bound);
    let nondecreasing = m.windows(2).all(|w| w[1] >= w[0]);
    let n_sum_bound = (sched.omega(0).powf(sched.s) + dini.value / std::f64::consts::LN_2) / (1.0 - 2f64.powf(-sched.s));
    Ok(GronwallReport {
        m,
        bound,
        final_bound,
        n_sum: nsum,
        n_sum_bound,
        holds,
        nondecreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfReport {
    pub k_start: Option<usize>,
    /// `m_k` for `k = K, K+1, ...` (first entries only).
    pub m: Vec<f64>,
    pub limit: f64,
    /// `m_K exp(-2 C sum_{n>=K} N_n)`.
    pub lower_bound: f64,
    pub tail_n_sum: f64,
    pub positive: bool,
    pub failure: Option<String>,
}

const STORED_STEPS: usize = 4096;
/// Horizon over which `C N_k < 1/2` is checked when choosing the start.
const ADMISSIBILITY_HORIZON: usize = 1 << 16;

/// Iterates `m_{k+1} = m_k (1 - C N_k)` from `m_K = m_start`. The limit is
/// `m_K prod_{n>=K} (1 - C N_n)`, summed in log form over doubling blocks of
/// indices; blocks that stop shrinking mean the product tends to zero.
pub fn hopf_mk(sched: &DyadicSchedule, k_start: Option<usize>, m_start: f64) -> Result<HopfReport> {
    let c = sched.c;
    let n_head = sched.n_sequence(ADMISSIBILITY_HORIZON);
    let k0 = match k_start {
        Some(k) => {
            if n_head[k..].iter().any(|&v| c * v >= 0.5) {
                return Err(Error::Parameter(format!("start index {k} is not admissible: C N_k >= 1/2 later on")));
            }
            Some(k)
        }
        None => {
            let mut last_bad = None;
            for (k, &v) in n_head.iter().enumerate() {
                if c * v >= 0.5 {
                    last_bad = Some(k);
                }
            }
            match last_bad {
                None => Some(0),
                Some(b) if b < MAX_START => Some(b + 1),
                Some(_) => None,
            }
        }
    };
    let Some(k0) = k0 else {
        return Ok(HopfReport {
            k_start: None,
            m: Vec::new(),
            limit: 0.0,
            lower_bound: 0.0,
            tail_n_sum: f64::INFINITY,
            positive: false,
            failure: Some(format!("no start index K <= {MAX_START} with C N_k < 1/2 for all k >= K")),
        });
    };

    let mut m = Vec::with_capacity(STORED_STEPS);
    let decay = 2f64.powf(-sched.s);
    // Recompute N from k = 0 while walking the blocks.
    let mut state_k = 0usize;
    let mut state_n = 0.0;
    let advance = |upto: usize, state_k: &mut usize, state_n: &mut f64, f: &mut dyn FnMut(usize, f64)| {
        while *state_k < upto {
            *state_n = decay * *state_n + sched.omega(*state_k).powf(sched.s);
            f(*state_k, *state_n);
            *state_k += 1;
        }
    };
    let mut mk = m_start;
    let mut n_sum_blocks = Vec::new();
    let (log_sum, _, _, finite, _) = dyadic_series(
        |j| {
            let lo = k0 + (1usize << j) - 1;
            let hi = k0 + (1usize << (j + 1)) - 1;
            let mut acc = 0.0;
            let mut nacc = 0.0;
            advance(hi, &mut state_k, &mut state_n, &mut |k, nk| {
                if k >= lo {
                    acc += -(1.0 - c * nk).ln();
                    nacc += nk;
                    if m.len() < STORED_STEPS {
                        m.push(mk);
                    }
                    mk *= 1.0 - c * nk;
                }
            });
            n_sum_blocks.push(nacc);
            Ok(acc)
        },
        26,
        1e-7,
    )?;
    // Tail of sum N_n, extrapolated like the log sum.
    let nb = &n_sum_blocks;
    let mut tail_n_sum: f64 = nb.iter().sum();
    if nb.len() >= 2 && nb[nb.len() - 2] > 0.0 {
        let ratio = nb[nb.len() - 1] / nb[nb.len() - 2];
        if ratio < 1.0 {
            tail_n_sum += nb[nb.len() - 1] * ratio / (1.0 - ratio);
        } else {
            tail_n_sum = f64::INFINITY;
        }
    }
    if !finite {
        return Ok(HopfReport {
            k_start: Some(k0),
            m,
            limit: 0.0,
            lower_bound: 0.0,
            tail_n_sum: f64::INFINITY,
            positive: false,
            failure: Some("the product tends to zero: sum of N_k diverges".into()),
        });
    }
    let limit = m_start * (-log_sum).exp();
    Ok(HopfReport {
        k_start: Some(k0),
        m,
        limit,
        lower_bound: m_start * (-2.0 * c * tail_n_sum).exp(),
        tail_n_sum,
        positive: limit > 0.0,
        failure: None,
    })
}
