//! Brjuno profile: alpha_i, beta_i, partial Brjuno sums and closest return times.

use super::rotation::RotationNumber;
use crate::error::{Error, Result};
use rug::{Assign, Float, Integer};

#[derive(Clone, Debug)]
pub struct BrjunoProfile {
    pub precision: u32,
    pub depth: usize,
    /// `alpha_0 ..= alpha_depth`
    pub alphas: Vec<Float>,
    /// `beta_0 = 1`, `beta_k = prod_{i=1}^k alpha_i`
    pub betas: Vec<Float>,
    /// `sum_{j=1}^k beta_{j-1} log(1/alpha_j)` for `k = 0 ..= depth`
    pub brjuno_partials: Vec<Float>,
    /// `q_0 ..= q_{depth+1}`
    pub q_times: Vec<Integer>,
}

/// Build the profile up to `depth`. Needs `depth < declared_depth` so that
/// `alpha_depth` comes from a real digit rather than the zero tail.
pub fn brjuno_profile(digits: &RotationNumber, depth: usize, prec: u32) -> Result<BrjunoProfile> {
    if depth >= digits.declared_depth() {
        return Err(Error::DepthExceeded(format!(
            "profile depth {depth} needs more than {} digits",
            digits.declared_depth()
        )));
    }
    if prec < 16 {
        return Err(Error::PrecisionExhausted(format!("{prec} bits")));
    }
    let mut alphas = digits.alphas(prec);
    alphas.truncate(depth + 1);
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0)) {
        return Err(Error::PrecisionExhausted("alpha underflow".into()));
    }

    let mut betas = Vec::with_capacity(depth + 1);
    let mut partials = Vec::with_capacity(depth + 1);
    betas.push(Float::with_val(prec, 1));
    partials.push(Float::new(prec));
    let mut beta_sum = Float::new(prec);
    for j in 1..=depth {
        let log_inv = -Float::with_val(prec, alphas[j].ln_ref());
        let term = Float::with_val(prec, &betas[j - 1] * &log_inv);
        beta_sum += &betas[j - 1];
        partials.push(Float::with_val(prec, &partials[j - 1] + &term));
        betas.push(Float::with_val(prec, &betas[j - 1] * &alphas[j]));
    }
    assert!(beta_sum <= 2, "sum of beta_{{j-1}} exceeds 2");

    Ok(BrjunoProfile {
        precision: prec,
        depth,
        alphas,
        betas,
        brjuno_partials: partials,
        q_times: digits.q_times(depth + 1),
    })
}

impl BrjunoProfile {
    /// `log(1/alpha_j)`
    pub fn log_inv(&self, j: usize) -> Float {
        -Float::with_val(self.precision, self.alphas[j].ln_ref())
    }

    pub fn brjuno_partial(&self) -> &Float {
        &self.brjuno_partials[self.depth]
    }

    /// Last increment of the partial sums.
    pub fn last_increment(&self) -> Float {
        if self.depth == 0 {
            return Float::new(self.precision);
        }
        Float::with_val(self.precision, &self.brjuno_partials[self.depth] - &self.brjuno_partials[self.depth - 1])
    }

    /// `beta_j^{-1} sum_{i=j}^{depth-1} beta_i log(1/alpha_{i+1})`
    pub fn brjuno_tail(&self, j: usize) -> Float {
        let p = self.precision;
        let mut s = Float::new(p);
        for i in j..self.depth {
            s += Float::with_val(p, &self.betas[i] * self.log_inv(i + 1));
        }
        s / &self.betas[j]
    }

    /// Compare `q_times` with the brute-force closest return oracle for
    /// every time up to `bound`.
    pub fn check_q_times(&self, alpha: &Float, bound: u64) -> QCheck {
        let oracle = closest_returns(alpha, self.q_times.get(1).and_then(|q| q.to_u64()).unwrap_or(1), bound);
        let recur: Vec<u64> = self
            .q_times
            .iter()
            .filter_map(|q| q.to_u64())
            .take_while(|&q| q <= bound)
            .collect();
        let n = recur.len().min(oracle.len());
        QCheck { bound, agrees: recur[..n] == oracle[..n] && recur.len() == oracle.len(), recurrence: recur, oracle }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct QCheck {
    pub bound: u64,
    pub agrees: bool,
    pub recurrence: Vec<u64>,
    pub oracle: Vec<u64>,
}

/// `|q alpha - round(q alpha)|`, monotone in `|e^{2 pi i q alpha} - 1| = 2|sin(pi q alpha)|`.
fn circle_dist(alpha: &Float, q: u64) -> Float {
    let p = alpha.prec();
    let t = Float::with_val(p, alpha * q);
    let r = Float::with_val(p, t.round_ref());
    Float::with_val(p, t - r).abs()
}

/// Closest return times of the rotation by `alpha` straight from the definition:
/// `q_0 = 1`, `q_1 = a_0`, and `q_{i+1}` is the least integer above `q_{i-1}`
/// with `|R^{q_{i+1}}(1) - 1| < |R^{q_i}(1) - 1|`. Stops at `bound`.
pub fn closest_returns(alpha: &Float, a0: u64, bound: u64) -> Vec<u64> {
    let mut qs: Vec<u64> = vec![1];
    if a0 > bound {
        return qs;
    }
    qs.push(a0);
    let p = alpha.prec();
    // fractional part of alpha, stepped in place: t = frac(q alpha)
    let frac = Float::with_val(p, alpha - Float::with_val(p, alpha.floor_ref()));
    let mut t = Float::new(p);
    let mut d = Float::new(p);
    loop {
        let n = qs.len();
        let cur = circle_dist(alpha, qs[n - 1]);
        let mut q = qs[n - 2] + 1;
        let start = Float::with_val(p, alpha * q);
        t.assign(&start - Float::with_val(p, start.floor_ref()));
        loop {
            if q > bound {
                return qs;
            }
            if t < 0.5 {
                d.assign(&t);
            } else {
                d.assign(1u32 - &t);
            }
            // q_i itself is never closer than itself, whatever the rounding of t
            if q != qs[n - 1] && d < cur {
                break;
            }
            q += 1;
            t += &frac;
            if t >= 1u32 {
                t -= 1u32;
            }
        }
        qs.push(q);
    }
}
