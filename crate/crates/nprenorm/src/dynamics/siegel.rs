//! Siegel disk size: the Yoccoz-type lower bound, the radius of the
//! linearizing series, and a critical orbit sample standing in for the boundary.

use super::map::NeutralQuadratic;
use super::orbit::{iterate, BoundarySample, IterOptions};
use crate::arith::brjuno_profile;
use crate::bigc::BigComplex;
use crate::error::{Error, Result};
use rug::{Assign, Float};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct SiegelOptions {
    pub c_yoccoz: f64,
    /// partial Brjuno sums above this are treated as divergent
    pub blowup: f64,
    /// the last increment of the partial sums must be below this
    pub tail_tol: f64,
    /// the boundary sample uses the largest `q_m` not above this
    pub boundary_bound: u64,
    pub escape_radius: f64,
}

impl Default for SiegelOptions {
    fn default() -> Self {
        SiegelOptions { c_yoccoz: 1.0, blowup: 50.0, tail_tol: 1e-6, boundary_bound: 10_000, escape_radius: 10.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SiegelEstimate {
    pub depth: usize,
    pub brjuno_partial: f64,
    pub last_increment: f64,
    pub c_yoccoz: f64,
    pub yoccoz_lower: f64,
    pub series_terms: usize,
    pub linearization_radius: f64,
    /// `|b_n|^{-1/n}` for every term, useful for judging the root test
    #[serde(skip)]
    pub root_terms: Vec<f64>,
    pub boundary_q: u64,
    #[serde(skip)]
    pub boundary_sample: Arc<BoundarySample>,
}

impl SiegelEstimate {
    /// Disk that certainly lies in the Siegel disk (Koebe quarter theorem).
    pub fn interior_radius(&self) -> f64 {
        self.linearization_radius / 4.0
    }
}

/// Coefficients `b_1 = 1, b_2, ...` of the linearizing map `phi` with
/// `f(phi(w)) = phi(lambda w)`, from `b_n (lambda^n - lambda) = c [phi^2]_n`.
pub fn linearizing_series(map: &NeutralQuadratic, terms: usize) -> Vec<BigComplex> {
    let p = map.precision;
    let mut b: Vec<BigComplex> = Vec::with_capacity(terms + 1);
    b.push(BigComplex::zero(p));
    if terms == 0 {
        return b;
    }
    b.push(BigComplex::from_f64(p, 1.0, 0.0));
    let mut lam_n = map.lambda.clone();
    let (mut sre, mut sim) = (Float::new(p), Float::new(p));
    let mut t = Float::new(p);
    for n in 2..=terms {
        lam_n = &lam_n * &map.lambda;
        // [phi^2]_n = sum_{i+j=n} b_i b_j, folded in half
        sre.assign(0u32);
        sim.assign(0u32);
        for i in 1..=(n - 1) / 2 {
            let (x, y) = (&b[i], &b[n - i]);
            t.assign(&x.re * &y.re);
            sre += &t;
            t.assign(&x.im * &y.im);
            sre -= &t;
            t.assign(&x.re * &y.im);
            sim += &t;
            t.assign(&x.im * &y.re);
            sim += &t;
        }
        sre *= 2u32;
        sim *= 2u32;
        if n % 2 == 0 {
            let sq = b[n / 2].square();
            sre += &sq.re;
            sim += &sq.im;
        }
        let conv = BigComplex::new(sre.clone(), sim.clone());
        let den = &lam_n - &map.lambda;
        b.push((&map.c * &conv).div(&den));
    }
    b
}

/// Root test with a plain average of `|b_n|^{-1/n}` over the last 10% of terms.
pub fn root_test_radius(b: &[BigComplex]) -> (f64, Vec<f64>) {
    let terms = b.len().saturating_sub(1);
    let roots: Vec<f64> = (1..=terms)
        .map(|n| {
            let a = b[n].abs();
            if a.is_zero() {
                f64::INFINITY
            } else {
                (-a.ln().to_f64() / n as f64).exp()
            }
        })
        .collect();
    if terms < 2 {
        return (f64::INFINITY, roots);
    }
    let from = (terms as f64 * 0.9).floor() as usize;
    let tail: Vec<f64> = roots[from.max(1)..].iter().copied().filter(|r| r.is_finite()).collect();
    if tail.is_empty() {
        return (f64::INFINITY, roots);
    }
    (tail.iter().sum::<f64>() / tail.len() as f64, roots)
}

/// `NonBrjunoSuspected` when the partial sum passes `blowup` or is still
/// moving by more than `tail_tol` at the last level.
pub fn siegel_estimate(map: &NeutralQuadratic, depth: usize, series_terms: usize, opts: &SiegelOptions) -> Result<SiegelEstimate> {
    let digits = map
        .digits
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("siegel estimate needs the digit stream of alpha".into()))?;
    if digits.declared_depth() < 2 {
        return Err(Error::DepthExceeded("need at least two digits".into()));
    }
    let depth = depth.min(digits.declared_depth() - 1);
    let prof = brjuno_profile(digits, depth, map.precision)?;
    let partial = prof.brjuno_partial().to_f64();
    let inc = prof.last_increment().to_f64();
    if !(partial <= opts.blowup) || !(inc <= opts.tail_tol) {
        return Err(Error::NonBrjunoSuspected(format!(
            "partial Brjuno sum {partial:.6} at depth {depth}, last increment {inc:.3e}"
        )));
    }
    let yoccoz = opts.c_yoccoz * (-partial).exp();

    let b = linearizing_series(map, series_terms);
    let (radius, roots) = root_test_radius(&b);

    let q = digits
        .q_times(depth + 1)
        .iter()
        .filter_map(|q| q.to_u64())
        .filter(|&q| q <= opts.boundary_bound)
        .max()
        .unwrap_or(1);
    let tr = iterate(map, &map.cv, q - 1, &IterOptions { escape_radius: opts.escape_radius, ..Default::default() })?;
    if tr.escaped() {
        return Err(Error::EscapeDetected("critical orbit escaped while sampling the boundary".into()));
    }
    Ok(SiegelEstimate {
        depth,
        brjuno_partial: partial,
        last_increment: inc,
        c_yoccoz: opts.c_yoccoz,
        yoccoz_lower: yoccoz,
        series_terms,
        linearization_radius: radius.max(0.0),
        root_terms: roots,
        boundary_q: q,
        boundary_sample: Arc::new(BoundarySample::from_trace(&tr)?),
    })
}
