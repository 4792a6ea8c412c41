//! Periodic cycles of period `q_n` by Newton's method on `f^q(z) - z`.

use super::map::NeutralQuadratic;
use crate::bigc::BigComplex;
use crate::error::{Error, Result};
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct CycleOptions {
    pub seeds: usize,
    pub newton_tol: f64,
    pub max_newton_steps: usize,
    pub escape_radius: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions { seeds: 64, newton_tol: 1e-10, max_newton_steps: 100, escape_radius: 10.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    #[serde(skip)]
    pub point: BigComplex,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    /// `|f^q(z) - z|` after each Newton step
    pub history: Vec<f64>,
    /// the whole cycle, down-converted
    pub orbit: Vec<(f64, f64)>,
    pub seed_index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleSearch {
    pub level: usize,
    pub period: u64,
    pub ring_radius: f64,
    pub cycles: Vec<Cycle>,
    pub diverged: usize,
    pub rejected: usize,
    pub unconverged: usize,
}

/// `f^q(z)` and its derivative.
pub fn iterate_with_derivative(map: &NeutralQuadratic, z: &BigComplex, q: u64) -> (BigComplex, BigComplex) {
    let mut w = z.clone();
    let mut d = BigComplex::from_f64(map.precision, 1.0, 0.0);
    for _ in 0..q {
        d = &d * &map.deriv(&w);
        w = map.eval(&w);
        if !w.is_finite() || w.abs_f64() > 1e150 {
            break;
        }
    }
    (w, d)
}

fn proper_divisors(q: u64) -> Vec<u64> {
    (1..q).filter(|d| q % d == 0).collect()
}

enum Outcome {
    Found(Cycle),
    Diverged,
    Rejected,
    Unconverged,
}

fn newton(map: &NeutralQuadratic, seed: BigComplex, q: u64, idx: usize, opts: &CycleOptions) -> Outcome {
    let mut z = seed;
    let mut history = Vec::new();
    let mut converged_at = None;
    for step in 0..opts.max_newton_steps {
        let (w, d) = iterate_with_derivative(map, &z, q);
        let f = &w - &z;
        let r = f.abs_f64();
        if !r.is_finite() || !(z.abs_f64() <= opts.escape_radius) {
            return Outcome::Diverged;
        }
        history.push(r);
        if r <= opts.newton_tol && converged_at.is_none() {
            converged_at = Some(step);
        }
        // a couple of extra steps past the tolerance show the quadratic tail
        if converged_at.map_or(false, |s| step >= s + 2) || r == 0.0 {
            break;
        }
        let dp = &d - &BigComplex::from_f64(map.precision, 1.0, 0.0);
        if dp.is_zero() {
            return Outcome::Unconverged;
        }
        z = &z - &f.div(&dp);
    }
    let (w, _) = iterate_with_derivative(map, &z, q);
    let residual = w.dist(&z).to_f64();
    if converged_at.is_none() || !(residual <= opts.newton_tol) {
        return Outcome::Unconverged;
    }
    let sep = (opts.newton_tol * 1e3).max(1e-8);
    if z.abs_f64() < sep {
        return Outcome::Rejected;
    }
    let mut orbit = Vec::with_capacity(q as usize);
    let mut p = z.clone();
    let mut on_shorter = false;
    let divs = proper_divisors(q);
    for k in 1..=q {
        orbit.push(p.to_f64());
        p = map.eval(&p);
        if divs.binary_search(&k).is_ok() && p.dist(&z).to_f64() < sep {
            on_shorter = true;
            break;
        }
    }
    if on_shorter {
        return Outcome::Rejected;
    }
    let (re, im) = z.to_f64();
    Outcome::Found(Cycle { point: z, re, im, residual, history, orbit, seed_index: idx })
}

/// Newton from `opts.seeds` points on the circle `|z| = ring_radius`.
/// Distinct cycles of exact period `q_level` are returned, first hit first.
pub fn find_small_cycle(map: &NeutralQuadratic, level: usize, ring_radius: f64, opts: &CycleOptions) -> Result<CycleSearch> {
    let digits = map
        .digits
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("cycle search needs the digit stream of alpha".into()))?;
    if level > digits.declared_depth() {
        return Err(Error::DepthExceeded(format!("level {level} beyond {} digits", digits.declared_depth())));
    }
    let q = digits.q_times(level)[level]
        .to_u64()
        .filter(|&q| q <= 1_000_000)
        .ok_or_else(|| Error::PrecisionExhausted(format!("q_{level} is too large to iterate")))?;
    if opts.seeds == 0 || !(ring_radius > 0.0) {
        return Err(Error::InvalidArgument("need a positive ring radius and seed count".into()));
    }
    let p = map.precision;
    let outcomes: Vec<Outcome> = (0..opts.seeds)
        .into_par_iter()
        .map(|k| {
            let t = Float::with_val(p, k as u32) / opts.seeds as u32;
            let seed = BigComplex::turn(&t).scale(&Float::with_val(p, ring_radius));
            newton(map, seed, q, k, opts)
        })
        .collect();

    let mut search = CycleSearch { level, period: q, ring_radius, cycles: vec![], diverged: 0, rejected: 0, unconverged: 0 };
    for o in outcomes {
        match o {
            Outcome::Found(c) => {
                let dup = search.cycles.iter().any(|old| {
                    c.orbit.iter().any(|&(x, y)| (x - old.re).hypot(y - old.im) < 1e-8)
                });
                if !dup {
                    search.cycles.push(c);
                }
            }
            Outcome::Diverged => search.diverged += 1,
            Outcome::Rejected => search.rejected += 1,
            Outcome::Unconverged => search.unconverged += 1,
        }
    }
    if search.cycles.is_empty() {
        if search.diverged == opts.seeds {
            return Err(Error::NewtonDiverged(format!("all {} seeds left radius {}", opts.seeds, opts.escape_radius)));
        }
        return Err(Error::NoCycleFound(format!(
            "period {q}: {} diverged, {} rejected, {} unconverged",
            search.diverged, search.rejected, search.unconverged
        )));
    }
    Ok(search)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::preset;
    use crate::dynamics::map::{make_map, Variant};

    fn golden() -> NeutralQuadratic {
        make_map(Variant::P, &preset("golden2", 20).unwrap(), 128).unwrap()
    }

    #[test]
    fn divisors() {
        assert_eq!(proper_divisors(12), vec![1, 2, 3, 4, 6]);
        assert_eq!(proper_divisors(5), vec![1]);
    }

    #[test]
    fn derivative_by_chain_rule() {
        let m = golden();
        let z = BigComplex::from_f64(128, 0.1, 0.2);
        let (w, d) = iterate_with_derivative(&m, &z, 3);
        let h = BigComplex::from_f64(128, 1e-20, 0.0);
        let (w2, _) = iterate_with_derivative(&m, &(&z + &h), 3);
        let fd = (&w2 - &w).scale_f64(1e20);
        assert!(fd.dist(&d).to_f64() < 1e-15);
    }

    #[test]
    fn period_five_cycle() {
        let m = golden();
        let s = find_small_cycle(&m, 2, 0.2221 * 1.1, &CycleOptions::default()).unwrap();
        assert_eq!(s.period, 5);
        for c in &s.cycles {
            assert!(c.residual < 1e-10);
            assert!(c.point.abs_f64() > 1e-3);
            assert_eq!(c.orbit.len(), 5);
        }
    }

    #[test]
    fn quadratic_tail() {
        let m = golden();
        let s = find_small_cycle(&m, 2, 0.2221 * 1.1, &CycleOptions::default()).unwrap();
        let c = &s.cycles[0];
        let h = &c.history;
        // find two consecutive residuals well above the rounding floor
        let k = h.iter().rposition(|&r| r > 1e-25 && r < 1e-3).unwrap();
        if k + 1 < h.len() && h[k + 1] > 1e-33 {
            let order = h[k + 1].ln() / h[k].ln();
            assert!(order > 1.6, "{h:?}");
        } else {
            assert!(h[k + 1..].iter().all(|&r| r < 1e-30));
        }
    }

    #[test]
    fn far_ring_fails() {
        let m = golden();
        let e = find_small_cycle(&m, 2, 1e3, &CycleOptions::default());
        assert!(matches!(e, Err(Error::NewtonDiverged(_)) | Err(Error::NoCycleFound(_))));
    }
}
