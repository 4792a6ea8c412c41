//! Approximate Fatou coordinate from the formal logarithm of `h(z) = z + c z (z - sigma)`,
//! i.e. the vector field `X` whose time one map agrees with `h` to a given order.
//! With `X = g (1 + r)` and `1/X = S / g`, the template is
//!
//! `Phi_X(z) = T^{-1}(z) + (A + B) log((sigma - z)/sigma) + int q(z)/c`
//!
//! where `q` is the polynomial part of `S / (z (z - sigma))` and the residues are
//! replaced by their exact values `A = 1/log h'(0)` and `B = 1/log h'(sigma)`.

use super::covering::t_inv_with_derivative;
use crate::bigc::BigComplex;
use crate::dynamics::NeutralQuadratic;
use crate::error::{Error, Result};
use rug::Float;

pub type Poly = Vec<BigComplex>;

fn zero(p: u32) -> BigComplex {
    BigComplex::zero(p)
}

fn trim(mut a: Poly) -> Poly {
    while a.len() > 1 && a.last().unwrap().is_zero() {
        a.pop();
    }
    a
}

pub fn padd(a: &Poly, b: &Poly, p: u32) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => zero(p),
        })
        .collect()
}

pub fn pmul(a: &Poly, b: &Poly, p: u32) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![zero(p)];
    }
    let mut out = vec![zero(p); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

pub fn pscale(a: &Poly, s: &BigComplex) -> Poly {
    a.iter().map(|x| x * s).collect()
}

pub fn pder(a: &Poly, p: u32) -> Poly {
    if a.len() <= 1 {
        return vec![zero(p)];
    }
    a.iter().enumerate().skip(1).map(|(i, x)| x.scale_f64(i as f64)).collect()
}

/// Antiderivative vanishing at 0.
pub fn pint(a: &Poly, p: u32) -> Poly {
    let mut out = vec![zero(p)];
    out.extend(a.iter().enumerate().map(|(i, x)| x.scale(&(Float::with_val(p, 1u32) / (i as u32 + 1)))));
    out
}

/// Quotient and remainder.
pub fn pdiv(a: &Poly, b: &Poly, p: u32) -> (Poly, Poly) {
    let b = trim(b.clone());
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (vec![zero(p)], r);
    }
    let lead = b[db].clone();
    let mut q = vec![zero(p); r.len() - db];
    for k in (0..q.len()).rev() {
        let t = r[k + db].div(&lead);
        for (j, bj) in b.iter().enumerate() {
            r[k + j] = &r[k + j] - &(&t * bj);
        }
        q[k] = t;
    }
    r.truncate(db.max(1));
    (q, r)
}

/// Value and derivative by Horner.
pub fn peval(a: &Poly, z: &BigComplex) -> (BigComplex, BigComplex) {
    let p = z.prec();
    let mut v = zero(p);
    let mut d = zero(p);
    for c in a.iter().rev() {
        d = &(&d * z) + &v;
        v = &(&v * z) + c;
    }
    (v, d)
}

/// Graded pieces `X_1 = g, X_2, ..., X_order` of the formal logarithm, with
/// `X_n = -sum_{m >= 2} (1/m!) [L_X^{m-1} X]_n` and `L_X F = X F'`.
pub fn formal_log(g: &Poly, order: usize, p: u32) -> Vec<Poly> {
    let mut xs: Vec<Poly> = vec![g.clone()];
    for n in 2..=order {
        let nn = n + 1;
        let mut f: Vec<Poly> = vec![vec![zero(p)]; nn];
        for k in 1..n {
            f[k] = xs[k - 1].clone();
        }
        let mut total = vec![zero(p)];
        let mut term = f;
        let mut fact = Float::with_val(p, 1u32);
        for m in 2..=n {
            let mut out: Vec<Poly> = vec![vec![zero(p)]; nn];
            for (i, xi) in xs.iter().enumerate() {
                for (j, fj) in term.iter().enumerate() {
                    let k = i + 1 + j;
                    if k < nn {
                        out[k] = padd(&out[k], &pmul(xi, &pder(fj, p), p), p);
                    }
                }
            }
            term = out;
            fact *= m as u32;
            let inv = BigComplex::from_real(&(Float::with_val(p, 1u32) / &fact));
            total = padd(&total, &pscale(&term[n], &inv), p);
        }
        xs.push(pscale(&total, &BigComplex::from_f64(p, -1.0, 0.0)));
    }
    xs
}

#[derive(Clone, Debug)]
pub struct Template {
    pub order: usize,
    /// `A + B`
    pub ab: BigComplex,
    /// `int q / c`
    pub qint: Poly,
    pub sigma: BigComplex,
    pub alpha: Float,
}

impl Template {
    pub fn build(map: &NeutralQuadratic, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("template order must be positive".into()));
        }
        let p = map.precision;
        let s = &map.sigma;
        let c = &map.c;
        // g = c z (z - sigma) = h(z) - z
        let g: Poly = vec![zero(p), -(c * s), c.clone()];
        let xs = formal_log(&g, order, p);
        // r graded by order: r[n - 1] = X_n / g
        let mut r: Vec<Poly> = vec![vec![zero(p)]; order];
        for n in 2..=order {
            let (q, rem) = pdiv(&xs[n - 1], &g, p);
            let scale = xs[n - 1].iter().map(|x| x.abs_f64()).fold(1e-300, f64::max);
            let worst = rem.iter().map(|x| x.abs_f64()).fold(0.0, f64::max);
            if worst > scale * 1e-20 {
                return Err(Error::ChartDiverged(format!("X_{n} not divisible by g (remainder {worst:e})")));
            }
            r[n - 1] = q;
        }
        // S = sum_j (-r)^j, truncated below `order`
        let minus_one = BigComplex::from_f64(p, -1.0, 0.0);
        let neg_r: Vec<Poly> = r.iter().map(|x| pscale(x, &minus_one)).collect();
        let mut pow: Vec<Poly> = vec![vec![zero(p)]; order];
        pow[0] = vec![BigComplex::from_f64(p, 1.0, 0.0)];
        let mut stot: Poly = pow[0].clone();
        for _ in 1..order {
            let mut next: Vec<Poly> = vec![vec![zero(p)]; order];
            for a in 0..order {
                for b in 1..order {
                    if a + b < order {
                        next[a + b] = padd(&next[a + b], &pmul(&pow[a], &neg_r[b], p), p);
                    }
                }
            }
            pow = next;
            for piece in &pow {
                stot = padd(&stot, piece, p);
            }
        }
        let zz: Poly = vec![zero(p), -s.clone(), BigComplex::from_f64(p, 1.0, 0.0)];
        let (q, _) = pdiv(&stot, &zz, p);
        let qint = pscale(&pint(&q, p), &c.recip());
        let two = BigComplex::from_f64(p, 2.0, 0.0);
        let a = map.lambda.ln().recip();
        let b = (&two - &map.lambda).ln().recip();
        Ok(Template { order, ab: &a + &b, qint, sigma: s.clone(), alpha: map.alpha0() })
    }

    /// `Phi_X(z)` and its derivative.
    pub fn eval(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        let (t, dt) = t_inv_with_derivative(&self.sigma, &self.alpha, z)?;
        // log((sigma - z)/sigma) keeps its cut on the ray from sigma away from 0
        let u = (&self.sigma - z).div(&self.sigma);
        let l = u.ln();
        let dl = (z - &self.sigma).recip();
        let (qv, qd) = peval(&self.qint, z);
        let v = &(&t + &(&self.ab * &l)) + &qv;
        let d = &(&dt + &(&self.ab * &dl)) + &qd;
        Ok((v, d))
    }
}
