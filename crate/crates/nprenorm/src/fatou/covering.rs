//! `Exp(zeta) = (-4/27) e^{2 pi i zeta}` and the covering `T(w) = sigma / (1 - e^{-2 pi i alpha w})`.

use crate::bigc::{two_pi, BigComplex};
use crate::error::{Error, Result};
use rug::ops::Pow;
use rug::Float;

fn minus_four_27(prec: u32) -> BigComplex {
    BigComplex::from_real(&(Float::with_val(prec, -4) / 27u32))
}

/// `2 pi i x`
fn two_pi_i(x: &BigComplex) -> BigComplex {
    let tp = two_pi(x.prec());
    BigComplex::new(-Float::with_val(x.prec(), &x.im * &tp), Float::with_val(x.prec(), &x.re * &tp))
}

pub fn exp_proj(zeta: &BigComplex) -> BigComplex {
    &minus_four_27(zeta.prec()) * &two_pi_i(zeta).exp()
}

/// Inverse of `exp_proj`, principal branch shifted by `branch`.
pub fn exp_lift(z: &BigComplex, branch: i64) -> Result<BigComplex> {
    if z.is_zero() {
        return Err(Error::ZeroArgument("exp_lift at 0".into()));
    }
    let p = z.prec();
    let l = z.div(&minus_four_27(p)).ln();
    let tp = two_pi(p);
    // log / (2 pi i) = (im - i re) / (2 pi)
    let re = Float::with_val(p, &l.im / &tp) + branch;
    let im = -Float::with_val(p, &l.re / &tp);
    Ok(BigComplex::new(re, im))
}

fn pole_tol(p: u32) -> Float {
    Float::with_val(p, 2).pow(-((p * 3 / 4) as i32))
}

pub fn covering_t(sigma: &BigComplex, alpha: &Float, w: &BigComplex) -> Result<BigComplex> {
    let p = sigma.prec();
    let aw = w.scale(&-Float::with_val(p, alpha));
    let den = &BigComplex::from_f64(p, 1.0, 0.0) - &two_pi_i(&aw).exp();
    if den.abs() <= pole_tol(p) {
        return Err(Error::PoleArgument("T has a pole at w in Z/alpha".into()));
    }
    Ok(sigma.div(&den))
}

/// Branch of `T^{-1}` with `arg(1 - sigma/z)` in `(-2 pi, 0]`, so that
/// `0 <= Re T^{-1}(z) < 1/alpha`, shifted by `branch / alpha`.
pub fn covering_t_inv(sigma: &BigComplex, alpha: &Float, z: &BigComplex, branch: i64) -> Result<BigComplex> {
    let (val, _) = t_inv_with_derivative(sigma, alpha, z)?;
    let p = sigma.prec();
    let shift = Float::with_val(p, branch) / alpha;
    Ok(BigComplex::new(val.re + shift, val.im))
}

/// `T^{-1}(z)` on the base branch and its derivative in `z`.
pub(crate) fn t_inv_with_derivative(sigma: &BigComplex, alpha: &Float, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
    if z.is_zero() {
        return Err(Error::PoleArgument("T^{-1} at 0".into()));
    }
    let p = sigma.prec();
    let one = BigComplex::from_f64(p, 1.0, 0.0);
    let s = &one - &sigma.div(z);
    if s.abs() <= pole_tol(p) {
        return Err(Error::PoleArgument("T^{-1} at sigma".into()));
    }
    let mut l = s.ln();
    if l.im > 0 {
        l.im -= two_pi(p);
    }
    // -l / (2 pi i alpha) = (i l) / (2 pi alpha)
    let k = Float::with_val(p, two_pi(p) * alpha);
    let val = BigComplex::new(-Float::with_val(p, &l.im / &k), Float::with_val(p, &l.re / &k));
    // d/dz: -(1/(2 pi i alpha)) sigma / (z (z - sigma))
    let zz = z * &(z - sigma);
    let d = sigma.div(&zz);
    let deriv = BigComplex::new(-Float::with_val(p, &d.im / &k), Float::with_val(p, &d.re / &k));
    Ok((val, deriv))
}
