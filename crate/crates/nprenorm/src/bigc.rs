//! Complex numbers over MPFR floats.
//!
//! The system MPC library has no headers here, so complex arithmetic is
//! built from pairs of `rug::Float`.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_f64();
        write!(f, "({re:e} {im:+e}i)")
    }
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex::new(Float::new(prec), Float::new(prec))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        BigComplex::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn from_real(x: &Float) -> Self {
        BigComplex::new(x.clone(), Float::new(x.prec()))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn i(prec: u32) -> Self {
        BigComplex::from_f64(prec, 0.0, 1.0)
    }

    /// `e^{i theta}`
    pub fn cis(theta: &Float) -> Self {
        let p = theta.prec();
        let (s, c) = theta.clone().sin_cos(Float::new(p));
        BigComplex::new(c, s)
    }

    /// `e^{2 pi i t}`
    pub fn turn(t: &Float) -> Self {
        let p = t.prec();
        let two_pi = Float::with_val(p, Constant::Pi) * 2u32;
        BigComplex::cis(&(two_pi * t))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square() + self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.im.atan2_ref(&self.re))
    }

    pub fn conj(&self) -> Self {
        BigComplex::new(self.re.clone(), -self.im.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn scale(&self, s: &Float) -> Self {
        BigComplex::new(Float::with_val(self.prec(), &self.re * s), Float::with_val(self.prec(), &self.im * s))
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        BigComplex::new(self.re.clone() * s, self.im.clone() * s)
    }

    pub fn square(&self) -> Self {
        let p = self.prec();
        let re = Float::with_val(p, self.re.clone().square() - self.im.clone().square());
        let im = Float::with_val(p, &self.re * &self.im) * 2u32;
        BigComplex::new(re, im)
    }

    pub fn recip(&self) -> Self {
        let n = self.norm();
        let p = self.prec();
        BigComplex::new(Float::with_val(p, &self.re / &n), -Float::with_val(p, &self.im / &n))
    }

    pub fn div(&self, other: &BigComplex) -> Self {
        self * &other.recip()
    }

    pub fn exp(&self) -> Self {
        let m = self.re.clone().exp();
        BigComplex::cis(&self.im).scale(&m)
    }

    /// Principal logarithm, imaginary part in `(-pi, pi]`.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        let re = self.abs().ln();
        BigComplex::new(Float::with_val(p, re), self.arg())
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        let r = self.abs();
        if r.is_zero() {
            return BigComplex::zero(p);
        }
        let a = (Float::with_val(p, &r + &self.re) / 2u32).sqrt();
        let b = (Float::with_val(p, &r - &self.re) / 2u32).sqrt();
        if self.im.is_sign_negative() {
            BigComplex::new(a, -b)
        } else {
            BigComplex::new(a, b)
        }
    }

    pub fn powu(&self, n: u32) -> Self {
        let mut acc = BigComplex::from_f64(self.prec(), 1.0, 0.0);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = base.square();
            k >>= 1;
        }
        acc
    }

    pub fn dist(&self, other: &BigComplex) -> Float {
        (self - other).abs()
    }

    /// Decimal strings at `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (float_to_decimal(&self.re, digits), float_to_decimal(&self.im, digits))
    }
}

pub fn float_to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits.max(1)))
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn two_pi(prec: u32) -> Float {
    pi(prec) * 2u32
}

/// Machine epsilon of a precision, `2^{-prec}`.
pub fn ulp(prec: u32) -> Float {
    Float::with_val(prec, Float::with_val(prec, 2).pow(-(prec as i32)))
}

impl<'a> Add<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn add(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        BigComplex::new(Float::with_val(p, &self.re + &o.re), Float::with_val(p, &self.im + &o.im))
    }
}

impl<'a> Sub<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn sub(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        BigComplex::new(Float::with_val(p, &self.re - &o.re), Float::with_val(p, &self.im - &o.im))
    }
}

impl<'a> Mul<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn mul(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        BigComplex::new(re, im)
    }
}

impl Add for BigComplex {
    type Output = BigComplex;
    fn add(self, o: BigComplex) -> BigComplex {
        &self + &o
    }
}

impl Sub for BigComplex {
    type Output = BigComplex;
    fn sub(self, o: BigComplex) -> BigComplex {
        &self - &o
    }
}

impl Mul for BigComplex {
    type Output = BigComplex;
    fn mul(self, o: BigComplex) -> BigComplex {
        &self * &o
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 128;

    #[test]
    fn exp_ln_round_trip() {
        let z = BigComplex::from_f64(P, 0.3, -1.7);
        let back = z.ln().exp();
        assert!(back.dist(&z).to_f64() < 1e-35);
    }

    #[test]
    fn sqrt_squares_back() {
        for (re, im) in [(2.0, 0.0), (-1.0, 0.0), (0.25, -3.0), (-4.0, -0.5)] {
            let z = BigComplex::from_f64(P, re, im);
            let r = z.sqrt();
            assert!(r.square().dist(&z).to_f64() < 1e-35);
            assert!(r.re.to_f64() >= 0.0);
        }
    }

    #[test]
    fn recip_and_div() {
        let a = BigComplex::from_f64(P, 1.0, 2.0);
        let b = BigComplex::from_f64(P, -0.5, 0.25);
        let q = a.div(&b);
        assert!((&q * &b).dist(&a).to_f64() < 1e-35);
    }

    #[test]
    fn powu_matches_repeated_product() {
        let z = BigComplex::from_f64(P, 0.6, 0.7);
        let mut acc = BigComplex::from_f64(P, 1.0, 0.0);
        for _ in 0..13 {
            acc = &acc * &z;
        }
        assert!(z.powu(13).dist(&acc).to_f64() < 1e-33);
    }

    #[test]
    fn turn_is_unit() {
        let t = Float::with_val(P, 0.123);
        assert!((BigComplex::turn(&t).abs().to_f64() - 1.0).abs() < 1e-30);
    }
}
