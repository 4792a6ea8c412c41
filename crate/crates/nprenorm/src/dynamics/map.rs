//! The neutral quadratic maps `P_a(z) = e^{2 pi i a} z + z^2` and
//! `Q_a(z) = e^{2 pi i a} z + (27/16) e^{4 pi i a} z^2`.

use crate::arith::RotationNumber;
use crate::bigc::{ulp, BigComplex};
use crate::error::{Error, Result};
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    P,
    Q,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Variant::P),
            "Q" | "q" => Ok(Variant::Q),
            _ => Err(Error::InvalidArgument(format!("unknown map variant '{s}'"))),
        }
    }
}

/// `f(z) = lambda z + c z^2`.
#[derive(Clone, Debug)]
pub struct NeutralQuadratic {
    pub variant: Variant,
    pub precision: u32,
    pub alpha: Float,
    /// Digit stream when the map was built from one.
    pub digits: Option<RotationNumber>,
    pub lambda: BigComplex,
    pub c: BigComplex,
    pub cp: BigComplex,
    pub cv: BigComplex,
    pub sigma: BigComplex,
}

pub fn make_map(variant: Variant, alpha: &RotationNumber, prec: u32) -> Result<NeutralQuadratic> {
    if alpha.declared_depth() == 0 {
        return Err(Error::InvalidDigits("map needs at least one digit".into()));
    }
    let mut m = from_alpha(variant, &alpha.eval(prec), prec)?;
    m.digits = Some(alpha.clone());
    Ok(m)
}

/// Build from a real rotation number directly (rational values are allowed).
pub fn from_alpha(variant: Variant, alpha: &Float, prec: u32) -> Result<NeutralQuadratic> {
    if prec < 32 {
        return Err(Error::PrecisionExhausted(format!("{prec} bits is below the 32-bit floor")));
    }
    let alpha = Float::with_val(prec, alpha);
    let lambda = BigComplex::turn(&alpha);
    let c = match variant {
        Variant::P => BigComplex::from_f64(prec, 1.0, 0.0),
        Variant::Q => lambda.square().scale(&Float::with_val(prec, 27.0 / 16.0)),
    };
    let one = BigComplex::from_f64(prec, 1.0, 0.0);
    let two_c = c.scale_f64(2.0);
    let cp = -lambda.div(&two_c);
    let sigma = (&one - &lambda).div(&c);
    let mut m = NeutralQuadratic { variant, precision: prec, alpha, digits: None, lambda, c, cp: cp.clone(), cv: cp.clone(), sigma };
    m.cv = m.eval(&cp);
    m.check()?;
    Ok(m)
}

impl NeutralQuadratic {
    #[inline]
    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let t = &self.lambda + &(&self.c * z);
        z * &t
    }

    #[inline]
    pub fn deriv(&self, z: &BigComplex) -> BigComplex {
        let t = &self.c * z;
        &self.lambda + &t.scale_f64(2.0)
    }

    /// Preimage of `y` nearest to `near`.
    pub fn inverse_near(&self, y: &BigComplex, near: &BigComplex) -> BigComplex {
        let disc = &self.lambda.square() + &(&self.c * y).scale_f64(4.0);
        let r = disc.sqrt();
        let two_c = self.c.scale_f64(2.0);
        let z1 = (&r - &self.lambda).div(&two_c);
        let z2 = (&(-r) - &self.lambda).div(&two_c);
        if z1.dist(near) <= z2.dist(near) {
            z1
        } else {
            z2
        }
    }

    /// Distance from `alpha` to the nearest integer.
    pub fn alpha0(&self) -> Float {
        let r = Float::with_val(self.precision, self.alpha.round_ref());
        Float::with_val(self.precision, &self.alpha - r).abs()
    }

    pub fn ulp(&self) -> Float {
        ulp(self.precision)
    }

    /// Bounds `C^{-1}, C` on `|sigma| / alpha_0` from the closed form
    /// `|sigma| = 2 sin(pi alpha_0) / |c|` and `4 x <= 2 sin(pi x) <= 2 pi x` on `[0, 1/2]`.
    pub fn sigma_ratio_bounds(&self) -> (f64, f64) {
        let k = match self.variant {
            Variant::P => 1.0,
            Variant::Q => 16.0 / 27.0,
        };
        (4.0 * k, 2.0 * std::f64::consts::PI * k)
    }

    /// `|f(sigma) - sigma|`
    pub fn sigma_residual(&self) -> Float {
        self.eval(&self.sigma).dist(&self.sigma)
    }

    /// Central difference of `f` at 0 with step `2^{-prec/2}`.
    pub fn multiplier_fd(&self) -> BigComplex {
        let p = self.precision;
        let h = Float::with_val(p, 2).pow(-((p / 2) as i32));
        let hp = BigComplex::from_real(&h);
        let hm = -hp.clone();
        let diff = &self.eval(&hp) - &self.eval(&hm);
        diff.scale(&Float::with_val(p, Float::with_val(p, 0.5) / &h))
    }

    fn check(&self) -> Result<()> {
        let p = self.precision;
        let u = self.ulp();
        let tol = Float::with_val(p, &u * 10u32);
        if self.eval(&BigComplex::zero(p)).abs() > tol {
            return Err(Error::PrecisionExhausted("f(0) != 0".into()));
        }
        if self.sigma_residual() > tol {
            return Err(Error::PrecisionExhausted(format!(
                "sigma residual {:.3e} above 10 ulp",
                self.sigma_residual().to_f64()
            )));
        }
        if self.deriv(&BigComplex::zero(p)).dist(&self.lambda) > tol {
            return Err(Error::PrecisionExhausted("f'(0) != lambda".into()));
        }
        let a0 = self.alpha0();
        if !a0.is_zero() {
            let ratio = (self.sigma.abs() / &a0).to_f64();
            let (lo, hi) = self.sigma_ratio_bounds();
            if !(ratio >= lo * (1.0 - 1e-9) && ratio <= hi * (1.0 + 1e-9)) {
                return Err(Error::PrecisionExhausted(format!("|sigma|/alpha_0 = {ratio} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::preset;

    const P: u32 = 128;

    fn q_map(a: f64) -> NeutralQuadratic {
        from_alpha(Variant::Q, &Float::with_val(P, a), P).unwrap()
    }

    #[test]
    fn q_critical_structure() {
        let r = preset("golden2", 10).unwrap();
        let m = make_map(Variant::Q, &r, P).unwrap();
        let want = BigComplex::new(Float::with_val(P, -4) / 27u32, Float::new(P));
        assert!(m.cv.dist(&want).to_f64() < 1e-36);
        assert!((m.cp.abs_f64() - 8.0 / 27.0).abs() < 1e-15);
        // cp = -(8/27) e^{-2 pi i alpha}
        let e = BigComplex::turn(&(-m.alpha.clone())).scale(&(Float::with_val(P, -8) / 27u32));
        assert!(m.cp.dist(&e).to_f64() < 1e-36);
        assert!(m.deriv(&m.cp).abs_f64() < 1e-36);
    }

    #[test]
    fn q_sigma_closed_form() {
        let m = q_map(0.05);
        let want = 2.0 * (0.05 * std::f64::consts::PI).sin() * 16.0 / 27.0;
        assert!((m.sigma.abs_f64() - want).abs() < 1e-14);
        assert!((m.sigma.abs_f64() - 0.1854038).abs() < 1e-7);
        assert!(m.sigma_residual().to_f64() <= 1e-30);
    }

    #[test]
    fn p_map_structure() {
        let r = preset("golden2", 10).unwrap();
        let m = make_map(Variant::P, &r, P).unwrap();
        // cv = -lambda^2 / 4
        let want = m.lambda.square().scale_f64(-0.25);
        assert!(m.cv.dist(&want).to_f64() < 1e-36);
    }

    #[test]
    fn multiplier_matches_closed_form() {
        for prec in [64u32, 128, 256, 512] {
            let m = from_alpha(Variant::Q, &Float::with_val(prec, 0.0312), prec).unwrap();
            let u = m.ulp();
            let d = m.multiplier_fd().dist(&m.lambda);
            assert!(d <= Float::with_val(prec, &u * 10u32), "prec {prec}: {:e}", d.to_f64());
            assert!(m.sigma_residual() <= Float::with_val(prec, &u * 10u32));
        }
    }

    #[test]
    fn inverse_branch_recovers_point() {
        let m = q_map(0.02);
        let z = BigComplex::from_f64(P, 0.03, 0.01);
        let back = m.inverse_near(&m.eval(&z), &z);
        assert!(back.dist(&z).to_f64() < 1e-35);
    }

    #[test]
    fn sigma_ratio_bracket() {
        for a in [1e-4, 1e-3, 0.01, 0.03, 0.05] {
            let m = q_map(a);
            let r = m.sigma.abs_f64() / a;
            assert!((3.0..=4.5).contains(&r), "{a}: {r}");
        }
        let m = q_map(1e-6);
        assert!((m.sigma.abs_f64() / 1e-6 - 32.0 * std::f64::consts::PI / 27.0).abs() < 1e-6);
    }
}
