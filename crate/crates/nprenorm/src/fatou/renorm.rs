//! Pointwise near-parabolic renormalization: lift `w` to the far end of the
//! petal, pull back by `Phi`, iterate `h` until the orbit re-enters the strip
//! near the critical value, and project with `Exp`.

use super::chart::FatouChart;
use super::covering::{exp_lift, exp_proj};
use crate::bigc::BigComplex;
use crate::error::{Error, Result};
use rug::Float;
use serde::Serialize;

/// `(4/27) e^{4 pi}`
pub fn image_bound() -> f64 {
    4.0 / 27.0 * (4.0 * std::f64::consts::PI).exp()
}

#[derive(Clone, Debug)]
pub struct RenormOptions {
    pub strip: (f64, f64),
    pub max_iters: usize,
    /// points whose `|Im Phi|` exceeds this are not counted as re-entries
    pub im_cap: f64,
}

impl Default for RenormOptions {
    fn default() -> Self {
        RenormOptions { strip: (0.5, 1.5), max_iters: 500, im_cap: 10.0 }
    }
}

#[derive(Clone, Debug)]
pub struct RenormPoint {
    pub value: BigComplex,
    /// number of iterates of `h` until re-entry
    pub ell: usize,
    pub zeta: BigComplex,
}

pub fn renormalize_eval(chart: &FatouChart, w: &BigComplex, opts: &RenormOptions) -> Result<RenormPoint> {
    if !(w.abs_f64() <= image_bound()) {
        return Err(Error::OutsideDomain(format!("|w| = {:.3e} beyond (4/27) e^(4 pi)", w.abs_f64())));
    }
    let p = chart.precision();
    let mut zeta = exp_lift(w, 0)?;
    // Re zeta in (R_end - 1, R_end], R_end = 1/alpha - k
    let r_end = Float::with_val(p, Float::with_val(p, 1u32) / &chart.alpha0) - chart.config.k_config;
    let k = Float::with_val(p, &r_end - &zeta.re).floor();
    zeta.re += &k;
    let start = zeta.clone();
    let mut z = chart.inverse(&zeta)?;
    for ell in 1..=opts.max_iters {
        z = chart.map.eval(&z);
        if !(z.abs_f64() <= chart.config.escape_radius) {
            break;
        }
        if let Ok(phi) = chart.eval(&z) {
            let (x, y) = phi.to_f64();
            if x >= opts.strip.0 && x <= opts.strip.1 && y.abs() < opts.im_cap {
                return Ok(RenormPoint { value: exp_proj(&phi), ell, zeta: start });
            }
        }
    }
    Err(Error::NoReturn(format!("no re-entry into Re Phi in [{}, {}] within {} iterates", opts.strip.0, opts.strip.1, opts.max_iters)))
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierCheck {
    pub radius: f64,
    pub derivative: (f64, f64),
    pub phase: f64,
    /// `-2 pi / alpha` reduced to `(-pi, pi]`
    pub expected_phase: f64,
    /// distance between the two phases on the circle
    pub phase_error: f64,
    pub ells: Vec<usize>,
}

/// `R'(0)` from the mean of `R(w)/w` over `w = r i^k`, `k = 0..3`, which
/// cancels the first three Taylor corrections.
pub fn renorm_multiplier(chart: &FatouChart, r: f64, opts: &RenormOptions) -> Result<MultiplierCheck> {
    let p = chart.precision();
    let mut acc = BigComplex::zero(p);
    let mut ells = vec![];
    for k in 0..4 {
        let (x, y) = [(r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r)][k];
        let w = BigComplex::from_f64(p, x, y);
        let rp = renormalize_eval(chart, &w, opts)?;
        ells.push(rp.ell);
        acc = &acc + &rp.value.div(&w);
    }
    let d = acc.scale_f64(0.25);
    let phase = d.arg().to_f64();
    let tau = std::f64::consts::TAU;
    let inv = Float::with_val(p, Float::with_val(p, 1u32) / &chart.alpha0);
    // -2 pi / alpha mod 2 pi = -2 pi frac(1/alpha)
    let frac = Float::with_val(p, &inv - Float::with_val(p, inv.floor_ref())).to_f64();
    let mut expected = -tau * frac;
    if expected <= -std::f64::consts::PI {
        expected += tau;
    }
    let mut err = (phase - expected).rem_euclid(tau);
    if err > std::f64::consts::PI {
        err = tau - err;
    }
    Ok(MultiplierCheck { radius: r, derivative: d.to_f64(), phase, expected_phase: expected, phase_error: err, ells })
}
