//! Numerical perturbed Fatou coordinate of `Q_alpha` for small `alpha`.
//!
//! A point is moved along its orbit (forward by `h`, backward by the branch of
//! `h^{-1}` fixing 0) until the template lands in the unit band around the
//! middle of the petal, `Re Phi_X in [M - 1/2, M + 1/2)`, `M = 1/(2 alpha)`.
//! There the template error is smallest. `Phi(z) = Phi_X(h^j z) - j - Phi_raw(cp)`,
//! optionally averaged over `m` further steps with weights `2^{-s}`.

use super::covering::{covering_t, exp_lift};
use super::template::Template;
use crate::arith::{Digit, RotationNumber};
use crate::bigc::{two_pi, BigComplex};
use crate::dynamics::{from_alpha, make_map, NeutralQuadratic, Variant};
use crate::error::{Error, Result};
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    pub abel_tol: f64,
    pub m_max: usize,
    pub order: usize,
    /// validated strip is `1 <= Re Phi <= 1/alpha - k_config - 1`
    pub k_config: f64,
    pub grid: usize,
    pub alpha_max: f64,
    pub max_transport: usize,
    pub newton_tol: f64,
    pub escape_radius: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig {
            abel_tol: 1e-4,
            m_max: 6,
            order: 8,
            k_config: 4.0,
            grid: 20,
            alpha_max: 0.05,
            max_transport: 4000,
            newton_tol: 1e-12,
            escape_radius: 10.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub points: usize,
    /// `|Phi(h z) - Phi(z) - 1|` over the grid
    pub abel_max: f64,
    pub abel_mean: f64,
    /// `|Phi(Phi^{-1}(zeta)) - zeta|` over the grid
    pub inverse_max: f64,
    /// the same Abel residual for the bare template, no orbit transport
    pub template_max: f64,
    /// `max |E_{m+1} - E_m|` for the chosen averaging depth
    pub refinement_gap: f64,
    pub normalization: f64,
    pub cv_error: f64,
}

#[derive(Clone, Debug)]
pub struct FatouChart {
    pub map: NeutralQuadratic,
    pub template: Template,
    pub alpha0: Float,
    /// `T^{-1}` branch, fixed to the one with `0 <= Re < 1/alpha`
    pub branch: i64,
    pub band_mid: Float,
    pub m: usize,
    pub offset: BigComplex,
    pub stats: ResidualStats,
    pub config: ChartConfig,
    /// the validation points in the Phi plane
    pub grid_points: Vec<(f64, f64)>,
}

struct Transported {
    j: i64,
    z: BigComplex,
    /// `d z_j / d z`
    dz: BigComplex,
}

fn one(p: u32) -> BigComplex {
    BigComplex::from_f64(p, 1.0, 0.0)
}

fn shift_re(z: &BigComplex, k: i64) -> BigComplex {
    BigComplex::new(Float::with_val(z.prec(), &z.re + k), z.im.clone())
}

fn cmax(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

impl FatouChart {
    pub fn build(map: &NeutralQuadratic, config: &ChartConfig) -> Result<Self> {
        if map.variant != Variant::Q {
            return Err(Error::OutsideRegime("charts are built for Q_alpha only".into()));
        }
        if !(config.abel_tol > 0.0 && config.newton_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        let p = map.precision;
        let frac = Float::with_val(p, &map.alpha - Float::with_val(p, map.alpha.round_ref()));
        if !(frac > 0 && frac.to_f64() <= config.alpha_max) {
            return Err(Error::OutsideRegime(format!(
                "alpha_0 = {:.6} outside (0, {}]",
                frac.to_f64(),
                config.alpha_max
            )));
        }
        let template = Template::build(map, config.order)?;
        let band_mid = Float::with_val(p, Float::with_val(p, 0.5) / &frac);
        let mut chart = FatouChart {
            map: map.clone(),
            template,
            alpha0: frac,
            branch: 0,
            band_mid,
            m: 0,
            offset: BigComplex::zero(p),
            stats: ResidualStats::default(),
            config: config.clone(),
            grid_points: vec![],
        };
        chart.offset = chart.phi_raw(&map.cp)?.0;
        chart.grid_points = chart.validation_grid();

        // pick the averaging depth from the data
        let zs = chart.grid_preimages()?;
        let mut gap = f64::INFINITY;
        for m in 0..=config.m_max {
            gap = zs
                .par_iter()
                .map(|z| chart.refinement_step(z, m).unwrap_or(f64::INFINITY))
                .reduce(|| 0.0, cmax);
            if gap < config.abel_tol / 4.0 || m == config.m_max {
                chart.m = m;
                break;
            }
        }
        chart.offset = BigComplex::zero(p);
        chart.offset = chart.phi_raw(&map.cp)?.0;
        chart.stats = chart.validate()?;
        chart.stats.refinement_gap = gap;
        chart.check_gate()?;
        Ok(chart)
    }

    fn check_gate(&self) -> Result<()> {
        let s = &self.stats;
        let tol = self.config.abel_tol;
        if !(s.abel_max <= tol && s.inverse_max <= tol && s.normalization <= tol && s.cv_error <= tol) {
            return Err(Error::ChartDiverged(format!(
                "abel {:.3e}, inverse {:.3e}, Phi(cp) {:.3e}, Phi(cv) - 1 {:.3e} against tolerance {tol:e}",
                s.abel_max, s.inverse_max, s.normalization, s.cv_error
            )));
        }
        Ok(())
    }

    pub fn precision(&self) -> u32 {
        self.map.precision
    }

    pub fn alpha0_f64(&self) -> f64 {
        self.alpha0.to_f64()
    }

    /// Right end of the validated strip, `1/alpha - k_config - 1`.
    pub fn strip_end(&self) -> f64 {
        1.0 / self.alpha0_f64() - self.config.k_config - 1.0
    }

    pub fn validation_grid(&self) -> Vec<(f64, f64)> {
        let n = self.config.grid.max(2);
        let (x0, x1) = (1.0, self.strip_end());
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let x = x0 + (x1 - x0) * a as f64 / (n - 1) as f64;
                let y = -1.0 + 2.0 * b as f64 / (n - 1) as f64;
                out.push((x, y));
            }
        }
        out
    }

    fn grid_preimages(&self) -> Result<Vec<BigComplex>> {
        let p = self.precision();
        self.grid_points
            .par_iter()
            .map(|&(x, y)| self.inverse(&BigComplex::from_f64(p, x, y)))
            .collect()
    }

    fn hinv(&self, y: &BigComplex) -> BigComplex {
        let near = y.div(&self.map.lambda);
        self.map.inverse_near(y, &near)
    }

    fn transport(&self, z: &BigComplex) -> Result<(Transported, BigComplex, BigComplex)> {
        let p = self.precision();
        let lo = Float::with_val(p, &self.band_mid - 0.5f64);
        let hi = Float::with_val(p, &self.band_mid + 0.5f64);
        let mut t = Transported { j: 0, z: z.clone(), dz: one(p) };
        let (mut u, mut du) = self.template.eval(&t.z)?;
        let cap = self.config.max_transport as i64;
        while u.re < lo {
            t.dz = &t.dz * &self.map.deriv(&t.z);
            t.z = self.map.eval(&t.z);
            t.j += 1;
            if !(t.z.abs_f64() <= self.config.escape_radius) || t.j > cap {
                return Err(Error::OutsideDomain(format!("orbit does not reach the middle band ({} steps)", t.j)));
            }
            (u, du) = self.template.eval(&t.z)?;
        }
        while u.re >= hi {
            let prev = self.hinv(&t.z);
            t.dz = t.dz.div(&self.map.deriv(&prev));
            t.z = prev;
            t.j -= 1;
            if t.j < -cap || t.z.is_zero() {
                return Err(Error::OutsideDomain(format!("backward orbit does not reach the middle band ({} steps)", t.j)));
            }
            (u, du) = self.template.eval(&t.z)?;
        }
        Ok((t, u, du))
    }

    /// Successive weighted averages `E_0, ..., E_m` of `Phi_X(z_{j+s}) - (j + s)`,
    /// each with its derivative in `z`.
    fn averages(&self, z: &BigComplex, m: usize) -> Result<Vec<(BigComplex, BigComplex)>> {
        let p = self.precision();
        let (mut t, mut u, mut du) = self.transport(z)?;
        let mut out = Vec::with_capacity(m + 1);
        let mut sv = BigComplex::zero(p);
        let mut sd = BigComplex::zero(p);
        let mut wsum = 0f64;
        for s in 0..=m {
            let w = 0.5f64.powi(s as i32);
            let v = shift_re(&u, -t.j);
            sv = &sv + &v.scale_f64(w);
            sd = &sd + &(&du * &t.dz).scale_f64(w);
            wsum += w;
            out.push((sv.scale_f64(1.0 / wsum), sd.scale_f64(1.0 / wsum)));
            if s < m {
                t.dz = &t.dz * &self.map.deriv(&t.z);
                t.z = self.map.eval(&t.z);
                t.j += 1;
                (u, du) = self.template.eval(&t.z)?;
            }
        }
        Ok(out)
    }

    fn refinement_step(&self, z: &BigComplex, m: usize) -> Result<f64> {
        let e = self.averages(z, m + 1)?;
        Ok(e[m + 1].0.dist(&e[m].0).to_f64())
    }

    /// `Phi` before normalization, with derivative.
    pub fn phi_raw(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        Ok(self.averages(z, self.m)?.pop().unwrap())
    }

    pub fn eval(&self, z: &BigComplex) -> Result<BigComplex> {
        Ok(&self.phi_raw(z)?.0 - &self.offset)
    }

    pub fn eval_with_derivative(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        let (v, d) = self.phi_raw(z)?;
        Ok((&v - &self.offset, d))
    }

    /// The bare template normalized at the critical point, with no orbit transport.
    pub fn eval_template(&self, z: &BigComplex) -> Result<BigComplex> {
        let (a, _) = self.template.eval(z)?;
        let (b, _) = self.template.eval(&self.map.cp)?;
        Ok(&a - &b)
    }

    pub fn abel_residual(&self, z: &BigComplex) -> Result<f64> {
        let a = self.eval(z)?;
        let b = self.eval(&self.map.eval(z))?;
        Ok((&(&b - &a) - &one(self.precision())).abs_f64())
    }

    pub fn template_residual(&self, z: &BigComplex) -> Result<f64> {
        let a = self.eval_template(z)?;
        let b = self.eval_template(&self.map.eval(z))?;
        Ok((&(&b - &a) - &one(self.precision())).abs_f64())
    }

    /// `Phi^{-1}(zeta)`: shift `zeta` by an integer into the middle band, solve
    /// there by Newton, then move back with `Phi^{-1}(w + 1) = h(Phi^{-1}(w))`.
    pub fn inverse(&self, zeta: &BigComplex) -> Result<BigComplex> {
        let p = self.precision();
        let n = (Float::with_val(p, &self.band_mid + 0.5f64) - &zeta.re).floor().to_f64() as i64;
        if n.unsigned_abs() as usize > self.config.max_transport {
            return Err(Error::OutsideDomain(format!("Re zeta = {:.3e} too far from the petal", zeta.re.to_f64())));
        }
        let target = &shift_re(zeta, n) + &self.offset;
        let mut z = covering_t(&self.map.sigma, &self.alpha0, &target)?;
        self.newton(&mut z, |w| self.phi_raw(w), &target, 60)?;
        if n > 0 {
            for _ in 0..n {
                z = self.hinv(&z);
            }
        } else {
            for _ in 0..(-n) {
                z = self.map.eval(&z);
            }
        }
        self.newton(&mut z, |w| self.eval_with_derivative(w), zeta, 20)?;
        Ok(z)
    }

    fn newton<F>(&self, z: &mut BigComplex, f: F, target: &BigComplex, max: usize) -> Result<()>
    where
        F: Fn(&BigComplex) -> Result<(BigComplex, BigComplex)>,
    {
        let mut last = f64::INFINITY;
        for _ in 0..max {
            let (v, d) = f(z)?;
            let r = &v - target;
            let e = r.abs_f64();
            if !e.is_finite() || d.is_zero() {
                break;
            }
            if e <= self.config.newton_tol * 1e-3 || (e <= self.config.newton_tol && e >= last * 0.5) {
                return Ok(());
            }
            last = e;
            *z = &*z - &r.div(&d);
        }
        let (v, _) = f(z)?;
        let e = (&v - target).abs_f64();
        if e <= self.config.newton_tol {
            return Ok(());
        }
        Err(Error::NewtonDiverged(format!("Fatou inverse stalled at residual {e:.3e}")))
    }

    pub fn validate(&self) -> Result<ResidualStats> {
        let p = self.precision();
        let rows: Vec<Result<(f64, f64, f64)>> = self
            .grid_points
            .par_iter()
            .map(|&(x, y)| {
                let zeta = BigComplex::from_f64(p, x, y);
                let z = self.inverse(&zeta)?;
                let inv = self.eval(&z)?.dist(&zeta).to_f64();
                Ok((self.abel_residual(&z)?, inv, self.template_residual(&z).unwrap_or(f64::INFINITY)))
            })
            .collect();
        let mut s = ResidualStats { points: rows.len(), ..Default::default() };
        let mut sum = 0.0;
        for r in rows {
            let (a, i, t) = r?;
            s.abel_max = cmax(s.abel_max, a);
            s.inverse_max = cmax(s.inverse_max, i);
            s.template_max = cmax(s.template_max, t);
            sum += a;
        }
        s.abel_mean = sum / s.points.max(1) as f64;
        s.normalization = self.eval(&self.map.cp)?.abs_f64();
        s.cv_error = (&self.eval(&self.map.cv)? - &one(p)).abs_f64();
        Ok(s)
    }

    /// `chi(zeta) = exp_lift(Phi^{-1}(zeta))`
    pub fn lift(&self, zeta: &BigComplex) -> Result<BigComplex> {
        exp_lift(&self.inverse(zeta)?, 0)
    }

    /// `chi'(zeta) = 1 / (2 pi i z Phi'(z))` at `z = Phi^{-1}(zeta)`.
    pub fn lift_derivative(&self, zeta: &BigComplex) -> Result<BigComplex> {
        let p = self.precision();
        let z = self.inverse(zeta)?;
        let (_, d) = self.eval_with_derivative(&z)?;
        let tp = two_pi(p);
        let zd = &z * &d;
        // 2 pi i zd
        let den = BigComplex::new(-Float::with_val(p, &zd.im * &tp), Float::with_val(p, &zd.re * &tp));
        Ok(den.recip())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let digits = self.map.digits.as_ref().map(|r| {
            serde_json::json!({
                "a_minus1": r.a_minus1.to_string(),
                "digits": r.digits(),
            })
        });
        let (ore, oim) = self.offset.to_decimal(40);
        serde_json::json!({
            "variant": self.map.variant,
            "precision": self.map.precision,
            "alpha": crate::bigc::float_to_decimal(&self.map.alpha, 50),
            "digits": digits,
            "branch": self.branch,
            "order": self.template.order,
            "m": self.m,
            "band_mid": self.band_mid.to_f64(),
            "offset": { "re": ore, "im": oim },
            "residual_stats": self.stats,
            "config": self.config,
        })
    }

    /// Rebuild a chart from `to_json` output without revalidating the grid.
    /// The stored offset is checked against a fresh evaluation at `cp`.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |what: &str| Error::CacheCorrupt(format!("chart json: {what}"));
        let variant: Variant = serde_json::from_value(v["variant"].clone()).map_err(|_| bad("variant"))?;
        let prec = v["precision"].as_u64().ok_or_else(|| bad("precision"))? as u32;
        let config: ChartConfig = serde_json::from_value(v["config"].clone()).map_err(|_| bad("config"))?;
        let stats: ResidualStats = serde_json::from_value(v["residual_stats"].clone()).map_err(|_| bad("stats"))?;
        let map = if v["digits"].is_null() {
            let a = Float::parse(v["alpha"].as_str().ok_or_else(|| bad("alpha"))?).map_err(|_| bad("alpha"))?;
            from_alpha(variant, &Float::with_val(prec, a), prec)?
        } else {
            let am1: rug::Integer = v["digits"]["a_minus1"]
                .as_str()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("a_minus1"))?;
            let ds: Vec<Digit> = serde_json::from_value(v["digits"]["digits"].clone()).map_err(|_| bad("digits"))?;
            make_map(variant, &RotationNumber::new(am1, ds)?, prec)?
        };
        let m = v["m"].as_u64().ok_or_else(|| bad("m"))? as usize;
        let order = v["order"].as_u64().ok_or_else(|| bad("order"))? as usize;
        let template = Template::build(&map, order)?;
        let alpha0 = map.alpha0();
        let band_mid = Float::with_val(prec, Float::with_val(prec, 0.5) / &alpha0);
        let parse = |s: &serde_json::Value| -> Result<Float> {
            let t = s.as_str().ok_or_else(|| bad("offset"))?;
            Ok(Float::with_val(prec, Float::parse(t).map_err(|_| bad("offset"))?))
        };
        let offset = BigComplex::new(parse(&v["offset"]["re"])?, parse(&v["offset"]["im"])?);
        let mut chart = FatouChart {
            map,
            template,
            alpha0,
            branch: v["branch"].as_i64().unwrap_or(0),
            band_mid,
            m,
            offset: BigComplex::zero(prec),
            stats,
            config,
            grid_points: vec![],
        };
        let fresh = chart.phi_raw(&chart.map.cp)?.0;
        if fresh.dist(&offset).to_f64() > 1e-30f64.max(chart.map.ulp().to_f64() * 1e6) {
            return Err(bad("offset does not match the rebuilt chart"));
        }
        chart.offset = fresh;
        chart.grid_points = chart.validation_grid();
        Ok(chart)
    }
}
