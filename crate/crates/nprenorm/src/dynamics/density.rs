//! Point-sample proxies for the sector counts `|G(n, delta)| / q_n` and
//! `|H(n, delta)| / q_n`: the fraction of the first `q_n` critical orbit
//! points that land near 0 or near the Siegel disk sample. These count
//! orbit points, not sectors.

use super::map::NeutralQuadratic;
use super::orbit::Stepper;
use super::siegel::SiegelEstimate;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    NearZero,
    NearSiegel,
}

impl std::str::FromStr for DensityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near_zero" => Ok(DensityMode::NearZero),
            "near_siegel" => Ok(DensityMode::NearSiegel),
            _ => Err(Error::InvalidArgument(format!("unknown density mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub level: usize,
    pub q: u64,
    pub delta: f64,
    pub mode: DensityMode,
    pub hits: u64,
    pub fraction: f64,
    pub audit_log2: f64,
}

pub const MAX_DENSITY_Q: u64 = 50_000_000;

pub fn density_estimate(
    map: &NeutralQuadratic,
    level: usize,
    delta: f64,
    mode: DensityMode,
    siegel: Option<&SiegelEstimate>,
    escape_radius: f64,
) -> Result<DensityEstimate> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let digits = map
        .digits
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("density needs the digit stream of alpha".into()))?;
    if level > digits.declared_depth() {
        return Err(Error::DepthExceeded(format!("level {level} beyond {} digits", digits.declared_depth())));
    }
    let q = digits.q_times(level)[level]
        .to_u64()
        .filter(|&q| q <= MAX_DENSITY_Q)
        .ok_or_else(|| Error::PrecisionExhausted(format!("q_{level} exceeds {MAX_DENSITY_Q}")))?;
    let near: Box<dyn Fn(f64, f64) -> bool + '_> = match mode {
        DensityMode::NearZero => Box::new(move |x: f64, y: f64| x.hypot(y) < delta),
        DensityMode::NearSiegel => {
            let s = siegel.ok_or_else(|| Error::InvalidArgument("near_siegel needs a Siegel estimate".into()))?;
            let inner = s.interior_radius();
            let sample = s.boundary_sample.clone();
            Box::new(move |x: f64, y: f64| x.hypot(y) < inner || sample.distance(x, y) < delta)
        }
    };
    let mut st = Stepper::new(map, &map.cv);
    let mut hits = 0u64;
    for i in 0..q {
        let (x, y) = st.z.to_f64();
        if !(x.hypot(y) <= escape_radius) {
            return Err(Error::EscapeDetected(format!("critical orbit escaped at step {i}")));
        }
        if near(x, y) {
            hits += 1;
        }
        if i + 1 < q {
            st.step()?;
        }
    }
    Ok(DensityEstimate { level, q, delta, mode, hits, fraction: hits as f64 / q as f64, audit_log2: st.max_log_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{preset, RotationNumber};
    use crate::dynamics::map::{make_map, Variant};
    use crate::dynamics::siegel::{siegel_estimate, SiegelOptions};

    #[test]
    fn siegel_mode_counts_everything_for_golden() {
        let m = make_map(Variant::P, &preset("golden2", 20).unwrap(), 128).unwrap();
        let s = siegel_estimate(&m, 20, 100, &SiegelOptions::default()).unwrap();
        for (n, d) in [(3, 1e-3), (6, 0.01), (8, 0.2)] {
            let e = density_estimate(&m, n, d, DensityMode::NearSiegel, Some(&s), 10.0).unwrap();
            assert_eq!(e.fraction, 1.0);
        }
    }

    #[test]
    fn huge_delta_covers_the_orbit() {
        let r = RotationNumber::from_pairs(0, &[(1, 10), (1, 30), (1, 5), (1, 5)]).unwrap();
        let m = make_map(Variant::Q, &r, 128).unwrap();
        let e = density_estimate(&m, 2, 10.0, DensityMode::NearZero, None, 10.0).unwrap();
        assert_eq!(e.q, 301);
        assert_eq!(e.fraction, 1.0);
    }

    #[test]
    fn monotone_in_delta() {
        let r = RotationNumber::from_pairs(0, &[(1, 10), (1, 30), (1, 5), (1, 5)]).unwrap();
        let m = make_map(Variant::Q, &r, 128).unwrap();
        let mut last = 0.0;
        for d in [0.01, 0.05, 0.1, 0.2, 0.3, 1.0] {
            let f = density_estimate(&m, 2, d, DensityMode::NearZero, None, 10.0).unwrap().fraction;
            assert!(f >= last);
            last = f;
        }
    }

    #[test]
    fn siegel_mode_needs_estimate() {
        let m = make_map(Variant::P, &preset("golden2", 20).unwrap(), 128).unwrap();
        assert!(density_estimate(&m, 2, 0.1, DensityMode::NearSiegel, None, 10.0).is_err());
    }
}
