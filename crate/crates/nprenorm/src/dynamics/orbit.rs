//! Forward orbits with a running rounding-error audit.

use super::map::NeutralQuadratic;
use crate::bigc::BigComplex;
use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

pub const ESCAPED: u8 = 1;
pub const NEAR_ZERO: u8 = 2;
pub const NEAR_REF: u8 = 4;

#[derive(Clone, Debug)]
pub struct IterOptions {
    pub stride: usize,
    pub escape_radius: f64,
    pub near_zero: Option<f64>,
    pub reference: Option<(Arc<BoundarySample>, f64)>,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions { stride: 1, escape_radius: 10.0, near_zero: None, reference: None }
    }
}

/// log2(2^a + 2^b)
fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Steps an orbit one point at a time. The error bound `e` on the current
/// point evolves as `e' = e (|f'(z)| + |c| e) + 4 u (|z| + |c| |z|^2)`,
/// kept in log2 form so deep precisions do not underflow.
pub struct Stepper<'a> {
    map: &'a NeutralQuadratic,
    pub z: BigComplex,
    pub k: u64,
    log_err: f64,
    pub max_log_err: f64,
    budget: f64,
    log_u: f64,
    c_abs: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(map: &'a NeutralQuadratic, seed: &BigComplex) -> Self {
        let p = map.precision as f64;
        Stepper {
            map,
            z: BigComplex::new(
                rug::Float::with_val(map.precision, &seed.re),
                rug::Float::with_val(map.precision, &seed.im),
            ),
            k: 0,
            log_err: f64::NEG_INFINITY,
            max_log_err: f64::NEG_INFINITY,
            budget: -p / 4.0,
            log_u: -p,
            c_abs: map.c.abs_f64(),
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let (x, y) = self.z.to_f64();
        let r = x.hypot(y);
        let (lx, ly) = self.map.lambda.to_f64();
        let (cx, cy) = self.map.c.to_f64();
        let dx = lx + 2.0 * (cx * x - cy * y);
        let dy = ly + 2.0 * (cx * y + cy * x);
        let grow = dx.hypot(dy) + self.c_abs * self.log_err.exp2();
        let fresh = self.log_u + 2.0 + (r + self.c_abs * r * r).max(f64::MIN_POSITIVE).log2();
        self.log_err = log2_add(self.log_err + grow.max(f64::MIN_POSITIVE).log2(), fresh);
        self.max_log_err = self.max_log_err.max(self.log_err);
        if self.log_err > self.budget {
            return Err(Error::PrecisionExhausted(format!(
                "error bound 2^{:.1} after {} steps exceeds 2^{:.1}",
                self.log_err,
                self.k + 1,
                self.budget
            )));
        }
        self.z = self.map.eval(&self.z);
        self.k += 1;
        Ok(())
    }

    pub fn log_err(&self) -> f64 {
        self.log_err
    }
}

#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub seed: BigComplex,
    pub length: u64,
    pub stride: usize,
    pub indices: Vec<u64>,
    pub points: Vec<BigComplex>,
    pub flags: Vec<u8>,
    pub escaped_at: Option<u64>,
    /// log2 of the largest accumulated error bound
    pub audit_log2: f64,
}

fn flag_point(z: &BigComplex, opts: &IterOptions) -> u8 {
    let (x, y) = z.to_f64();
    let r = x.hypot(y);
    let mut f = 0;
    if !(r <= opts.escape_radius) {
        f |= ESCAPED;
    }
    if let Some(d) = opts.near_zero {
        if r < d {
            f |= NEAR_ZERO;
        }
    }
    if let Some((s, d)) = &opts.reference {
        if s.distance(x, y) < *d {
            f |= NEAR_REF;
        }
    }
    f
}

/// `n` steps from `seed`, keeping every `stride`-th point. Stops at the
/// first point with `|z| > escape_radius`, which is kept and flagged.
pub fn iterate(map: &NeutralQuadratic, seed: &BigComplex, n: u64, opts: &IterOptions) -> Result<OrbitTrace> {
    if opts.stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let mut st = Stepper::new(map, seed);
    let mut tr = OrbitTrace {
        seed: st.z.clone(),
        length: n,
        stride: opts.stride,
        indices: vec![],
        points: vec![],
        flags: vec![],
        escaped_at: None,
        audit_log2: f64::NEG_INFINITY,
    };
    loop {
        let f = flag_point(&st.z, opts);
        if f & ESCAPED != 0 || st.k % opts.stride as u64 == 0 || st.k == n {
            tr.indices.push(st.k);
            tr.points.push(st.z.clone());
            tr.flags.push(f);
        }
        if f & ESCAPED != 0 {
            tr.escaped_at = Some(st.k);
            break;
        }
        if st.k == n {
            break;
        }
        st.step()?;
    }
    tr.audit_log2 = st.max_log_err;
    Ok(tr)
}

/// `f^k(seed)`, with the same audit as `iterate`.
pub fn advance(map: &NeutralQuadratic, seed: &BigComplex, k: u64) -> Result<BigComplex> {
    let mut st = Stepper::new(map, seed);
    for _ in 0..k {
        st.step()?;
    }
    Ok(st.z)
}

#[derive(Serialize)]
struct JsonPoint {
    index: u64,
    re: String,
    im: String,
    flags: u8,
}

impl OrbitTrace {
    pub fn escaped(&self) -> bool {
        self.escaped_at.is_some()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"index,re,im,flags\n")?;
        for ((i, z), f) in self.indices.iter().zip(&self.points).zip(&self.flags) {
            let (x, y) = z.to_f64();
            writeln!(w, "{i},{x:e},{y:e},{f}")?;
        }
        Ok(())
    }

    /// Little endian `u64` index followed by the two coordinates as `f64`.
    pub fn write_frames<W: Write>(&self, w: &mut W) -> Result<()> {
        for (i, z) in self.indices.iter().zip(&self.points) {
            let (x, y) = z.to_f64();
            w.write_all(&i.to_le_bytes())?;
            w.write_all(&x.to_le_bytes())?;
            w.write_all(&y.to_le_bytes())?;
        }
        Ok(())
    }

    /// Full precision points as decimal strings.
    pub fn to_json(&self, digits: usize) -> serde_json::Value {
        let pts: Vec<JsonPoint> = self
            .indices
            .iter()
            .zip(&self.points)
            .zip(&self.flags)
            .map(|((i, z), f)| {
                let (re, im) = z.to_decimal(digits);
                JsonPoint { index: *i, re, im, flags: *f }
            })
            .collect();
        serde_json::json!({
            "length": self.length,
            "stride": self.stride,
            "escaped_at": self.escaped_at,
            "audit_log2": if self.audit_log2.is_finite() { Some(self.audit_log2) } else { None },
            "points": pts,
        })
    }
}

pub fn read_frames(bytes: &[u8]) -> Result<Vec<(u64, f64, f64)>> {
    if bytes.len() % 24 != 0 {
        return Err(Error::InvalidArgument(format!("{} bytes is not a whole number of frames", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(24)
        .map(|c| {
            let i = u64::from_le_bytes(c[0..8].try_into().unwrap());
            let x = f64::from_le_bytes(c[8..16].try_into().unwrap());
            let y = f64::from_le_bytes(c[16..24].try_into().unwrap());
            (i, x, y)
        })
        .collect())
}

/// A finite point cloud with nearest-neighbor queries through a uniform grid.
#[derive(Clone, Debug)]
pub struct BoundarySample {
    pub points: Vec<(f64, f64)>,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    bbox: (f64, f64, f64, f64),
}

impl BoundarySample {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty boundary sample".into()));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let cell = span / (points.len() as f64).sqrt().max(1.0);
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, &(x, y)) in points.iter().enumerate() {
            buckets.entry(((x / cell).floor() as i64, (y / cell).floor() as i64)).or_default().push(i as u32);
        }
        Ok(BoundarySample { points, cell, buckets, bbox: (x0, y0, x1, y1) })
    }

    pub fn from_trace(tr: &OrbitTrace) -> Result<Self> {
        Self::new(tr.points.iter().map(|z| z.to_f64()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (bx0, by0, bx1, by1) = self.bbox;
        let (gx0, gy0) = ((bx0 / self.cell).floor() as i64, (by0 / self.cell).floor() as i64);
        let (gx1, gy1) = ((bx1 / self.cell).floor() as i64, (by1 / self.cell).floor() as i64);
        // clamp far queries so cell indices stay small; distances still use the true point
        let qx = ((x / self.cell).floor()).clamp((gx0 - 1) as f64, (gx1 + 1) as f64) as i64;
        let qy = ((y / self.cell).floor()).clamp((gy0 - 1) as f64, (gy1 + 1) as f64) as i64;
        let gap = (bx0 - x).max(x - bx1).max(0.0).hypot((by0 - y).max(y - by1).max(0.0));
        let rmax = (gx1 - gx0).max(gy1 - gy0) + 2;
        let mut best = f64::INFINITY;
        for r in 0..=rmax {
            for i in (-r).max(gx0 - qx)..=r.min(gx1 - qx) {
                let edge = i.abs() == r;
                for j in (-r).max(gy0 - qy)..=r.min(gy1 - qy) {
                    if !edge && j.abs() != r {
                        continue;
                    }
                    if let Some(v) = self.buckets.get(&(qx + i, qy + j)) {
                        for &k in v {
                            let (px, py) = self.points[k as usize];
                            best = best.min((px - x).hypot(py - y));
                        }
                    }
                }
            }
            // anything in ring r + 1 or beyond is at least r cells from the clamped cell
            if best <= gap.max(r as f64 * self.cell) {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::preset;
    use crate::dynamics::map::{from_alpha, make_map, Variant};
    use proptest::prelude::*;
    use rug::Float;

    #[test]
    fn origin_is_fixed() {
        let m = from_alpha(Variant::Q, &Float::with_val(128, 0.3), 128).unwrap();
        let tr = iterate(&m, &BigComplex::zero(128), 50, &IterOptions::default()).unwrap();
        assert_eq!(tr.points.len(), 51);
        assert!(tr.points.iter().all(|z| z.is_zero()));
    }

    #[test]
    fn sigma_is_fixed() {
        let m = from_alpha(Variant::Q, &Float::with_val(128, 0.05), 128).unwrap();
        let tr = iterate(&m, &m.sigma, 100, &IterOptions::default()).unwrap();
        let tol = 100.0 * m.sigma_residual().to_f64().max(m.ulp().to_f64());
        for z in &tr.points {
            assert!(z.dist(&m.sigma).to_f64() <= tol * 10.0);
        }
    }

    #[test]
    fn golden_critical_orbit_stays_bounded() {
        let r = preset("golden2", 20).unwrap();
        let m = make_map(Variant::Q, &r, 256).unwrap();
        let tr = iterate(&m, &m.cv, 169, &IterOptions::default()).unwrap();
        assert!(!tr.escaped());
        assert_eq!(*tr.indices.last().unwrap(), 169);
        assert!(tr.audit_log2 < -200.0);
    }

    #[test]
    fn escapes_are_flagged_and_final() {
        let m = from_alpha(Variant::P, &Float::with_val(128, 0.3), 128).unwrap();
        let tr = iterate(&m, &BigComplex::from_f64(128, 3.0, 0.0), 100, &IterOptions::default()).unwrap();
        let k = tr.escaped_at.unwrap();
        assert_eq!(*tr.indices.last().unwrap(), k);
        assert!(tr.points.last().unwrap().abs_f64() > 10.0);
        assert_eq!(tr.flags.last().unwrap() & ESCAPED, ESCAPED);
        assert!(tr.flags[..tr.flags.len() - 1].iter().all(|f| f & ESCAPED == 0));
    }

    #[test]
    fn stride_keeps_consecutive_structure() {
        let m = from_alpha(Variant::Q, &Float::with_val(128, 0.2), 128).unwrap();
        let opts = IterOptions { stride: 1, ..Default::default() };
        let tr = iterate(&m, &m.cv, 40, &opts).unwrap();
        for w in tr.points.windows(2) {
            assert!(m.eval(&w[0]).dist(&w[1]).to_f64() == 0.0);
        }
        let opts = IterOptions { stride: 7, ..Default::default() };
        let tr7 = iterate(&m, &m.cv, 40, &opts).unwrap();
        assert_eq!(tr7.indices, vec![0, 7, 14, 21, 28, 35, 40]);
        assert_eq!(tr7.points[2].dist(&tr.points[14]).to_f64(), 0.0);
    }

    #[test]
    fn precision_budget_trips() {
        // sigma is repelling for P, so the error bound grows like |2 - lambda|^k
        let m = from_alpha(Variant::P, &Float::with_val(64, 0.3), 64).unwrap();
        let e = iterate(&m, &m.sigma, 10_000, &IterOptions::default());
        assert!(matches!(e, Err(Error::PrecisionExhausted(_))));
        let ok = iterate(&m, &m.sigma, 20, &IterOptions::default()).unwrap();
        assert!(ok.audit_log2 < -16.0);
    }

    #[test]
    fn csv_and_frames_round_trip() {
        let m = from_alpha(Variant::Q, &Float::with_val(128, 0.2), 128).unwrap();
        let tr = iterate(&m, &m.cv, 10, &IterOptions { near_zero: Some(0.1), ..Default::default() }).unwrap();
        let mut csv = Vec::new();
        tr.write_csv(&mut csv).unwrap();
        let s = String::from_utf8(csv).unwrap();
        assert!(s.starts_with("index,re,im,flags\n"));
        assert_eq!(s.lines().count(), 12);
        let mut fr = Vec::new();
        tr.write_frames(&mut fr).unwrap();
        let back = read_frames(&fr).unwrap();
        for ((i, x, y), z) in back.iter().zip(&tr.points) {
            assert_eq!((*x, *y), z.to_f64());
            assert!(*i <= 10);
        }
    }

    proptest! {
        #[test]
        fn grid_nearest_matches_brute_force(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..300),
            q in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let s = BoundarySample::new(pts.clone()).unwrap();
            let brute = pts.iter().map(|&(x, y)| (x - q.0).hypot(y - q.1)).fold(f64::INFINITY, f64::min);
            prop_assert!((s.distance(q.0, q.1) - brute).abs() < 1e-12);
        }
    }
}
