//! Birkhoff averages along forward orbits.

use super::map::NeutralQuadratic;
use super::orbit::Stepper;
use crate::bigc::BigComplex;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Values on a regular grid, bilinear in between, zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    /// row major, `values[j * nx + i]` at `(x0 + i dx, y0 + j dy)`
    pub values: Vec<f64>,
}

impl Tabulated {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.x0) / self.dx;
        let v = (y - self.y0) / self.dy;
        if !(u >= 0.0 && v >= 0.0 && u <= (self.nx - 1) as f64 && v <= (self.ny - 1) as f64) {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (v.floor() as usize).min(self.ny.saturating_sub(2));
        let (s, t) = (u - i as f64, v - j as f64);
        let at = |a: usize, b: usize| self.values[(b.min(self.ny - 1)) * self.nx + a.min(self.nx - 1)];
        (1.0 - s) * (1.0 - t) * at(i, j) + s * (1.0 - t) * at(i + 1, j) + (1.0 - s) * t * at(i, j + 1) + s * t * at(i + 1, j + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Re,
    Im,
    Abs2,
    IndicatorBall { cx: f64, cy: f64, delta: f64 },
    Tabulated(Tabulated),
}

impl Observable {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Observable::Re => x,
            Observable::Im => y,
            Observable::Abs2 => x * x + y * y,
            Observable::IndicatorBall { cx, cy, delta } => {
                if (x - cx).hypot(y - cy) < *delta {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::Tabulated(t) => t.eval(x, y),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::Re => "re".into(),
            Observable::Im => "im".into(),
            Observable::Abs2 => "abs2".into(),
            Observable::IndicatorBall { cx, cy, delta } => format!("ball:{cx},{cy},{delta}"),
            Observable::Tabulated(_) => "tabulated".into(),
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;
    /// `re`, `im`, `abs2` or `ball:cx,cy,delta`. Tables come from JSON.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "re" => Ok(Observable::Re),
            "im" => Ok(Observable::Im),
            "abs2" => Ok(Observable::Abs2),
            _ => {
                let body = s
                    .strip_prefix("ball:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown observable '{s}'")))?;
                let v: Vec<f64> = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("bad ball '{body}': {e}")))?;
                if v.len() != 3 || !(v[2] > 0.0) {
                    return Err(Error::InvalidArgument(format!("ball needs cx,cy,delta>0, got '{body}'")));
                }
                Ok(Observable::IndicatorBall { cx: v[0], cy: v[1], delta: v[2] })
            }
        }
    }
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompSum {
    s: f64,
    c: f64,
}

impl CompSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// 1, 2, 5, 10, 20, 50, ... up to `n`, with `n` itself last.
pub fn log_checkpoints(n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut d = 1u64;
    'outer: loop {
        for m in [1u64, 2, 5] {
            let c = m.saturating_mul(d);
            if c >= n {
                break 'outer;
            }
            out.push(c);
        }
        d = d.saturating_mul(10);
    }
    if n > 0 {
        out.push(n);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffRun {
    pub observables: Vec<String>,
    pub n: u64,
    pub checkpoints: Vec<u64>,
    /// `averages[o][c]` is the running average of observable `o` over the first `checkpoints[c]` points
    pub averages: Vec<Vec<f64>>,
    pub window: Option<u64>,
    /// `max_i |A_i - A_0|` over the complete one-turn block averages of length `window`
    pub cauchy_gap: Vec<Option<f64>>,
    pub audit_log2: f64,
}

impl BirkhoffRun {
    pub fn final_average(&self, o: usize) -> f64 {
        *self.averages[o].last().unwrap_or(&0.0)
    }
}

/// Running averages of each observable over `seed, f(seed), ..., f^{n-1}(seed)`.
/// An orbit leaving `|z| <= escape_radius` raises `EscapeDetected`.
pub fn birkhoff_average(
    map: &NeutralQuadratic,
    seed: &BigComplex,
    observables: &[Observable],
    n: u64,
    window: Option<u64>,
    escape_radius: f64,
) -> Result<BirkhoffRun> {
    if window == Some(0) {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let cps = log_checkpoints(n);
    let no = observables.len();
    let mut sums = vec![CompSum::default(); no];
    let mut block = vec![CompSum::default(); no];
    let mut first_block: Vec<Option<f64>> = vec![None; no];
    let mut gap: Vec<Option<f64>> = vec![None; no];
    let mut averages = vec![Vec::with_capacity(cps.len()); no];
    let mut st = Stepper::new(map, seed);
    let mut next_cp = 0;
    for k in 0..n {
        let (x, y) = st.z.to_f64();
        if !(x.hypot(y) <= escape_radius) {
            return Err(Error::EscapeDetected(format!("orbit left radius {escape_radius} at step {k}")));
        }
        for (o, obs) in observables.iter().enumerate() {
            let v = obs.eval(x, y);
            sums[o].add(v);
            block[o].add(v);
        }
        let done = k + 1;
        if let Some(w) = window {
            if done % w == 0 {
                for o in 0..no {
                    let a = block[o].value() / w as f64;
                    match first_block[o] {
                        None => {
                            first_block[o] = Some(a);
                            gap[o] = Some(0.0);
                        }
                        Some(a0) => gap[o] = Some(gap[o].unwrap().max((a - a0).abs())),
                    }
                    block[o] = CompSum::default();
                }
            }
        }
        while next_cp < cps.len() && cps[next_cp] == done {
            for o in 0..no {
                averages[o].push(sums[o].value() / done as f64);
            }
            next_cp += 1;
        }
        if done < n {
            st.step()?;
        }
    }
    Ok(BirkhoffRun {
        observables: observables.iter().map(|o| o.name()).collect(),
        n,
        checkpoints: cps,
        averages,
        window,
        cauchy_gap: gap,
        audit_log2: st.max_log_err,
    })
}
