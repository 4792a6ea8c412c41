//! Arithmetic height model of chains in the renormalization tower.
//!
//! A chain starts at level `n` with `Im zeta_n = seed` and moves down by
//! `Im zeta_{j-1} = alpha_j Im zeta_j + log(1/alpha_j) +- M4`. The intervals
//! below track the two extreme choices of the error term.

use crate::arith::bisequence::step;
use crate::arith::{good_levels, BiSequenceTable, BrjunoProfile};
use crate::error::{Error, Result};
use rug::Float;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct HeightChain {
    pub n: usize,
    pub seed: Float,
    pub m4: Float,
    pub b_const: Float,
    /// indexed by level `0..=n`
    pub lo: Vec<Float>,
    pub hi: Vec<Float>,
}

pub fn propagate_heights(profile: &BrjunoProfile, n: usize, seed: f64, m4: f64, b_const: f64) -> Result<HeightChain> {
    if n > profile.depth {
        return Err(Error::DepthExceeded(format!("level {n} beyond profile depth {}", profile.depth)));
    }
    if !(m4 >= 0.0) {
        return Err(Error::InvalidArgument("M4 must be >= 0".into()));
    }
    let p = profile.precision;
    let up = Float::with_val(p, m4);
    let down = -Float::with_val(p, m4);
    let mut lo = vec![Float::new(p); n + 1];
    let mut hi = vec![Float::new(p); n + 1];
    lo[n] = Float::with_val(p, seed);
    hi[n] = Float::with_val(p, seed);
    for j in (1..=n).rev() {
        let l = profile.log_inv(j);
        lo[j - 1] = step(&profile.alphas[j], &l, &lo[j], &up);
        hi[j - 1] = step(&profile.alphas[j], &l, &hi[j], &down);
    }
    Ok(HeightChain { n, seed: lo[n].clone(), m4: up, b_const: Float::with_val(p, b_const), lo, hi })
}

impl HeightChain {
    pub fn width(&self, j: usize) -> Float {
        Float::with_val(self.lo[j].prec(), &self.hi[j] - &self.lo[j])
    }

    pub fn max_width(&self) -> f64 {
        (0..=self.n).map(|j| self.width(j).to_f64()).fold(0.0, f64::max)
    }

    /// Does `[lo_j - slack, hi_j + slack]` contain the row `B[n][.]`?
    pub fn contains_row(&self, table: &BiSequenceTable, slack: f64) -> bool {
        if self.n > table.k_max {
            return false;
        }
        (0..=self.n).all(|j| {
            let b = table.get(self.n, j);
            let lo = Float::with_val(b.prec(), &self.lo[j] - slack);
            let hi = Float::with_val(b.prec(), &self.hi[j] + slack);
            lo <= *b && *b <= hi
        })
    }

    /// `other` sits inside `self` at every level.
    pub fn contains(&self, other: &HeightChain) -> bool {
        self.n == other.n && (0..=self.n).all(|j| self.lo[j] <= other.lo[j] && other.hi[j] <= self.hi[j])
    }

    pub fn report(&self) -> HeightReport {
        HeightReport {
            n: self.n,
            seed: self.seed.to_f64(),
            m4: self.m4.to_f64(),
            b_const: self.b_const.to_f64(),
            lo: self.lo.iter().map(Float::to_f64).collect(),
            hi: self.hi.iter().map(Float::to_f64).collect(),
            max_width: self.max_width(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightReport {
    pub n: usize,
    pub seed: f64,
    pub m4: f64,
    pub b_const: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub max_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// good levels persist up to the bound
    Saturating,
    /// the set stops before the bound
    Terminating,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDiagnostic {
    pub l: usize,
    pub good_levels: Vec<usize>,
    pub flavor: Flavor,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    /// always true: finitely many digits cannot decide the dichotomy
    pub heuristic: bool,
    pub t: f64,
    pub b_const: f64,
    pub l_max: usize,
    pub k_bound: usize,
    pub levels: Vec<LevelDiagnostic>,
    /// `B[k_bound][j] - T/alpha_j` for `j <= k_bound / 2`
    pub margins: Vec<f64>,
    /// `min_{i >= j} margins[i]`
    pub running_liminf: Vec<f64>,
    /// the threshold never binds: every candidate level is good for every `l`
    pub degenerate_threshold: bool,
}

pub fn dichotomy_diagnostics(table: &BiSequenceTable, profile: &BrjunoProfile, t: f64, l_max: usize, k_bound: usize) -> Result<DichotomyReport> {
    if k_bound > table.k_max {
        return Err(Error::DepthExceeded(format!("k_bound {k_bound} beyond table depth {}", table.k_max)));
    }
    let mut levels = Vec::new();
    let mut full = true;
    for l in 0..=l_max.min(k_bound.saturating_sub(1)) {
        let set: BTreeSet<usize> = good_levels(table, profile, t, l, k_bound)?;
        full &= set.len() == k_bound - l;
        let flavor = if set.contains(&k_bound) { Flavor::Saturating } else { Flavor::Terminating };
        levels.push(LevelDiagnostic { l, good_levels: set.into_iter().collect(), flavor });
    }
    let p = profile.precision;
    let tf = Float::with_val(p, t);
    let margins: Vec<f64> = (0..=k_bound / 2)
        .map(|j| Float::with_val(p, table.get(k_bound, j) - Float::with_val(p, &tf / &profile.alphas[j])).to_f64())
        .collect();
    let mut running = margins.clone();
    for j in (0..running.len().saturating_sub(1)).rev() {
        running[j] = running[j].min(running[j + 1]);
    }
    Ok(DichotomyReport {
        heuristic: true,
        t,
        b_const: table.b_const.to_f64(),
        l_max,
        k_bound,
        levels,
        margins,
        running_liminf: running,
        degenerate_threshold: full,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct YoccozCompare {
    pub j: usize,
    /// `B[k_max][j]`, the deepest available approximation of the limit
    pub limit_b: f64,
    /// `beta_j^{-1} sum_{i=j}^{k_max-1} beta_i log(1/alpha_{i+1})`
    pub tail: f64,
    /// `(tail - log C) / (2 pi)`: the height of the lifted disk boundary
    pub boundary_height: f64,
    pub diff: f64,
    pub bound: f64,
    pub within_bound: bool,
}

pub fn yoccoz_height_compare(table: &BiSequenceTable, profile: &BrjunoProfile, j: usize, c_config: f64, tail_tol: f64) -> Result<YoccozCompare> {
    let k = table.k_max;
    if j >= k {
        return Err(Error::DepthExceeded(format!("start index {j} needs a table deeper than {k}")));
    }
    if !(c_config > 0.0) {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    let p = profile.precision;
    let inc = Float::with_val(p, &profile.betas[k - 1] * profile.log_inv(k)).to_f64();
    if !(inc <= tail_tol) {
        return Err(Error::NonBrjunoSuspected(format!("last Brjuno increment {inc:e} above {tail_tol:e}")));
    }
    let mut s = Float::new(p);
    for i in j..k {
        s += Float::with_val(p, &profile.betas[i] * profile.log_inv(i + 1));
    }
    let tail = Float::with_val(p, s / &profile.betas[j]).to_f64();
    let limit_b = table.get(k, j).to_f64();
    let bound = 2.0 * table.b_const.to_f64() + 2.0;
    let diff = limit_b - tail;
    Ok(YoccozCompare {
        j,
        limit_b,
        tail,
        boundary_height: (tail - c_config.ln()) / std::f64::consts::TAU,
        diff,
        bound,
        within_bound: diff.abs() <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{bisequence_from_profile, brjuno_profile, preset, RotationNumber};
    use proptest::prelude::*;

    const P: u32 = 128;

    fn golden(k: usize) -> BrjunoProfile {
        brjuno_profile(&preset("golden2", k).unwrap(), k, P).unwrap()
    }

    #[test]
    fn zero_slack_is_the_bisequence() {
        let prof = golden(20);
        let t = bisequence_from_profile(&prof, 0.0, 20).unwrap();
        for n in [0, 1, 7, 20] {
            let c = propagate_heights(&prof, n, -2.0, 0.0, 0.0).unwrap();
            assert_eq!(c.lo[n], -2);
            for j in 0..=n {
                assert_eq!(c.lo[j], *t.get(n, j));
                assert_eq!(c.hi[j], *t.get(n, j));
            }
        }
    }

    #[test]
    fn silver_mean_width() {
        let prof = golden(12);
        let c = propagate_heights(&prof, 10, -2.0, 1.0, 1.0).unwrap();
        // 2 M4 sum_{i<10} beta_i
        let want: f64 = (0..10).map(|i| 2.0 * prof.betas[i].to_f64()).sum();
        assert!((c.width(0).to_f64() - want).abs() < 1e-12);
        assert!(c.width(0).to_f64() <= 4.0);
        let t = bisequence_from_profile(&prof, 1.0, 12).unwrap();
        assert!(c.contains_row(&t, 12.0));
        assert!(c.contains_row(&t, 0.0));
    }

    #[test]
    fn dichotomy_silver_mean() {
        let prof = golden(14);
        let t = bisequence_from_profile(&prof, 0.0, 14).unwrap();
        let r = dichotomy_diagnostics(&t, &prof, 1.0, 4, 12).unwrap();
        assert!(r.heuristic && !r.degenerate_threshold);
        for d in &r.levels {
            assert_eq!(d.good_levels, vec![d.l + 1]);
            assert_eq!(d.flavor, Flavor::Terminating);
        }
        let deg = dichotomy_diagnostics(&t, &prof, -1e6, 4, 12).unwrap();
        assert!(deg.degenerate_threshold);
        assert!(deg.levels.iter().all(|d| d.good_levels.len() == 12 - d.l));
    }

    #[test]
    fn fast_digits_add_good_levels() {
        // a single fast digit at index 5 makes level 5 good above l = 3
        let mut pairs = vec![(1i8, 2u64); 10];
        pairs[5].1 = 100_000_000_000;
        let r = RotationNumber::from_pairs(0, &pairs).unwrap();
        let prof = brjuno_profile(&r, 9, P).unwrap();
        let t = bisequence_from_profile(&prof, 0.0, 9).unwrap();
        let short = dichotomy_diagnostics(&t, &prof, 10.0, 3, 4).unwrap();
        let long = dichotomy_diagnostics(&t, &prof, 10.0, 3, 9).unwrap();
        assert_eq!(short.levels[3].good_levels, vec![4]);
        assert_eq!(long.levels[3].good_levels, vec![4, 5]);
        for (a, b) in short.levels.iter().zip(&long.levels) {
            assert!(a.good_levels.iter().all(|k| b.good_levels.contains(k)));
        }
    }

    #[test]
    fn yoccoz_shift_invariance_and_bound() {
        let prof = golden(40);
        let t = bisequence_from_profile(&prof, 0.0, 40).unwrap();
        let y0 = yoccoz_height_compare(&t, &prof, 0, 1.0, 1e-6).unwrap();
        assert!((y0.limit_b - 1.5045988).abs() < 1e-6);
        assert!((y0.tail - 1.5045988).abs() < 1e-6);
        for j in [3, 8] {
            let y = yoccoz_height_compare(&t, &prof, j, 1.0, 1e-6).unwrap();
            assert!((y.limit_b - y0.limit_b).abs() < 1e-6);
        }
        let t1 = bisequence_from_profile(&prof, 1.0, 40).unwrap();
        let y1 = yoccoz_height_compare(&t1, &prof, 0, 1.0, 1e-6).unwrap();
        assert!(y1.within_bound && (y1.limit_b - 1.5045988).abs() <= 4.0);
    }

    #[test]
    fn yoccoz_rejects_unsettled_sums() {
        let r = preset("liouville:10", 4).unwrap();
        let k = r.declared_depth() - 1;
        let prof = brjuno_profile(&r, k, P).unwrap();
        let t = bisequence_from_profile(&prof, 0.0, k).unwrap();
        assert!(matches!(yoccoz_height_compare(&t, &prof, 0, 1.0, 1e-6), Err(Error::NonBrjunoSuspected(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn widths_bounded_and_monotone(ds in prop::collection::vec(2u64..10_000, 4..26), a in 0.0f64..3.0, b in 0.0f64..3.0, seed in -5.0f64..5.0) {
            let pairs: Vec<(i8, u64)> = ds.iter().map(|&x| (1, x)).collect();
            let r = RotationNumber::from_pairs(0, &pairs).unwrap();
            let n = r.declared_depth() - 1;
            let prof = brjuno_profile(&r, n, P).unwrap();
            let (small, big) = (a.min(b), a.max(b));
            let cs = propagate_heights(&prof, n, seed, small, 0.0).unwrap();
            let cb = propagate_heights(&prof, n, seed, big, 0.0).unwrap();
            prop_assert!(cb.contains(&cs));
            prop_assert!(cb.max_width() <= 12.0 * big + 1e-12);
            for j in 0..=n {
                prop_assert!(cb.lo[j] <= cb.hi[j]);
            }
        }
    }
}
