//! The bi-sequence `B_{k,i}` and the good-level sets built from it.

use super::profile::{brjuno_profile, BrjunoProfile};
use super::rotation::RotationNumber;
use crate::error::{Error, Result};
use rug::Float;
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct BiSequenceTable {
    pub b_const: Float,
    pub k_max: usize,
    /// `entries[k][i]` for `0 <= i <= k <= k_max`
    pub entries: Vec<Vec<Float>>,
    pub closed_form: Vec<Vec<Float>>,
}

/// One backward step `alpha_i * b + log(1/alpha_i) - B`. The height model
/// reuses it so both agree bit for bit.
pub fn step(alpha: &Float, log_inv: &Float, b: &Float, shift: &Float) -> Float {
    let p = b.prec();
    let mut v = Float::with_val(p, alpha * b);
    v += log_inv;
    v -= shift;
    v
}

pub fn bisequence(digits: &RotationNumber, b_const: f64, k_max: usize, prec: u32) -> Result<BiSequenceTable> {
    let profile = brjuno_profile(digits, k_max, prec)?;
    bisequence_from_profile(&profile, b_const, k_max)
}

pub fn bisequence_from_profile(profile: &BrjunoProfile, b_const: f64, k_max: usize) -> Result<BiSequenceTable> {
    if k_max > profile.depth {
        return Err(Error::DepthExceeded(format!("k_max {k_max} beyond profile depth {}", profile.depth)));
    }
    if !(b_const >= 0.0) {
        return Err(Error::InvalidArgument("B must be >= 0".into()));
    }
    let p = profile.precision;
    let bc = Float::with_val(p, b_const);
    let logs: Vec<Float> = (0..=k_max).map(|j| profile.log_inv(j)).collect();

    let mut entries = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut row = vec![Float::new(p); k + 1];
        row[k] = Float::with_val(p, -2);
        for i in (1..=k).rev() {
            row[i - 1] = step(&profile.alphas[i], &logs[i], &row[i], &bc);
        }
        entries.push(row);
    }

    // B_{k,i} = -2 beta_k / beta_i + beta_i^{-1} sum_{j=i+1}^k beta_{j-1} (log(1/alpha_j) - B)
    let mut closed = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut row = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let mut s = Float::new(p);
            for j in (i + 1)..=k {
                let t = Float::with_val(p, &logs[j] - &bc);
                s += Float::with_val(p, &profile.betas[j - 1] * &t);
            }
            let lead = Float::with_val(p, &profile.betas[k] / &profile.betas[i]) * 2u32;
            row.push(Float::with_val(p, s / &profile.betas[i]) - lead);
        }
        closed.push(row);
    }
    Ok(BiSequenceTable { b_const: bc, k_max, entries, closed_form: closed })
}

impl BiSequenceTable {
    pub fn get(&self, k: usize, i: usize) -> &Float {
        &self.entries[k][i]
    }

    pub fn max_closed_form_gap(&self) -> f64 {
        let mut m = 0f64;
        for (row, crow) in self.entries.iter().zip(&self.closed_form) {
            for (a, b) in row.iter().zip(crow) {
                m = m.max(Float::with_val(a.prec(), a - b).abs().to_f64());
            }
        }
        m
    }
}

/// `{ k in (l, k_bound] : B[k][i] >= T / alpha_i for all l < i < k }`
pub fn good_levels(table: &BiSequenceTable, profile: &BrjunoProfile, t: f64, l: usize, k_bound: usize) -> Result<BTreeSet<usize>> {
    if k_bound > table.k_max {
        return Err(Error::DepthExceeded(format!("k_bound {k_bound} beyond table depth {}", table.k_max)));
    }
    let p = profile.precision;
    let tf = Float::with_val(p, t);
    let thresholds: Vec<Float> = profile.alphas.iter().map(|a| Float::with_val(p, &tf / a)).collect();
    let mut out = BTreeSet::new();
    for k in (l + 1)..=k_bound {
        if ((l + 1)..k).all(|i| table.entries[k][i] >= thresholds[i]) {
            out.insert(k);
        }
    }
    Ok(out)
}
