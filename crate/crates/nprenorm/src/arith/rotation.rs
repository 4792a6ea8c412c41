//! Rotation numbers stored as modified continued fraction digit streams.

use crate::error::{Error, Result};
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

/// Extra digits materialized past the requested depth for generated streams,
/// so that tails do not disturb quantities at the requested depth.
pub const PADDING: usize = 64;

/// Largest digit bit length a generator will materialize.
pub const MAX_DIGIT_BITS: u32 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digit {
    pub eps: i8,
    pub a: Integer,
}

impl Digit {
    pub fn new(eps: i8, a: impl Into<Integer>) -> Self {
        Digit { eps, a: a.into() }
    }
}

/// Rule that produces digits on demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DigitRule {
    /// Every digit is `(eps, a)`.
    Constant { eps: i8, a: u64 },
    /// `a_0 = base`, `a_n = base^{q_n}` with all signs `+1`. Brjuno sums grow
    /// by about `ln(base)` per level.
    Liouville { base: u64 },
    /// Repeats the given pattern.
    Periodic(Vec<Digit>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationNumber {
    pub a_minus1: Integer,
    digits: Vec<Digit>,
    rule: Option<DigitRule>,
}

impl RotationNumber {
    /// Finite stream. Checks the digit constraints.
    pub fn new(a_minus1: impl Into<Integer>, digits: Vec<Digit>) -> Result<Self> {
        validate(&digits)?;
        Ok(RotationNumber { a_minus1: a_minus1.into(), digits, rule: None })
    }

    /// Convenience for small digit lists `(eps, a)`.
    pub fn from_pairs(a_minus1: i64, pairs: &[(i8, u64)]) -> Result<Self> {
        RotationNumber::new(a_minus1, pairs.iter().map(|&(e, a)| Digit::new(e, a)).collect())
    }

    /// Generator-backed stream with `depth` digits materialized.
    pub fn generated(a_minus1: impl Into<Integer>, rule: DigitRule, depth: usize) -> Result<Self> {
        let mut r = RotationNumber { a_minus1: a_minus1.into(), digits: Vec::new(), rule: Some(rule) };
        r.materialize(depth)?;
        if r.digits.is_empty() {
            return Err(Error::InvalidDigits("generator produced no digits".into()));
        }
        Ok(r)
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn rule(&self) -> Option<&DigitRule> {
        self.rule.as_ref()
    }

    pub fn declared_depth(&self) -> usize {
        self.digits.len()
    }

    /// Copy with at least `depth` digits, generating more if a rule is attached.
    /// Generators stop early when the next digit would exceed `MAX_DIGIT_BITS`.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let mut r = self.clone();
        r.materialize(depth)?;
        Ok(r)
    }

    /// Copy truncated to the first `depth` digits.
    pub fn truncated(&self, depth: usize) -> Self {
        let mut r = self.clone();
        r.digits.truncate(depth);
        r.rule = None;
        r
    }

    fn materialize(&mut self, depth: usize) -> Result<()> {
        let Some(rule) = self.rule.clone() else {
            return Ok(());
        };
        while self.digits.len() < depth {
            let n = self.digits.len();
            let next = match &rule {
                DigitRule::Constant { eps, a } => Digit::new(if n == 0 { 1 } else { *eps }, *a),
                DigitRule::Periodic(p) => {
                    if p.is_empty() {
                        return Err(Error::InvalidDigits("empty periodic pattern".into()));
                    }
                    p[n % p.len()].clone()
                }
                DigitRule::Liouville { base } => {
                    if *base < 2 {
                        return Err(Error::InvalidDigits("liouville base must be >= 2".into()));
                    }
                    if n == 0 {
                        Digit::new(1, *base)
                    } else {
                        let q = self.q_times(n)[n].clone();
                        let bits = q.to_f64() * (*base as f64).log2();
                        if !(bits <= MAX_DIGIT_BITS as f64) {
                            break;
                        }
                        let e = q.to_u32().expect("bounded by bit check");
                        Digit::new(1, Integer::from(*base).pow(e))
                    }
                }
            };
            self.digits.push(next);
        }
        validate(&self.digits)
    }

    /// Signed recurrence `q_n = a_{n-1} q_{n-1} + eps_{n-1} q_{n-2}` for `n <= upto`,
    /// with `q_0 = 1`, `q_{-1} = 0`.
    pub fn q_times(&self, upto: usize) -> Vec<Integer> {
        let mut q = vec![Integer::from(1)];
        let mut prev = Integer::from(0);
        for n in 1..=upto.min(self.digits.len()) {
            let d = &self.digits[n - 1];
            let mut next = Integer::from(&d.a * &q[n - 1]);
            if n >= 2 {
                if d.eps > 0 {
                    next += &prev;
                } else {
                    next -= &prev;
                }
            }
            prev = q[n - 1].clone();
            q.push(next);
        }
        q
    }

    /// `alpha_0 .. alpha_{D-1}` of the truncated stream (tail `alpha_D = 0`).
    pub fn alphas(&self, prec: u32) -> Vec<Float> {
        let d = self.digits.len();
        let mut out = vec![Float::new(prec); d];
        let mut next = Float::new(prec);
        for i in (0..d).rev() {
            let eps_next = if i + 1 < d { self.digits[i + 1].eps } else { 1 };
            let mut den = Float::with_val(prec, &self.digits[i].a);
            if eps_next > 0 {
                den += &next;
            } else {
                den -= &next;
            }
            let a = den.recip();
            out[i] = a.clone();
            next = a;
        }
        out
    }

    /// Value of the truncated continued fraction.
    pub fn eval(&self, prec: u32) -> Float {
        let mut v = Float::with_val(prec, &self.a_minus1);
        if let Some(first) = self.digits.first() {
            let a0 = self.alphas(prec).swap_remove(0);
            if first.eps > 0 {
                v += a0;
            } else {
                v -= a0;
            }
        }
        v
    }
}

fn validate(digits: &[Digit]) -> Result<()> {
    for (i, d) in digits.iter().enumerate() {
        if d.eps != 1 && d.eps != -1 {
            return Err(Error::InvalidDigits(format!("eps_{i} = {} is not +-1", d.eps)));
        }
        if d.a < 2 {
            return Err(Error::InvalidDigits(format!("a_{i} = {} < 2", d.a)));
        }
        if i + 1 < digits.len() && d.a == 2 && digits[i + 1].eps < 0 {
            return Err(Error::InvalidDigits(format!("a_{i} = 2 forces eps_{} = +1", i + 1)));
        }
    }
    Ok(())
}

/// `2^{-prec/4}`
pub fn guard_band(prec: u32) -> Float {
    Float::with_val(prec, Float::with_val(prec, 2).pow(-((prec / 4) as i32)))
}

/// Expand `x` into `depth` modified continued fraction digits at `prec` bits.
///
/// An absolute error bound on each remainder is propagated alongside the
/// expansion; once it reaches the guard band the digits stop being trustworthy.
pub fn expand_cf(x: &Float, depth: usize, prec: u32) -> Result<RotationNumber> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    let guard = guard_band(prec);
    let half = Float::with_val(prec, 0.5);
    let u = crate::bigc::ulp(prec);

    let x = Float::with_val(prec, x);
    let a_minus1 = nearest_integer(&x);
    let frac = Float::with_val(prec, &x - &a_minus1);
    let mut err = Float::with_val(prec, x.clone().abs() * &u) * 2u32;
    check_remainder(&frac, &half, &guard, &err, "alpha_0")?;
    let mut eps = if frac.is_sign_positive() { 1i8 } else { -1 };
    let mut alpha = frac.abs();

    let mut digits = Vec::with_capacity(depth);
    for i in 0..depth {
        let y = Float::with_val(prec, alpha.recip_ref());
        let a = nearest_integer(&y);
        let r = Float::with_val(prec, &y - &a);
        // d(1/alpha) = d(alpha) / alpha^2, plus the rounding of the reciprocal
        err = Float::with_val(prec, &err / Float::with_val(prec, alpha.square_ref())) + Float::with_val(prec, &y * &u) * 2u32;
        if err > guard {
            return Err(Error::PrecisionExhausted(format!(
                "error bound {:.3e} exceeds guard band at digit {i}",
                err.to_f64()
            )));
        }
        let half_gap = Float::with_val(prec, &half - Float::with_val(prec, r.abs_ref()));
        if half_gap < guard {
            return Err(Error::NearRational(format!("digit {i} sits on a rounding tie")));
        }
        digits.push(Digit { eps, a });
        if i + 1 < depth {
            check_remainder(&r, &half, &guard, &err, &format!("alpha_{}", i + 1))?;
            eps = if r.is_sign_positive() { 1 } else { -1 };
            alpha = r.abs();
        }
    }
    RotationNumber::new(a_minus1, digits)
}

fn check_remainder(r: &Float, half: &Float, guard: &Float, err: &Float, what: &str) -> Result<()> {
    let m = Float::with_val(r.prec(), r.abs_ref());
    if m < *guard || m <= *err {
        return Err(Error::NearRational(format!("{what} = {:.3e} is within the guard band of 0", m.to_f64())));
    }
    let gap = Float::with_val(r.prec(), half - &m);
    if gap < *guard {
        return Err(Error::NearRational(format!("{what} is within the guard band of 1/2")));
    }
    Ok(())
}

fn nearest_integer(x: &Float) -> Integer {
    let shifted = Float::with_val(x.prec(), x + 0.5f64).floor();
    shifted.to_integer_round(Round::Down).map(|(i, _)| i).unwrap_or_default()
}

/// Inverse of `expand_cf`: the value of the truncated fraction.
pub fn synthesize_alpha(digits: &RotationNumber, prec: u32) -> Result<Float> {
    if digits.declared_depth() == 0 {
        return Err(Error::InvalidDigits("no digits".into()));
    }
    if prec < 8 {
        return Err(Error::PrecisionExhausted(format!("{prec} bits")));
    }
    Ok(digits.eval(prec))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighType {
    pub value: bool,
    /// Number of digits the answer covers; `0` marks the vacuous case.
    pub depth: usize,
}

pub fn is_high_type(digits: &RotationNumber, n: u64) -> HighType {
    let value = digits.digits().iter().all(|d| d.a >= n);
    HighType { value, depth: digits.declared_depth() }
}

/// Named presets: `golden2`, `hiN:<n>`, `liouville:<base>`.
/// Generated streams get `depth + PADDING` digits.
pub fn preset(name: &str, depth: usize) -> Result<RotationNumber> {
    let want = depth + PADDING;
    let name = name.trim();
    if name == "golden2" {
        return RotationNumber::generated(0, DigitRule::Constant { eps: 1, a: 2 }, want);
    }
    if let Some(n) = name.strip_prefix("hiN:") {
        let a: u64 = n.parse().map_err(|_| Error::InvalidArgument(format!("bad hiN digit '{n}'")))?;
        if a < 2 {
            return Err(Error::InvalidDigits(format!("hiN:{a} needs a >= 2")));
        }
        return RotationNumber::generated(0, DigitRule::Constant { eps: 1, a }, want);
    }
    if let Some(b) = name.strip_prefix("liouville:") {
        let base: u64 = b.parse().map_err(|_| Error::InvalidArgument(format!("bad liouville base '{b}'")))?;
        return RotationNumber::generated(0, DigitRule::Liouville { base }, want);
    }
    Err(Error::InvalidArgument(format!("unknown preset '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 256;

    fn sqrt2m1(prec: u32) -> Float {
        Float::with_val(prec, 2).sqrt() - 1u32
    }

    #[test]
    fn expands_silver_mean_tail() {
        let r = expand_cf(&sqrt2m1(P), 5, P).unwrap();
        assert_eq!(r.a_minus1, 0);
        assert!(r.digits().iter().all(|d| d.eps == 1 && d.a == 2));
        assert_eq!(r.declared_depth(), 5);
    }

    #[test]
    fn expands_e_minus_two() {
        let e = Float::with_val(P, 1).exp();
        let x = Float::with_val(P, &e - 2u32);
        let r = expand_cf(&x, 2, P).unwrap();
        assert_eq!(r.a_minus1, 1);
        assert_eq!(r.digits()[0], Digit::new(-1, 4));
        assert_eq!(r.digits()[1].eps, -1);
        // independent: alpha_0 = 3 - e, alpha_1 = d(1/alpha_0, Z)
        let a0 = Float::with_val(P, 3u32 - &e);
        assert!((a0.to_f64() - 0.28171817).abs() < 1e-8);
        let inv = Float::with_val(P, a0.recip_ref());
        let a1 = Float::with_val(P, 4u32 - inv);
        let e64 = std::f64::consts::E;
        assert!((a1.to_f64() - (4.0 - 1.0 / (3.0 - e64))).abs() < 1e-12);
        assert!((a1.to_f64() - 0.45035322).abs() < 1e-8);
    }

    #[test]
    fn rational_input_is_rejected() {
        for k in [-3, 0, 7] {
            let x = Float::with_val(P, k);
            assert!(matches!(expand_cf(&x, 3, P), Err(Error::NearRational(_))));
        }
        let x = Float::with_val(P, 0.375);
        assert!(matches!(expand_cf(&x, 6, P), Err(Error::NearRational(_))));
    }

    #[test]
    fn huge_digits_exhaust_precision() {
        let r = RotationNumber::from_pairs(0, &[(1, 1_000_000); 12]).unwrap();
        let x = r.eval(128);
        assert!(matches!(expand_cf(&x, 10, 128), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn synthesized_silver_mean_matches() {
        let r = preset("golden2", 0).unwrap().truncated(40);
        let v = synthesize_alpha(&r, P).unwrap();
        let diff = Float::with_val(P, &v - sqrt2m1(P)).abs();
        assert!(diff < Float::with_val(P, Float::with_val(P, 2).pow(-40)));
    }

    #[test]
    fn single_digit_truncation_is_half() {
        let r = RotationNumber::from_pairs(0, &[(1, 2)]).unwrap();
        assert_eq!(synthesize_alpha(&r, 64).unwrap(), 0.5);
    }

    #[test]
    fn high_type_checks() {
        let r = preset("golden2", 10).unwrap();
        assert!(is_high_type(&r, 2).value);
        assert!(!is_high_type(&r, 3).value);
        let empty = RotationNumber::new(0, vec![]).unwrap();
        assert_eq!(is_high_type(&empty, 5), HighType { value: true, depth: 0 });
    }

    #[test]
    fn invalid_streams_rejected() {
        assert!(RotationNumber::from_pairs(0, &[(1, 1)]).is_err());
        assert!(RotationNumber::from_pairs(0, &[(1, 2), (-1, 5)]).is_err());
        assert!(RotationNumber::from_pairs(0, &[(1, 3), (-1, 5)]).is_ok());
    }

    #[test]
    fn q_times_silver_mean() {
        let r = preset("golden2", 10).unwrap();
        let q: Vec<u64> = r.q_times(8).iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(q, vec![1, 2, 5, 12, 29, 70, 169, 408, 985]);
    }

    #[test]
    fn liouville_digits_blow_up() {
        let r = preset("liouville:2", 3).unwrap();
        let a: Vec<u32> = r.digits().iter().map(|d| d.a.significant_bits()).collect();
        // a_0 = 2, a_1 = 2^2, a_2 = 2^9, a_3 = 2^4610
        assert_eq!(&a[..4], &[2, 3, 10, 4611]);
        assert_eq!(r.declared_depth(), 4);
    }

    fn stream() -> impl Strategy<Value = Vec<(i8, u64)>> {
        prop::collection::vec((prop::bool::ANY, 2u64..40), 1..15).prop_map(|v| {
            let mut out: Vec<(i8, u64)> = Vec::new();
            for (i, (s, a)) in v.into_iter().enumerate() {
                let mut e = if s { 1 } else { -1 };
                if i > 0 && out[i - 1].1 == 2 {
                    e = 1;
                }
                out.push((e, a));
            }
            // a final digit of 2 truncates to alpha = 1/2 exactly, a rounding tie
            if out.last().unwrap().1 == 2 {
                out.last_mut().unwrap().1 = 3;
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn expand_inverts_synthesize(pairs in stream(), am1 in -3i64..4) {
            let r = RotationNumber::from_pairs(am1, &pairs).unwrap();
            let x = synthesize_alpha(&r, 512).unwrap();
            let back = expand_cf(&x, pairs.len(), 512).unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn alphas_satisfy_recursion(pairs in stream()) {
            let r = RotationNumber::from_pairs(0, &pairs).unwrap();
            let al = r.alphas(256);
            for i in 0..al.len() {
                prop_assert!(al[i] > 0 && al[i] <= 0.5);
                if i + 1 < al.len() {
                    let mut den = Float::with_val(256, &r.digits()[i].a);
                    if r.digits()[i + 1].eps > 0 { den += &al[i + 1]; } else { den -= &al[i + 1]; }
                    let diff = Float::with_val(256, den.recip() - &al[i]).abs();
                    prop_assert!(diff.to_f64() < 1e-70);
                }
            }
        }

        #[test]
        fn eval_in_half_window(pairs in stream(), am1 in -5i64..5) {
            let r = RotationNumber::from_pairs(am1, &pairs).unwrap();
            let v = r.eval(128).to_f64();
            prop_assert!(v > am1 as f64 - 0.5 && v <= am1 as f64 + 0.5);
        }
    }
}
