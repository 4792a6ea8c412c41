use super::cache::{cache_key, Cache, Lookup};
use super::{Artifact, Command, RunConfig, Table};
use crate::arith::{
    bisequence_from_profile, brjuno_profile, expand_cf, good_levels, is_high_type, preset, synthesize_alpha, BrjunoProfile, Digit, RotationNumber,
};
use crate::bigc::{float_to_decimal, BigComplex};
use crate::dynamics::{
    advance, birkhoff_average, density_estimate, find_small_cycle, iterate, make_map, siegel_estimate, CycleOptions, DensityMode, IterOptions,
    NeutralQuadratic, Observable, SiegelEstimate, SiegelOptions, Variant,
};
use crate::error::{Error, Result};
use crate::fatou::{renorm_multiplier, ChartConfig, FatouChart, RenormOptions};
use crate::heights::{dichotomy_diagnostics, propagate_heights, yoccoz_height_compare};
use rug::{Float, Integer};
use serde_json::{json, Value};

/// `golden2`, `hiN:<n>`, `liouville:<base>`, or an explicit list
/// `[a_-1:]d0,d1,...` where each digit is `a`, `+a` or `-a` (the sign is eps).
pub fn parse_digits(s: &str, depth: usize) -> Result<RotationNumber> {
    let s = s.trim();
    if s == "golden2" || s.starts_with("hiN:") || s.starts_with("liouville:") {
        return preset(s, depth);
    }
    let (head, body) = match s.split_once(':') {
        Some((h, b)) => (h.trim().parse::<Integer>().map_err(|_| Error::InvalidArgument(format!("bad a_-1 '{h}'")))?, b),
        None => (Integer::new(), s),
    };
    let mut ds = Vec::new();
    for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (eps, rest) = match tok.as_bytes()[0] {
            b'+' => (1, &tok[1..]),
            b'-' => (-1, &tok[1..]),
            _ => (1, tok),
        };
        let a: Integer = rest.parse().map_err(|_| Error::InvalidArgument(format!("bad digit '{tok}'")))?;
        ds.push(Digit::new(eps, a));
    }
    RotationNumber::new(head, ds)
}

fn f(x: &Float) -> f64 {
    x.to_f64()
}

fn s(x: f64) -> String {
    format!("{x:e}")
}

fn int_json(q: &Integer) -> Value {
    q.to_u64().map(Value::from).unwrap_or_else(|| Value::from(q.to_string()))
}

fn decimal_digits(prec: u32) -> usize {
    (prec as f64 * std::f64::consts::LOG10_2).floor() as usize
}

fn profile(digits: &RotationNumber, depth: usize, prec: u32) -> Result<BrjunoProfile> {
    brjuno_profile(digits, depth, prec)
}

fn build_map(digits: &str, variant: Variant, cfg: &RunConfig) -> Result<NeutralQuadratic> {
    make_map(variant, &parse_digits(digits, cfg.depth)?, cfg.precision_bits)
}

fn parse_seed(map: &NeutralQuadratic, seed: &str) -> Result<BigComplex> {
    let p = map.precision;
    match seed.trim() {
        "cv" => Ok(map.cv.clone()),
        "cp" => Ok(map.cp.clone()),
        t if t.starts_with('q') => {
            let k: usize = t[1..].parse().map_err(|_| Error::InvalidArgument(format!("bad seed '{t}'")))?;
            let digits = map.digits.as_ref().ok_or_else(|| Error::InvalidArgument("q<k> seeds need digits".into()))?;
            if k > digits.declared_depth() {
                return Err(Error::DepthExceeded(format!("seed {t} beyond {} digits", digits.declared_depth())));
            }
            let q = digits.q_times(k)[k].to_u64().ok_or_else(|| Error::InvalidArgument(format!("q_{k} too large")))?;
            advance(map, &map.cv, q)
        }
        t => {
            let (x, y) = t.split_once(',').ok_or_else(|| Error::InvalidArgument(format!("bad seed '{t}'")))?;
            let parse = |v: &str| Float::parse(v.trim()).map(|v| Float::with_val(p, v)).map_err(|_| Error::InvalidArgument(format!("bad seed '{t}'")));
            Ok(BigComplex::new(parse(x)?, parse(y)?))
        }
    }
}

fn siegel_for(map: &NeutralQuadratic, cfg: &RunConfig, terms: usize) -> Result<SiegelEstimate> {
    let opts = SiegelOptions { c_yoccoz: cfg.constants.c_yoccoz, tail_tol: cfg.tolerances.tail_tol, ..Default::default() };
    siegel_estimate(map, cfg.depth, terms, &opts)
}

fn chart_config(cfg: &RunConfig, grid: Option<usize>) -> ChartConfig {
    let mut c = ChartConfig { abel_tol: cfg.tolerances.abel_tol, ..Default::default() };
    if let Some(g) = grid {
        c.grid = g;
    }
    c
}

/// Chart for `digits`, reused from the cache when a valid copy exists.
fn chart_for(digits: &str, cfg: &RunConfig, grid: Option<usize>, cache: Option<&Cache>) -> Result<(FatouChart, bool)> {
    let cc = chart_config(cfg, grid);
    let key = cache_key(&json!({
        "chart": digits,
        "depth": cfg.depth,
        "precision": cfg.precision_bits,
        "config": cc,
        "version": env!("CARGO_PKG_VERSION"),
    }));
    if let Some(c) = cache {
        if let Lookup::Hit(body) = c.get(&key) {
            let parsed = serde_json::from_slice::<Value>(&body).map_err(|e| Error::CacheCorrupt(e.to_string()));
            if let Ok(chart) = parsed.and_then(|v| FatouChart::from_json(&v)) {
                return Ok((chart, true));
            }
        }
    }
    let map = build_map(digits, Variant::Q, cfg)?;
    let chart = FatouChart::build(&map, &cc)?;
    if let Some(c) = cache {
        c.put(&key, serde_json::to_string(&chart.to_json()).unwrap().as_bytes())?;
    }
    Ok((chart, false))
}

pub(super) fn key_inputs(cmd: &Command) -> Value {
    serde_json::to_value(cmd).expect("command serializes")
}

pub(super) fn execute(cmd: &Command, cfg: &RunConfig, cache: Option<&Cache>) -> Result<Artifact> {
    let prec = cfg.precision_bits;
    let depth = cfg.depth;
    let inputs = key_inputs(cmd);
    let (result, table) = match cmd {
        Command::CfExpand { value } => {
            let x = Float::parse(value.trim()).map_err(|_| Error::InvalidArgument(format!("bad value '{value}'")))?;
            let x = Float::with_val(prec, x);
            let r = expand_cf(&x, depth, prec)?;
            let alphas = r.alphas(prec);
            let mut t = Table::new(&["i", "eps", "a", "alpha"]);
            for (i, d) in r.digits().iter().enumerate() {
                t.push(vec![i.to_string(), d.eps.to_string(), d.a.to_string(), float_to_decimal(&alphas[i], 20)]);
            }
            let digits: Vec<Value> = r.digits().iter().map(|d| json!([d.eps, int_json(&d.a)])).collect();
            (
                json!({
                    "a_minus1": int_json(&r.a_minus1),
                    "digits": digits,
                    "alphas": alphas.iter().map(f).collect::<Vec<_>>(),
                }),
                t,
            )
        }
        Command::Synth { digits } => {
            let r = parse_digits(digits, depth)?;
            let a = synthesize_alpha(&r, prec)?;
            let ht = is_high_type(&r, cfg.constants.n_hightype);
            let dec = float_to_decimal(&a, decimal_digits(prec));
            let mut t = Table::new(&["alpha", "declared_depth", "high_type"]);
            t.push(vec![dec.clone(), r.declared_depth().to_string(), ht.value.to_string()]);
            (
                json!({
                    "alpha": dec,
                    "alpha_f64": f(&a),
                    "declared_depth": r.declared_depth(),
                    "high_type": { "n": cfg.constants.n_hightype, "value": ht.value, "depth": ht.depth },
                }),
                t,
            )
        }
        Command::Brjuno { digits } => {
            let r = parse_digits(digits, depth)?;
            let pr = profile(&r, depth, prec)?;
            let mut t = Table::new(&["j", "alpha", "beta", "partial", "q"]);
            for j in 0..=depth {
                t.push(vec![j.to_string(), s(f(&pr.alphas[j])), s(f(&pr.betas[j])), s(f(&pr.brjuno_partials[j])), pr.q_times[j].to_string()]);
            }
            (
                json!({
                    "depth": depth,
                    "brjuno_partial": f(pr.brjuno_partial()),
                    "brjuno_partial_decimal": float_to_decimal(pr.brjuno_partial(), decimal_digits(prec)),
                    "last_increment": f(&pr.last_increment()),
                    "alphas": pr.alphas.iter().map(f).collect::<Vec<_>>(),
                    "betas": pr.betas.iter().map(f).collect::<Vec<_>>(),
                    "partials": pr.brjuno_partials.iter().map(f).collect::<Vec<_>>(),
                    "q_times": pr.q_times.iter().map(int_json).collect::<Vec<_>>(),
                }),
                t,
            )
        }
        Command::Bisequence { digits, b, k } => {
            let k = k.unwrap_or(depth);
            let b = b.unwrap_or(cfg.constants.b_const);
            let r = parse_digits(digits, depth.max(k))?;
            let pr = profile(&r, k, prec)?;
            let tab = bisequence_from_profile(&pr, b, k)?;
            let mut t = Table::new(&["k", "i", "value", "closed_form"]);
            for kk in 0..=k {
                for i in 0..=kk {
                    t.push(vec![kk.to_string(), i.to_string(), s(f(tab.get(kk, i))), s(f(&tab.closed_form[kk][i]))]);
                }
            }
            let rows: Vec<Vec<f64>> = tab.entries.iter().map(|r| r.iter().map(f).collect()).collect();
            (json!({ "k_max": k, "B": b, "rows": rows, "max_closed_form_gap": tab.max_closed_form_gap() }), t)
        }
        Command::GoodLevels { digits, b, t: thr, level } => {
            let b = b.unwrap_or(cfg.constants.b_const);
            let r = parse_digits(digits, depth)?;
            let pr = profile(&r, depth, prec)?;
            let tab = bisequence_from_profile(&pr, b, depth)?;
            let set: Vec<usize> = good_levels(&tab, &pr, *thr, *level, depth)?.into_iter().collect();
            let mut t = Table::new(&["k"]);
            for k in &set {
                t.push(vec![k.to_string()]);
            }
            (json!({ "T": thr, "B": b, "l": level, "k_bound": depth, "good_levels": set }), t)
        }
        Command::Heights { digits, level, seed, m4, b } => {
            let n = level.unwrap_or(depth);
            let m4 = m4.unwrap_or(cfg.constants.m4);
            let b = b.unwrap_or(cfg.constants.b_const);
            let r = parse_digits(digits, depth.max(n))?;
            let pr = profile(&r, n, prec)?;
            let chain = propagate_heights(&pr, n, *seed, m4, b)?;
            let cross = bisequence_from_profile(&pr, m4, n)?;
            let rep = chain.report();
            let mut t = Table::new(&["j", "lo", "hi"]);
            for j in 0..=n {
                t.push(vec![j.to_string(), s(rep.lo[j]), s(rep.hi[j])]);
            }
            (
                json!({
                    "chain": rep,
                    "width_bound": 12.0 * m4,
                    "width_within_bound": rep.max_width <= 12.0 * m4,
                    "bisequence_within_slack": chain.contains_row(&cross, 12.0 * m4),
                }),
                t,
            )
        }
        Command::Dichotomy { digits, b, t: thr, level } => {
            let b = b.unwrap_or(cfg.constants.b_const);
            let r = parse_digits(digits, depth)?;
            let pr = profile(&r, depth, prec)?;
            let tab = bisequence_from_profile(&pr, b, depth)?;
            let rep = dichotomy_diagnostics(&tab, &pr, *thr, *level, depth)?;
            let yoccoz = match yoccoz_height_compare(&tab, &pr, 0, cfg.constants.c_yoccoz, cfg.tolerances.tail_tol) {
                Ok(y) => serde_json::to_value(y).unwrap(),
                Err(e) => json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
            };
            let mut t = Table::new(&["l", "flavor", "good_levels"]);
            for d in &rep.levels {
                let flavor = serde_json::to_value(d.flavor).unwrap();
                let ks: Vec<String> = d.good_levels.iter().map(|k| k.to_string()).collect();
                t.push(vec![d.l.to_string(), flavor.as_str().unwrap().to_string(), ks.join(";")]);
            }
            (json!({ "diagnostics": rep, "yoccoz": yoccoz }), t)
        }
        Command::Orbit { digits, map, seed, n, stride } => {
            let m = build_map(digits, *map, cfg)?;
            let z0 = parse_seed(&m, seed)?;
            let tr = iterate(&m, &z0, *n, &IterOptions { stride: *stride as usize, ..Default::default() })?;
            let mut t = Table::new(&["index", "re", "im", "flags"]);
            for ((i, z), fl) in tr.indices.iter().zip(&tr.points).zip(&tr.flags) {
                let (x, y) = z.to_f64();
                t.push(vec![i.to_string(), s(x), s(y), fl.to_string()]);
            }
            (tr.to_json(decimal_digits(prec).min(40)), t)
        }
        Command::Birkhoff { digits, map, observables, seeds, n, window } => {
            let m = build_map(digits, *map, cfg)?;
            let obs: Vec<Observable> = observables.iter().map(|o| o.parse()).collect::<Result<_>>()?;
            let mut runs = Vec::new();
            let mut finals: Vec<Vec<f64>> = Vec::new();
            let mut t = Table::new(&["seed", "observable", "checkpoint", "average"]);
            for sd in seeds {
                let z0 = parse_seed(&m, sd)?;
                let run = birkhoff_average(&m, &z0, &obs, *n, *window, 10.0)?;
                for (o, name) in run.observables.iter().enumerate() {
                    for (c, cp) in run.checkpoints.iter().enumerate() {
                        t.push(vec![sd.clone(), name.clone(), cp.to_string(), s(run.averages[o][c])]);
                    }
                }
                finals.push((0..obs.len()).map(|o| run.final_average(o)).collect());
                runs.push(json!({ "seed": sd, "run": run }));
            }
            // largest disagreement between seeds, per observable
            let spread: Vec<f64> = (0..obs.len())
                .map(|o| {
                    let v: Vec<f64> = finals.iter().map(|r| r[o]).collect();
                    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
                })
                .collect();
            (json!({ "runs": runs, "seed_spread": spread }), t)
        }
        Command::Siegel { digits, map, terms } => {
            let m = build_map(digits, *map, cfg)?;
            let e = siegel_for(&m, cfg, *terms)?;
            let mut t = Table::new(&["depth", "brjuno_partial", "yoccoz_lower", "linearization_radius", "interior_radius", "boundary_q"]);
            t.push(vec![
                e.depth.to_string(),
                s(e.brjuno_partial),
                s(e.yoccoz_lower),
                s(e.linearization_radius),
                s(e.interior_radius()),
                e.boundary_q.to_string(),
            ]);
            let mut v = serde_json::to_value(&e).unwrap();
            v["interior_radius"] = json!(e.interior_radius());
            (v, t)
        }
        Command::Cycles { digits, map, level, seeds, ring } => {
            let m = build_map(digits, *map, cfg)?;
            let ring = match ring {
                Some(r) => *r,
                None => {
                    let d = m.digits.as_ref().unwrap();
                    let pr = profile(d, depth.min(d.declared_depth() - 1), prec)?;
                    1.1 * cfg.constants.c_yoccoz * (-f(pr.brjuno_partial())).exp()
                }
            };
            let mut opts = CycleOptions { newton_tol: cfg.tolerances.newton_tol, ..Default::default() };
            if let Some(k) = seeds {
                opts.seeds = *k;
            }
            let found = find_small_cycle(&m, *level, ring, &opts)?;
            let mut t = Table::new(&["cycle", "re", "im", "residual"]);
            for (i, c) in found.cycles.iter().enumerate() {
                t.push(vec![i.to_string(), s(c.re), s(c.im), s(c.residual)]);
            }
            (serde_json::to_value(&found).unwrap(), t)
        }
        Command::Density { digits, map, level, delta, mode } => {
            let m = build_map(digits, *map, cfg)?;
            let sg = match mode {
                DensityMode::NearSiegel => Some(siegel_for(&m, cfg, 200)?),
                DensityMode::NearZero => None,
            };
            let e = density_estimate(&m, *level, *delta, *mode, sg.as_ref(), 10.0)?;
            let mut t = Table::new(&["level", "q", "delta", "mode", "hits", "fraction"]);
            let mode_name = serde_json::to_value(e.mode).unwrap();
            t.push(vec![e.level.to_string(), e.q.to_string(), s(e.delta), mode_name.as_str().unwrap().into(), e.hits.to_string(), s(e.fraction)]);
            (serde_json::to_value(&e).unwrap(), t)
        }
        Command::FatouChart { digits, grid } => {
            let (chart, _) = chart_for(digits, cfg, *grid, cache)?;
            let at = |z: &BigComplex| match chart.eval(z) {
                Ok(v) => {
                    let (x, y) = v.to_f64();
                    json!([x, y])
                }
                Err(e) => json!({ "error": e.kind() }),
            };
            let st = &chart.stats;
            let mut t = Table::new(&["alpha", "m", "points", "abel_max", "abel_mean", "inverse_max", "template_max"]);
            t.push(vec![
                s(chart.alpha0_f64()),
                chart.m.to_string(),
                st.points.to_string(),
                s(st.abel_max),
                s(st.abel_mean),
                s(st.inverse_max),
                s(st.template_max),
            ]);
            let mut v = chart.to_json();
            v["phi_cp"] = at(&chart.map.cp);
            v["phi_cv"] = at(&chart.map.cv);
            v["abel_within_tol"] = json!(st.abel_max <= chart.config.abel_tol);
            (v, t)
        }
        Command::RenormCheck { digits, grid, radius } => {
            let (chart, _) = chart_for(digits, cfg, *grid, cache)?;
            let chk = renorm_multiplier(&chart, *radius, &RenormOptions::default())?;
            let mut t = Table::new(&["radius", "phase", "expected_phase", "phase_error"]);
            t.push(vec![s(chk.radius), s(chk.phase), s(chk.expected_phase), s(chk.phase_error)]);
            let mut v = serde_json::to_value(&chk).unwrap();
            v["alpha"] = json!(chart.alpha0_f64());
            (v, t)
        }
    };
    Ok(Artifact { inputs, result, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_syntax() {
        let r = parse_digits("1:-4,-3,+5,7", 0).unwrap();
        assert_eq!(r.a_minus1, 1);
        assert_eq!(r.digits()[0], Digit::new(-1, 4));
        assert_eq!(r.digits()[2], Digit::new(1, 5));
        assert_eq!(r.digits()[3], Digit::new(1, 7));
        assert!(parse_digits("2,x", 0).is_err());
        assert!(parse_digits("1,3", 0).is_err());
        assert_eq!(parse_digits("golden2", 5).unwrap().declared_depth(), 5 + crate::arith::rotation::PADDING);
    }
}
