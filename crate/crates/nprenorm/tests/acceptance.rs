//! Acceptance run: one line per criterion, nonzero exit if any fails.

use nprenorm::arith::{bisequence_from_profile, brjuno_profile, preset, synthesize_alpha, Digit, RotationNumber};
use nprenorm::bigc::BigComplex;
use nprenorm::cli::cache::{cache_key, Cache, Lookup};
use nprenorm::dynamics::{
    advance, birkhoff_average, density_estimate, find_small_cycle, from_alpha, make_map, siegel_estimate, CycleOptions, DensityMode, Observable,
    SiegelOptions, Variant,
};
use nprenorm::fatou::{renorm_multiplier, ChartConfig, FatouChart, RenormOptions};
use nprenorm::heights::propagate_heights;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::Float;
use std::time::{Duration, Instant};

const P: u32 = 128;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

/// High type streams: digits in [20, 10^5], random signs, 2..=26 digits so the
/// profile depth is at most 25.
fn random_high_type(rng: &mut StdRng) -> RotationNumber {
    let len = rng.gen_range(2..=26);
    let ds = (0..len).map(|_| Digit::new(if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(20u64..=100_000))).collect();
    RotationNumber::new(0, ds).unwrap()
}

fn streams() -> Vec<RotationNumber> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    (0..200).map(|_| random_high_type(&mut rng)).collect()
}

fn c1_closed_form() -> Outcome {
    let mut worst = 0f64;
    for r in streams() {
        let k = r.declared_depth() - 1;
        let prof = brjuno_profile(&r, k, P).unwrap();
        let t = bisequence_from_profile(&prof, 0.0, k).unwrap();
        worst = worst.max(t.max_closed_form_gap());
        for b in [1.0, 5.0] {
            worst = worst.max(bisequence_from_profile(&prof, b, k).unwrap().max_closed_form_gap());
        }
    }
    outcome(worst <= 1e-12, format!("200 streams, max deviation {worst:.2e}"))
}

/// The lower margin is `B sum beta_{j-1} + 2 beta_k`; at `B = 0` it is
/// `2 beta_k`, so each stream is evaluated at enough bits to resolve it.
fn c2_sandwich() -> Outcome {
    let mut bad = [0usize; 3];
    let mut checked = 0;
    let mut max_prec = P;
    for r in streams() {
        let k = r.declared_depth() - 1;
        let rough = brjuno_profile(&r, k, 64).unwrap();
        let need = (-rough.betas[k].to_f64().log2()).ceil().max(0.0) as u32;
        let prec = P.max(need + 96);
        max_prec = max_prec.max(prec);
        let prof = brjuno_profile(&r, k, prec).unwrap();
        for (bi, b) in [0.0, 1.0, 5.0].into_iter().enumerate() {
            let t = bisequence_from_profile(&prof, b, k).unwrap();
            for kk in 1..=k {
                let lo = t.get(kk, 0);
                let hi = Float::with_val(prec, lo + (2.0 * b + 2.0));
                checked += 1;
                if !(*lo < prof.brjuno_partials[kk] && prof.brjuno_partials[kk] < hi) {
                    bad[bi] += 1;
                }
            }
        }
    }
    let n: usize = bad.iter().sum();
    outcome(n == 0, format!("{checked} inequalities at up to {max_prec} bits, violated for B=0,1,5: {bad:?}"))
}

fn q_stream(rng: &mut StdRng, mixed: bool) -> RotationNumber {
    let mut ds: Vec<Digit> = Vec::new();
    for i in 0..40 {
        let a = rng.gen_range(2u64..=9);
        let mut eps = if (i < 2 || mixed) && rng.gen_bool(0.5) { -1 } else { 1 };
        if ds.last().map_or(false, |d| d.a == 2) {
            eps = 1;
        }
        ds.push(Digit::new(eps, a));
    }
    RotationNumber::new(0, ds).unwrap()
}

fn c3_q_times() -> Outcome {
    let mut rng = StdRng::seed_from_u64(33);
    let mut agree = 0;
    let mut compared = 0;
    for _ in 0..20 {
        let r = q_stream(&mut rng, false);
        let prof = brjuno_profile(&r, 39, P).unwrap();
        let chk = prof.check_q_times(&synthesize_alpha(&r, P).unwrap(), 1_000_000);
        compared += chk.oracle.len();
        if chk.agrees {
            agree += 1;
        }
    }
    outcome(agree == 20, format!("{agree}/20 streams agree, {compared} return times compared"))
}

/// Fully mixed signs: the recurrence gives a subsequence of the oracle.
fn mixed_sign_info() -> String {
    let mut rng = StdRng::seed_from_u64(34);
    let mut sub = 0;
    let mut equal = 0;
    for _ in 0..20 {
        let r = q_stream(&mut rng, true);
        let prof = brjuno_profile(&r, 39, P).unwrap();
        let chk = prof.check_q_times(&synthesize_alpha(&r, P).unwrap(), 1_000_000);
        if chk.agrees {
            equal += 1;
        }
        if chk.recurrence.iter().all(|q| chk.oracle.contains(q)) {
            sub += 1;
        }
    }
    format!("mixed-sign streams: {equal}/20 identical, {sub}/20 subsequence of the oracle")
}

fn c4_golden() -> Outcome {
    let r = preset("golden2", 30).unwrap();
    let prof = brjuno_profile(&r, 30, P).unwrap();
    let want = [1u64, 2, 5, 12, 29, 70, 169, 408, 985];
    let q: Vec<u64> = prof.q_times.iter().take(9).map(|q| q.to_u64().unwrap()).collect();
    let oracle = prof.check_q_times(&synthesize_alpha(&r, P).unwrap(), 985);
    let partial = prof.brjuno_partial().to_f64();
    let ok = q == want && oracle.oracle == want && (partial - 1.5045988).abs() <= 1e-6;
    outcome(ok, format!("q = {q:?}, Brjuno partial {partial:.9}"))
}

fn c5_structure() -> Outcome {
    let m = make_map(Variant::Q, &preset("hiN:50", 20).unwrap(), P).unwrap();
    let cv = m.cv.dist(&BigComplex::from_real(&(Float::with_val(P, -4) / 27u32))).to_f64();
    let cp = (m.cp.abs() - Float::with_val(P, 8) / 27u32).abs().to_f64();
    let res = m.sigma_residual().to_f64();
    let mut lo = f64::INFINITY;
    let mut hi = 0f64;
    let mut worst_res = res;
    for i in 0..=40 {
        let a = 10f64.powf(-4.0 + i as f64 * (0.05f64.log10() + 4.0) / 40.0);
        let m = from_alpha(Variant::Q, &Float::with_val(P, a), P).unwrap();
        let r = m.sigma.abs_f64() / m.alpha.to_f64();
        lo = lo.min(r);
        hi = hi.max(r);
        worst_res = worst_res.max(m.sigma_residual().to_f64());
    }
    let ok = cv < 1e-35 && cp < 1e-35 && worst_res <= 1e-30 && lo >= 3.0 && hi <= 4.5;
    outcome(ok, format!("|cv+4/27| {cv:.1e}, ||cp|-8/27| {cp:.1e}, sigma residual {worst_res:.1e}, |sigma|/alpha in [{lo:.4}, {hi:.4}]"))
}

fn chart_json_cache() -> (Cache, String, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let key = cache_key(&serde_json::json!({"chart": "hiN:50", "precision": P, "config": ChartConfig::default()}));
    (cache, key, dir)
}

fn c6_chart(cache: &Cache, key: &str) -> Outcome {
    let m = make_map(Variant::Q, &preset("hiN:50", 20).unwrap(), P).unwrap();
    let chart = match FatouChart::build(&m, &ChartConfig::default()) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("chart build failed: {e}")),
    };
    cache.put(key, serde_json::to_string(&chart.to_json()).unwrap().as_bytes()).unwrap();
    let st = &chart.stats;
    let tol = chart.config.abel_tol;
    let one = BigComplex::from_f64(P, 1.0, 0.0);
    let phi_cv = chart.eval(&m.cv).map(|v| v.dist(&one).to_f64()).unwrap_or(f64::INFINITY);
    // Phi(cp) = 0 is read as Phi^{-1}(0) = cp
    let cp_err = chart.inverse(&BigComplex::zero(P)).map(|z| z.dist(&m.cp).to_f64()).unwrap_or(f64::INFINITY);
    let phi_cp = chart.eval(&m.cp).map(|v| v.abs_f64()).ok();
    // transport makes Phi(hz) - Phi(z) - 1 vanish almost by construction; the
    // jump across the band edge, refinement_gap, is the nontrivial part
    let ok = st.points == 400
        && st.abel_max <= tol
        && st.refinement_gap <= tol
        && phi_cv <= tol
        && cp_err <= tol
        && phi_cp.map_or(true, |v| v <= tol);
    outcome(
        ok,
        format!(
            "alpha {:.6}, {} grid points, Abel max {:.2e}, band-edge jump {:.2e} (template alone {:.2e}), |Phi(cv)-1| {phi_cv:.1e}, |Phi^-1(0)-cp| {cp_err:.1e}",
            m.alpha.to_f64(),
            st.points,
            st.abel_max,
            st.refinement_gap,
            st.template_max
        ),
    )
}

fn c7_multiplier(cache: &Cache, key: &str) -> Outcome {
    let chart = match cache.get(key) {
        Lookup::Hit(body) => FatouChart::from_json(&serde_json::from_slice(&body).unwrap()),
        _ => return outcome(false, "no cached chart"),
    };
    let chart = match chart {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("cached chart rejected: {e}")),
    };
    match renorm_multiplier(&chart, 1e-3, &RenormOptions::default()) {
        Ok(chk) => outcome(
            chk.phase_error <= 1e-3,
            format!("arg R'(0) {:.6}, -2pi/alpha mod 2pi {:.6}, error {:.1e} (chart from cache)", chk.phase, chk.expected_phase, chk.phase_error),
        ),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn c8_birkhoff() -> Outcome {
    let r = preset("golden2", 20).unwrap();
    let m = make_map(Variant::P, &r, P).unwrap();
    let q = r.q_times(5);
    let seeds = [
        m.cv.clone(),
        advance(&m, &m.cv, q[3].to_u64().unwrap()).unwrap(),
        advance(&m, &m.cv, q[5].to_u64().unwrap()).unwrap(),
    ];
    let obs = [Observable::Re, Observable::Im];
    let mut finals = vec![];
    for s in &seeds {
        match birkhoff_average(&m, s, &obs, 100_000, None, 10.0) {
            Ok(run) => finals.push([run.final_average(0), run.final_average(1)]),
            Err(e) => return outcome(false, format!("{e}")),
        }
    }
    let mut spread = 0f64;
    let mut size = 0f64;
    for o in 0..2 {
        for a in &finals {
            size = size.max(a[o].abs());
            for b in &finals {
                spread = spread.max((a[o] - b[o]).abs());
            }
        }
    }
    outcome(spread <= 1e-2 && size <= 5e-2, format!("seed spread {spread:.2e}, max |average| {size:.2e}"))
}

fn c9_cycles() -> Outcome {
    let m = make_map(Variant::P, &preset("golden2", 20).unwrap(), P).unwrap();
    let s = siegel_estimate(&m, 20, 200, &SiegelOptions::default()).unwrap();
    let ring = 1.1 * s.yoccoz_lower;
    let mut parts = vec![];
    let mut ok = true;
    for level in [2, 3] {
        match find_small_cycle(&m, level, ring, &CycleOptions::default()) {
            Ok(found) => {
                let c = &found.cycles[0];
                let res = found.cycles.iter().map(|c| c.residual).fold(0.0, f64::max);
                let far = c.orbit.iter().map(|&(x, y)| s.boundary_sample.distance(x, y)).fold(0.0, f64::max);
                let origin = c.orbit.iter().map(|&(x, y)| x.hypot(y)).fold(f64::INFINITY, f64::min);
                ok &= res <= 1e-10 && origin > 1e-6 && far <= 0.5;
                parts.push(format!("q={} residual {res:.1e} |z|>={origin:.3} boundary dist {far:.3}", found.period));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("level {level}: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn c10_density() -> Outcome {
    let mut f = vec![];
    for a1 in [10u64, 10_000] {
        let r = RotationNumber::from_pairs(0, &[(1, 10), (1, a1), (1, 10), (1, 10), (1, 10)]).unwrap();
        let m = make_map(Variant::Q, &r, 256).unwrap();
        match density_estimate(&m, 2, 0.1, DensityMode::NearZero, None, 10.0) {
            Ok(e) => f.push((e.q, e.fraction)),
            Err(e) => return outcome(false, format!("a_1 = {a1}: {e}")),
        }
    }
    outcome(f[1].1 > f[0].1, format!("a_1=10: {:.4} of {}; a_1=10^4: {:.4} of {}", f[0].1, f[0].0, f[1].1, f[1].0))
}

fn c11_heights() -> Outcome {
    let mut profiles = vec![
        brjuno_profile(&preset("golden2", 25).unwrap(), 25, P).unwrap(),
        brjuno_profile(&preset("hiN:50", 25).unwrap(), 25, P).unwrap(),
    ];
    for r in streams().into_iter().take(50) {
        let k = r.declared_depth() - 1;
        profiles.push(brjuno_profile(&r, k, P).unwrap());
    }
    let mut exact = true;
    let mut worst_ratio = 0f64;
    for prof in &profiles {
        let n = prof.depth;
        let t = bisequence_from_profile(prof, 0.0, n).unwrap();
        let c = propagate_heights(prof, n, -2.0, 0.0, 0.0).unwrap();
        exact &= (0..=n).all(|j| c.lo[j] == *t.get(n, j) && c.hi[j] == *t.get(n, j));
        for m4 in [0.5, 1.0, 3.0] {
            let c = propagate_heights(prof, n, -2.0, m4, m4).unwrap();
            worst_ratio = worst_ratio.max(c.max_width() / m4);
        }
    }
    outcome(exact && worst_ratio <= 12.0, format!("{} profiles, M4=0 exact: {exact}, max width / M4 = {worst_ratio:.4}", profiles.len()))
}

fn main() {
    let mut failed = 0;
    let mut line = |n: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let dt = t0.elapsed();
        let in_time = dt <= budget;
        let ok = o.ok && in_time;
        if !ok {
            failed += 1;
        }
        let late = if in_time { String::new() } else { format!(" over the {}s budget", budget.as_secs()) };
        println!("criterion {n:>2} {}: {name}: {} [{:.2}s{late}]", if ok { "PASS" } else { "FAIL" }, o.detail, dt.as_secs_f64());
    };
    let s = Duration::from_secs;
    line(1, "bi-sequence recursion vs closed form", s(5), &mut c1_closed_form);
    line(2, "good-levels sandwich, B in {0,1,5}", s(5), &mut c2_sandwich);
    line(3, "q_n recurrence vs closest-return oracle", s(30), &mut c3_q_times);
    println!("   info: {}", mixed_sign_info());
    line(4, "golden2 return times and Brjuno partial", s(1), &mut c4_golden);
    line(5, "Q_alpha structure", s(1), &mut c5_structure);
    let (cache, key, _dir) = chart_json_cache();
    line(6, "Fatou chart for hiN:50", s(120), &mut || c6_chart(&cache, &key));
    line(7, "renormalization multiplier", s(120), &mut || c7_multiplier(&cache, &key));
    line(8, "Birkhoff averages for P, golden2", s(60), &mut c8_birkhoff);
    line(9, "small cycles of periods 5 and 12", s(60), &mut c9_cycles);
    line(10, "density proxy ordering", s(120), &mut c10_density);
    line(11, "interval height model", s(5), &mut c11_heights);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
