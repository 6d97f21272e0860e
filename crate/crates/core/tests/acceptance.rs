//! Acceptance suite: one PASS/FAIL line per criterion, with timing.
//!
//! Exit status is nonzero when any criterion fails, except for the literal
//! lower bound 1/φ⁻¹(1/t) ≤ t b(t) inside criterion 5, which is false as
//! stated (stable(1/2) gives t b(t) = t²/4 against t²). That sub-check is still
//! evaluated and reported as FAIL; see README.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use subordinator::asymptotics::{geo_asymp, limit_ratio, INV_SQRT_2PI};
use subordinator::bernstein::PhiEvaluator;
use subordinator::conditions;
use subordinator::envelope::{certify, saddle_spread};
use subordinator::examples_catalog::{
    catalog, even_window_dominance, scale_function_bands, inverse_bands, scale_constants, window_envelope, LogReal, OscFn,
    OscillatingSpec, Parity,
};
use subordinator::inequalities::{log_grid, suite};
use subordinator::reference_density::{
    density_fourier, density_saddle, empirical_density, gamma_cdf, gamma_log_density, geo_stable_log_density,
    ks_distance, reference_density, sample_paths, stable_half_log_density,
};
use subordinator::LevyModel;

/// Sub-check known to be false as printed; reported but not fatal.
const KNOWN_DEFECT: &str = "tb over phi inverse, lower";

struct Outcome {
    pass: bool,
    /// a failure that does not affect the exit status
    tolerated: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, tolerated: false, lines: vec![] }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "BAD " }));
    }

    fn info(&mut self, line: String) {
        self.lines.push(format!("info {line}"));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    log_grid(lo, hi, n)
}

fn c1() -> Outcome {
    let mut o = Outcome::new();
    let e = PhiEvaluator::new(LevyModel::stable(0.5).unwrap());
    let (mut worst_raw, mut worst_p) = (0.0f64, 0.0f64);
    let mut n = 0;
    for &t in &[0.5, 1.0, 2.0, 4.0] {
        for x in logspace(1e-2 * t * t, 1e2 * t * t, 12) {
            match density_saddle(&e, t, x) {
                Ok(d) => {
                    let raw = d.raw_integral.unwrap_or(f64::NAN);
                    worst_raw = worst_raw.max(rel(raw, (2.0 * PI).sqrt()));
                    worst_p = worst_p.max(rel(d.value, stable_half_log_density(t, x).exp()));
                    n += 1;
                }
                Err(err) => o.check(false, format!("t={t} x={x:e}: {err}")),
            }
        }
    }
    o.check(worst_raw < 1e-6, format!("{n} points, max rel error of Mellin integral vs sqrt(2 pi) = {worst_raw:.2e}"));
    o.check(worst_p < 1e-6, format!("max rel error of p_saddle vs closed form = {worst_p:.2e}"));
    o
}

fn c2() -> Outcome {
    let mut o = Outcome::new();
    let e = PhiEvaluator::new(LevyModel::gamma().unwrap());
    for &t in &[2.0, 5.0] {
        let (mut wf, mut ws) = (0.0f64, 0.0f64);
        for x in logspace(0.05, 20.0, 20) {
            let c = gamma_log_density(t, x).exp();
            match (density_fourier(&e, t, x), density_saddle(&e, t, x)) {
                (Ok(f), Ok(s)) => {
                    wf = wf.max(rel(f.value, c));
                    ws = ws.max(rel(s.value, c));
                }
                (f, s) => o.check(false, format!("t={t} x={x:e}: fourier {:?} saddle {:?}", f.err(), s.err())),
            }
        }
        o.check(wf < 1e-5 && ws < 1e-5, format!("t={t}: max rel error fourier {wf:.2e}, saddle {ws:.2e} (20 x in [0.05, 20])"));
    }
    let mut worst = 0.0f64;
    for x in logspace(0.05, 20.0, 12) {
        match limit_ratio(&e, 50.0, x) {
            Ok(r) => worst = worst.max(rel(r, INV_SQRT_2PI)),
            Err(err) => o.check(false, format!("t=50 x={x}: {err}")),
        }
    }
    o.check(worst < 5e-3, format!("t=50: max |ratio/(2 pi)^(-1/2) - 1| over x in [0.05, 20] = {worst:.2e}"));
    o
}

fn c3() -> Outcome {
    let mut o = Outcome::new();
    let e = PhiEvaluator::new(LevyModel::geometric_stable(0.7).unwrap());
    let mut worst = 0.0f64;
    for x in logspace(0.1, 5.0, 15) {
        match (geo_stable_log_density(0.7, 3.0, x), density_fourier(&e, 3.0, x)) {
            (Ok(s), Ok(f)) => worst = worst.max(rel(f.value, s.exp())),
            (s, f) => o.check(false, format!("x={x}: series {:?} fourier {:?}", s.err(), f.err())),
        }
    }
    o.check(worst < 1e-4, format!("alpha=0.7 t=3: max rel gap series vs fourier = {worst:.2e}"));
    let mut w1 = 0.0f64;
    for &(t, x) in &[(5.0, 1.0), (30.0, 0.5), (200.0, 3.0)] {
        w1 = w1.max((geo_asymp(t, x, 1.0, 0).unwrap_or(f64::NAN) - 1.0).abs());
    }
    o.check(w1 < 1e-10, format!("alpha=1, k=0: max |expr - 1| = {w1:.2e}"));
    for &(a, k) in &[(0.75, 1u8), (0.4, 2)] {
        let gaps: Vec<f64> =
            [50.0, 100.0, 200.0].iter().map(|&t| (geo_asymp(t, 1.0, a, k).unwrap_or(f64::NAN) - 1.0).abs()).collect();
        let ok = gaps[1] < gaps[0] && gaps[2] < gaps[1];
        o.check(ok, format!("alpha={a} k={k} x=1: |expr-1| at t=50,100,200 = {:.3e}, {:.3e}, {:.3e}", gaps[0], gaps[1], gaps[2]));
    }
    o
}

struct SandwichPlan {
    model: LevyModel,
    times: &'static [f64],
    /// PureJump cap as a function of (t, D(t))
    y_max: fn(f64, f64) -> f64,
}

fn c4() -> Outcome {
    let mut o = Outcome::new();
    let plans = vec![
        SandwichPlan { model: LevyModel::stable(0.5).unwrap(), times: &[0.1, 1.0, 5.0, 25.0], y_max: |_, d| 100.0 * d },
        SandwichPlan { model: LevyModel::stable(0.8).unwrap(), times: &[0.1, 1.0, 5.0, 25.0], y_max: |_, d| 100.0 * d },
        // ν(y) = e^{−y}/y decays faster than p(t, tb + y), so the PureJump
        // stretch stays within a few multiples of D
        SandwichPlan { model: LevyModel::gamma().unwrap(), times: &[1.5, 2.0, 4.0, 6.0], y_max: |_, d| (2.0 * d).max(0.5) },
        SandwichPlan {
            model: LevyModel::geometric_stable(0.7).unwrap(),
            times: &[4.0, 8.0, 16.0, 32.0],
            y_max: |_, d| 100.0 * d,
        },
        SandwichPlan {
            model: LevyModel::log_perturbed(0.5, 1.0, 3.0, 0.0).unwrap(),
            times: &[0.25, 0.5, 1.0, 2.0],
            y_max: |_, d| 20.0 * d,
        },
    ];
    for plan in plans {
        let name = plan.model.name.clone();
        let e = PhiEvaluator::new(plan.model);
        let start = Instant::now();
        let (rep, skipped) = match certify(&e, plan.times, 18, &plan.y_max, &reference_density) {
            Ok(r) => r,
            Err(err) => {
                o.check(false, format!("{name}: {err}"));
                continue;
            }
        };
        // Mixed is y ∈ [H⁻¹(1/t)⁻¹, D(t)], empty when s ↦ s H(1/s) peaks at the right end
        let mixed_exists = plan.times.iter().any(|&t| e.scales(t).map(|sc| sc.d > 1.02 * sc.s_hi).unwrap_or(true));
        let all_regimes = rep.counts.iter().enumerate().all(|(i, &c)| c > 0 || (i == 2 && !mixed_exists));
        if !mixed_exists {
            o.info(format!("{name}: D(t) = H^-1(1/t)^-1 at every planned t, so the Mixed regime is empty"));
        }
        let ok = rep.points.len() >= 200
            && all_regimes
            && rep.spread() < 100.0
            && rep.jump_low >= 1.0 / 20.0
            && rep.jump_high <= 20.0;
        o.check(
            ok,
            format!(
                "{name}: {} points (LeftTail {}, NearMode {}, Mixed {}, PureJump {}), skipped {}, spread {:.2}, p/(t nu) in [{:.3}, {:.3}] ({:.0?})",
                rep.points.len(),
                rep.counts[0],
                rep.counts[1],
                rep.counts[2],
                rep.counts[3],
                skipped.len(),
                rep.spread(),
                rep.jump_low,
                rep.jump_high,
                start.elapsed()
            ),
        );
        if let Ok(s) = saddle_spread(&e, &rep.points) {
            o.info(format!("{name}: saddle leading-term spread {s:.3}"));
        }
    }
    o
}

fn c5() -> Outcome {
    let mut o = Outcome::new();
    let lambdas = log_grid(1e-3, 1e3, 64);
    let times = log_grid(1e-2, 1e2, 64);
    let mut defect_only = true;
    for m in catalog().unwrap() {
        let name = m.name.clone();
        let e = PhiEvaluator::new(m);
        for c in suite(&e, &lambdas, &times) {
            let ok = c.violations == 0 && c.points > 0;
            if !ok && c.name != KNOWN_DEFECT {
                defect_only = false;
            }
            if !ok || c.skipped > 0 {
                o.check(
                    ok,
                    format!(
                        "{name} {}: {} points, {} violations, {} skipped, worst margin {:.3e} at {:.3e}",
                        c.name, c.points, c.violations, c.skipped, c.worst_margin, c.worst_at
                    ),
                );
            }
        }
    }
    if !o.pass && defect_only {
        o.tolerated = true;
        o.info(format!("only '{KNOWN_DEFECT}' fails; every other check holds with zero violations"));
    }
    o
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    let mut models = catalog().unwrap();
    // the oscillating model's conditions are global statements the finite
    // window cannot see; it is handled by criterion 8
    models.retain(|m| m.name != "oscillating");
    for m in models {
        match conditions::classify(&m) {
            Ok(rep) => {
                let bad = rep.mismatches(&m.meta.flags);
                o.check(bad.is_empty(), format!("{}: mismatched flags {:?}", m.name, bad));
            }
            Err(err) => o.check(false, format!("{}: {err}", m.name)),
        }
    }
    let geo = LevyModel::geometric_stable(0.7).unwrap();
    let s = conditions::classify(&geo).map(|r| r.flags.s).unwrap_or(true);
    o.check(!s, "geometric_stable(0.7): (S) reported false".into());
    o
}

fn c7() -> Outcome {
    let mut o = Outcome::new();
    let g = PhiEvaluator::new(LevyModel::gamma().unwrap());
    match sample_paths(&g, 2.0, 100_000, 1e-4, 0) {
        Ok(s) => {
            let ks = ks_distance(&s, |x| gamma_cdf(2.0, x));
            o.check(ks < 0.01, format!("gamma t=2 n=1e5 seed 0: KS distance {ks:.4}"));
        }
        Err(err) => o.check(false, format!("gamma sampling: {err}")),
    }
    let st = PhiEvaluator::new(LevyModel::stable(0.5).unwrap());
    match sample_paths(&st, 1.0, 100_000, 1e-4, 0) {
        Ok(s) => {
            for &x in &[0.5, 1.0, 2.0] {
                let exact = stable_half_log_density(1.0, x).exp();
                match empirical_density(&s, x, 0.05 * x) {
                    Ok(d) => {
                        let z = (d.value - exact) / d.err;
                        o.check(z.abs() < 3.0, format!("stable(1/2) t=1 x={x}: {:.5} vs {exact:.5}, z = {z:.2}", d.value));
                    }
                    Err(err) => o.check(false, format!("x={x}: {err}")),
                }
            }
        }
        Err(err) => o.check(false, format!("stable sampling: {err}")),
    }
    o
}

fn c8() -> Outcome {
    let mut o = Outcome::new();
    let spec = OscillatingSpec::new();
    match even_window_dominance(&spec, 17, 17, 1.0) {
        Ok(d) => o.check(
            d.violations == 0,
            format!("even window t in [t2/2, t2]: {} points, {} violations, min log margin {:.2}", d.points, d.violations, d.min_log_margin),
        ),
        Err(err) => o.check(false, format!("dominance: {err}")),
    }
    match inverse_bands(&spec, 17) {
        Ok((phi, psi)) => {
            o.check(phi.within(20.0), format!("Phi^-1(t)/(t ln t)^(1/2) in [{:.3}, {:.3}]", phi.min, phi.max));
            o.check(psi.within(20.0), format!("psi^-1(t)/t^(1/4) in [{:.3}, {:.3}]", psi.min, psi.max));
        }
        Err(err) => o.check(false, format!("inverse bands: {err}")),
    }
    let mut odd_ok = true;
    let mut n = 0;
    if let (Ok(t3), Ok(a3)) = (spec.t_window(3), spec.a(3)) {
        for t in [t3.scale(0.5), t3.scale(0.75), t3] {
            for p in [0.5, 0.9, 1.0, 1.1, 2.0] {
                match window_envelope(&spec, t, a3.powf(p), Parity::Odd, 1.0) {
                    Ok(w) => {
                        odd_ok &= w.value.ln().is_finite() && w.value <= w.cap;
                        n += 1;
                    }
                    Err(_) => odd_ok = false,
                }
            }
        }
        o.check(odd_ok && n == 15, format!("odd window [t3/2, t3] with ln t3 = {:.4e}: {n} finite log-domain envelopes", t3.ln()));
    } else {
        o.check(false, "t3 or a3 unavailable".into());
    }
    // regime switching is the point of the construction: below the even window
    // the jump summand leads, well beyond it the cap binds
    if let (Ok(t2), Ok(a2)) = (spec.t_window(2), spec.a(2)) {
        let w = window_envelope(&spec, t2, a2.scale(0.5), Parity::Even, 1.0);
        o.info(format!("even window at y = a2/2: dominant term {}", w.map(|w| w.dominant()).unwrap_or("error")));
    }
    let rs = logspace(1e-3, 1e3, 25);
    if let Ok((h, w)) = scale_function_bands(&rs) {
        o.info(format!("H(1/r)Phi(r) in [{:.3}, {:.3}]; w(r)psi(r) in [{:.3}, {:.3}]", h.min, h.max, w.min, w.max));
    }
    let grid: Vec<LogReal> = (0..120).map(|i| LogReal::from_ln(-5.0 + i as f64 * 25.0)).collect();
    let (sp, sf) = (scale_constants(&spec, &grid, OscFn::Psi), scale_constants(&spec, &grid, OscFn::Phi));
    o.info(format!("psi scaling constants [{:.3e}, {:.3e}], Phi [{:.3e}, {:.3e}]", sp.lower, sp.upper, sf.lower, sf.upper));
    o
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 stable(1/2) saddle exactness", c1, Duration::from_secs(10)),
        ("2 gamma cross-check and t=50 limit", c2, Duration::from_secs(30)),
        ("3 geometric stable series and asymptotics", c3, Duration::from_secs(60)),
        ("4 envelope sandwich", c4, Duration::from_secs(300)),
        ("5 inequality suite", c5, Duration::from_secs(30)),
        ("6 conditions classifier", c6, Duration::from_secs(10)),
        ("7 Monte Carlo consistency", c7, Duration::from_secs(60)),
        ("8 oscillating example at n=1", c8, Duration::from_secs(10)),
    ];
    let mut fatal = 0;
    let total = Instant::now();
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < budget;
        o.lines.push(format!("{} runtime {elapsed:.1?} (budget {budget:?})", if in_time { "ok  " } else { "BAD " }));
        let pass = o.pass && in_time;
        println!("{} criterion {name} [{:.1?}]", if pass { "PASS" } else { "FAIL" }, elapsed);
        for l in &o.lines {
            println!("    {l}");
        }
        if !pass && !(o.tolerated && in_time) {
            fatal += 1;
        }
    }
    println!("acceptance finished in {:.1?}; {fatal} unexpected failure(s)", total.elapsed());
    if fatal > 0 {
        std::process::exit(1);
    }
}
