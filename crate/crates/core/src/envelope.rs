//! Two-sided transition-density envelopes and the regime partition of (t, x).

use crate::bernstein::PhiEvaluator;
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::E;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegimeTag {
    LeftTail,
    NearMode,
    Mixed,
    PureJump,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeTag::LeftTail => "LeftTail",
            RegimeTag::NearMode => "NearMode",
            RegimeTag::Mixed => "Mixed",
            RegimeTag::PureJump => "PureJump",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    /// x − t b(t)
    pub y: f64,
}

/// Comparison constants carried next to envelope values. The envelope values
/// themselves are computed with all constants equal to 1, except the exponent
/// constants which enter the shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSet {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// exponent constant of the lower right-tail envelope
    pub c4: f64,
    pub c5: f64,
    /// exponent constant of the upper right-tail envelope
    pub c_upper: f64,
}

impl Default for ConstantSet {
    fn default() -> Self {
        ConstantSet { c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0, c5: 1.0, c_upper: 0.125 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeResult {
    pub lower: f64,
    pub upper: f64,
    pub regime: Regime,
    pub constants: ConstantSet,
}

/// Regime of (t, x); ties go to the smaller index.
pub fn classify(e: &PhiEvaluator, t: f64, x: f64) -> Result<Regime> {
    if !(t > 0.0) || !(x > 0.0) {
        return Err(Error::Domain(format!("classify needs t, x > 0 (t={t}, x={x})")));
    }
    let sc = e.scales(t)?;
    let y = x - t * sc.b;
    let tag = if y <= 0.0 {
        RegimeTag::LeftTail
    } else if y < sc.s_hi {
        RegimeTag::NearMode
    } else if y > sc.d {
        RegimeTag::PureJump
    } else {
        RegimeTag::Mixed
    };
    Ok(Regime { tag, y })
}

fn check_left(e: &PhiEvaluator, t: f64, x: f64) -> Result<f64> {
    let tb = t * e.b_of(t)?;
    if !(x > 0.0) || x > tb * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("x={x} outside (0, tb(t)] = (0, {tb}]")));
    }
    Ok(tb)
}

/// (t(−φ″(σ)))^{−1/2} e^{−tH(σ)} for 0 < x ≤ t b(t).
pub fn left_tail(e: &PhiEvaluator, t: f64, x: f64) -> Result<EnvelopeResult> {
    check_left(e, t, x)?;
    let v = left_tail_log(e, t, x)?.exp();
    Ok(EnvelopeResult {
        lower: v,
        upper: v,
        regime: Regime { tag: RegimeTag::LeftTail, y: x - t * e.b_of(t)? },
        constants: ConstantSet::default(),
    })
}

/// Natural log of the left-tail envelope; finite where the value underflows.
pub fn left_tail_log(e: &PhiEvaluator, t: f64, x: f64) -> Result<f64> {
    let st = e.saddle(t, x)?;
    Ok(-0.5 * (t * st.neg_phi2).ln() - t * st.h_sigma)
}

/// H⁻¹(1/t) e^{−c tH(σ)} for 0 < x ≤ t b(t).
pub fn left_tail_simple(e: &PhiEvaluator, t: f64, x: f64, c: f64) -> Result<f64> {
    check_left(e, t, x)?;
    let st = e.saddle(t, x)?;
    Ok(e.scales(t)?.h_inv * (-c * t * st.h_sigma).exp())
}

fn check_small_time_range(e: &PhiEvaluator, y: f64) -> Result<()> {
    let meta = &e.model().meta;
    if !meta.flags.g && meta.r1.is_finite() && !meta.flags.s3_star && meta.flags.s && y >= meta.r1 / 2.0 {
        return Err(Error::Condition(format!(
            "y={y} ≥ R₁/2 = {} without (S-3*) for {}",
            meta.r1 / 2.0,
            e.model().name
        )));
    }
    Ok(())
}

/// H⁻¹(1/t) min{1, tν(y)/H⁻¹(1/t) + exp(−c y/θ(t, y/(8e²)))}.
pub fn right_tail(e: &PhiEvaluator, t: f64, y: f64, c: f64) -> Result<f64> {
    Ok(right_tail_log(e, t, y, c)?.exp())
}

/// Natural log of [`right_tail`].
pub fn right_tail_log(e: &PhiEvaluator, t: f64, y: f64, c: f64) -> Result<f64> {
    if !(y >= 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("right tail needs t > 0, y ≥ 0 (t={t}, y={y})")));
    }
    check_small_time_range(e, y)?;
    let hinv = e.scales(t)?.h_inv;
    if y == 0.0 {
        return Ok(hinv.ln());
    }
    let jump = t * e.model().nu(y) / hinv;
    let theta = e.theta_of(t, y / (8.0 * E * E))?.theta;
    let expo = (-c * y / theta).exp();
    Ok(hinv.ln() + (jump + expo).min(1.0).ln())
}

/// min{H⁻¹(1/t) e^{−c tH(σ)}, t ν((x − t b(t))₊)} with σ = 0 beyond tφ′(0).
pub fn pure_jump_min(e: &PhiEvaluator, t: f64, x: f64, c: f64) -> Result<f64> {
    let meta = &e.model().meta;
    if !(meta.flags.s_pure || meta.flags.l_pure) {
        return Err(Error::Condition(format!("{} has neither (S.Pure) nor (L.Pure)", e.model().name)));
    }
    if !(x > 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("t={t}, x={x} must be positive")));
    }
    let sc = e.scales(t)?;
    let y = x - t * sc.b;
    if !meta.flags.l_pure {
        check_small_time_range(e, x)?;
    }
    let h_sigma = if x < t * e.phi_prime_zero() { e.saddle(t, x)?.h_sigma } else { 0.0 };
    let first = sc.h_inv * (-c * t * h_sigma).exp();
    let second = if y > 0.0 { t * e.model().nu(y) } else { f64::INFINITY };
    Ok(first.min(second))
}

/// H⁻¹(1/t) min{1, tν(y)/H⁻¹(1/t) + exp(−c y/𝓗⁻¹(t/y))}, the large-time right tail
/// at position tφ′(0) + y.
pub fn mixed_form(e: &PhiEvaluator, t: f64, y: f64, c: f64) -> Result<f64> {
    let meta = &e.model().meta;
    if !meta.flags.l_mixed {
        return Err(Error::Condition(format!("{} lacks (L.Mixed)", e.model().name)));
    }
    if t < meta.t1() {
        return Err(Error::Domain(format!("t={t} below the large-time threshold T₁={}", meta.t1())));
    }
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("y={y} must be nonnegative")));
    }
    let hinv = e.scales(t)?.h_inv;
    if y == 0.0 {
        return Ok(hinv);
    }
    let jump = t * e.model().nu(y) / hinv;
    let r = e.script_h_inv(t / y)?;
    let expo = (-c * y / r).exp();
    Ok(hinv * (jump + expo).min(1.0))
}

/// Envelope at (t, x) in its regime, with unit multiplicative constants:
/// left tail below t b(t), right tail with exponents c₄ (lower) and c_upper
/// (upper) beyond it.
pub fn envelope(e: &PhiEvaluator, t: f64, x: f64, constants: ConstantSet) -> Result<EnvelopeResult> {
    let regime = classify(e, t, x)?;
    if regime.tag == RegimeTag::LeftTail {
        let v = left_tail_log(e, t, x)?.exp();
        return Ok(EnvelopeResult { lower: v, upper: v, regime, constants });
    }
    let lower = right_tail(e, t, regime.y, constants.c4)?;
    let upper = right_tail(e, t, regime.y, constants.c_upper)?;
    Ok(EnvelopeResult { lower: lower.min(upper), upper: upper.max(lower), regime, constants })
}


/// One grid point of a sandwich certification, all in natural logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichPoint {
    pub t: f64,
    pub x: f64,
    pub regime: Regime,
    pub ln_ref: f64,
    pub ref_method: crate::reference_density::Method,
    /// ln envelope for each candidate exponent; the left tail ignores the exponent.
    pub ln_env: [f64; EXPONENTS.len()],
    /// ln(t ν(y)) for y > 0
    pub ln_jump: f64,
}

/// Candidate right-tail exponents tried by [`fit_sandwich`].
pub const EXPONENTS: [f64; 6] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub model: String,
    pub points: Vec<SandwichPoint>,
    /// exponent giving the smallest spread
    pub exponent: f64,
    /// min and max of p_ref / envelope
    pub c_low: f64,
    pub c_high: f64,
    /// min and max of p_ref / (t ν(y)) over PureJump points
    pub jump_low: f64,
    pub jump_high: f64,
    pub counts: [usize; 4],
}

impl SandwichReport {
    pub fn spread(&self) -> f64 {
        self.c_high / self.c_low
    }

    /// Multi-line key/value report.
    pub fn render(&self) -> String {
        let mut s = String::from("{\n");
        s += &format!("  \"model\": \"{}\",\n", self.model);
        s += &format!("  \"points\": {},\n", self.points.len());
        s += &format!(
            "  \"regime_counts\": {{\"LeftTail\": {}, \"NearMode\": {}, \"Mixed\": {}, \"PureJump\": {}}},\n",
            self.counts[0], self.counts[1], self.counts[2], self.counts[3]
        );
        s += &format!("  \"exponent\": {},\n", self.exponent);
        s += &format!("  \"c_low\": {:.12e},\n  \"c_high\": {:.12e},\n", self.c_low, self.c_high);
        s += &format!("  \"spread\": {:.12e},\n", self.spread());
        s += &format!("  \"jump_ratio_low\": {:.12e},\n  \"jump_ratio_high\": {:.12e}\n}}\n", self.jump_low, self.jump_high);
        s
    }
}

fn regime_index(tag: RegimeTag) -> usize {
    match tag {
        RegimeTag::LeftTail => 0,
        RegimeTag::NearMode => 1,
        RegimeTag::Mixed => 2,
        RegimeTag::PureJump => 3,
    }
}

/// Evaluates the reference density and every candidate envelope at (t, x).
pub fn sandwich_point(
    e: &PhiEvaluator,
    t: f64,
    x: f64,
    reference: &(dyn Fn(&PhiEvaluator, f64, f64) -> Result<crate::reference_density::DensityEstimate> + Sync),
) -> Result<SandwichPoint> {
    let regime = classify(e, t, x)?;
    let d = reference(e, t, x)?;
    if !d.log_value.is_finite() {
        return Err(Error::Precision(format!("reference density vanished at t={t}, x={x}")));
    }
    let mut ln_env = [0.0; EXPONENTS.len()];
    if regime.tag == RegimeTag::LeftTail {
        ln_env = [left_tail_log(e, t, x)?; EXPONENTS.len()];
    } else {
        for (k, &c) in EXPONENTS.iter().enumerate() {
            ln_env[k] = right_tail_log(e, t, regime.y, c)?;
        }
    }
    let ln_jump = if regime.y > 0.0 { (t * e.model().nu(regime.y)).ln() } else { f64::INFINITY };
    Ok(SandwichPoint { t, x, regime, ln_ref: d.log_value, ref_method: d.method, ln_env, ln_jump })
}

/// Fits the right-tail exponent minimizing max/min of p_ref/envelope over the points.
pub fn fit_sandwich(model: &str, points: Vec<SandwichPoint>) -> Result<SandwichReport> {
    if points.is_empty() {
        return Err(Error::Domain("empty sandwich grid".into()));
    }
    let mut best = (f64::INFINITY, 0usize, 0.0, 0.0);
    for k in 0..EXPONENTS.len() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &points {
            let r = p.ln_ref - p.ln_env[k];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo < best.0 {
            best = (hi - lo, k, lo, hi);
        }
    }
    let (mut jl, mut jh) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut counts = [0usize; 4];
    for p in &points {
        counts[regime_index(p.regime.tag)] += 1;
        if p.regime.tag == RegimeTag::PureJump {
            let r = p.ln_ref - p.ln_jump;
            jl = jl.min(r);
            jh = jh.max(r);
        }
    }
    Ok(SandwichReport {
        model: model.to_string(),
        points,
        exponent: EXPONENTS[best.1],
        c_low: best.2.exp(),
        c_high: best.3.exp(),
        jump_low: jl.exp(),
        jump_high: jh.exp(),
        counts,
    })
}

/// Grid of x values at time t covering every nonempty regime: `per` points in each.
/// `y_max` caps the PureJump range (for instance R₁/2 under small-time conditions).
pub fn regime_grid(e: &PhiEvaluator, t: f64, per: usize, y_max: f64) -> Result<Vec<f64>> {
    let sc = e.scales(t)?;
    let tb = t * sc.b;
    let logspace = |a: f64, b: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![(a * b).sqrt()];
        }
        (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
    };
    let mut xs: Vec<f64> = logspace(0.1 * tb, tb, per);
    let near_hi = sc.s_hi.min(y_max);
    xs.extend(logspace(near_hi * 0.02, near_hi * 0.98, per).into_iter().map(|y| tb + y));
    if sc.d > sc.s_hi * 1.02 && sc.s_hi * 1.01 < y_max {
        let hi = (sc.d * 0.99).min(y_max * 0.99);
        xs.extend(logspace(sc.s_hi * 1.01, hi, per).into_iter().map(|y| tb + y));
    }
    if sc.d * 1.02 < y_max {
        xs.extend(logspace(sc.d * 1.02, y_max, per).into_iter().map(|y| tb + y));
    }
    Ok(xs)
}

/// A grid point the reference density could not be computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub t: f64,
    pub x: f64,
    pub error: Error,
}

/// Builds the regime grid at each time (PureJump capped at `y_max(t, D(t))`),
/// evaluates the reference density in parallel and fits the sandwich.
pub fn certify(
    e: &PhiEvaluator,
    times: &[f64],
    per: usize,
    y_max: &dyn Fn(f64, f64) -> f64,
    reference: &(dyn Fn(&PhiEvaluator, f64, f64) -> Result<crate::reference_density::DensityEstimate> + Sync),
) -> Result<(SandwichReport, Vec<SkippedPoint>)> {
    let mut grid = Vec::new();
    for &t in times {
        let d = e.d_of(t)?;
        for x in regime_grid(e, t, per, y_max(t, d))? {
            grid.push((t, x));
        }
    }
    let results: Vec<_> = grid.par_iter().map(|&(t, x)| (t, x, sandwich_point(e, t, x, reference))).collect();
    let mut points = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (t, x, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(error) => skipped.push(SkippedPoint { t, x, error }),
        }
    }
    Ok((fit_sandwich(&e.model().name, points)?, skipped))
}

/// max/min over the points left of tφ′(0) of p_ref divided by the leading
/// saddle-point term e^{−tH(σ)}/√(2πt|φ″(σ)|); 1 when that term is exact.
pub fn saddle_spread(e: &PhiEvaluator, points: &[SandwichPoint]) -> Result<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        if p.x >= p.t * e.phi_prime_zero() {
            continue;
        }
        let lead = left_tail_log(e, p.t, p.x)? - 0.5 * (2.0 * std::f64::consts::PI).ln();
        lo = lo.min(p.ln_ref - lead);
        hi = hi.max(p.ln_ref - lead);
    }
    if lo > hi {
        return Err(Error::Domain("no grid point left of tφ′(0)".into()));
    }
    Ok((hi - lo).exp())
}
