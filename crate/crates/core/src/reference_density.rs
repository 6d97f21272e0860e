//! Transition densities p(t,x) computed independently of the envelopes:
//! Fourier inversion, saddle-point (Fourier–Mellin) inversion, closed forms and
//! series, and Monte Carlo.

use crate::bernstein::{PhiEvaluator, SaddleState};
use crate::error::{Error, Result};
use crate::levy_model::{Family, LevyModel};
use crate::quad::{self, Direction, Tol};
use crate::special::{ln_gamma, CompensatedSum, MonotoneCubic};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fourier,
    Saddle,
    ClosedForm,
    Series,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Fourier => "fourier",
            Method::Saddle => "saddle",
            Method::ClosedForm => "closed_form",
            Method::Series => "series",
            Method::MonteCarlo => "monte_carlo",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(Method::Fourier),
            "saddle" => Ok(Method::Saddle),
            "closed_form" | "closed" => Ok(Method::ClosedForm),
            "series" => Ok(Method::Series),
            "monte_carlo" | "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::Config(format!("unknown density method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
    pub method: Method,
    /// Estimated absolute error.
    pub err: f64,
    /// ln p, available even when p underflows.
    pub log_value: f64,
    /// Raw Mellin integral ∫ e^{−tM} du (saddle method only).
    pub raw_integral: Option<f64>,
}

impl DensityEstimate {
    fn new(value: f64, method: Method, err: f64) -> Self {
        let value = value.max(0.0);
        DensityEstimate { value, method, err: err.abs(), log_value: value.ln(), raw_integral: None }
    }
}

fn check_time(e: &PhiEvaluator, t: f64) -> Result<()> {
    let t0 = e.model().meta.t0;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t={t} must be positive")));
    }
    if !(t > t0) {
        return Err(Error::Domain(format!("t={t} ≤ T₀={t0}: density not guaranteed to exist")));
    }
    Ok(())
}

/// p(t,x) = (1/π) ∫₀^∞ Re[e^{−iξx − tφ(−iξ)}] dξ, integrated over half periods π/x
/// with Wynn acceleration when the integrand decays slowly.
pub fn density_fourier(e: &PhiEvaluator, t: f64, x: f64) -> Result<DensityEstimate> {
    check_time(e, t)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x={x} must be positive")));
    }
    let f = |xi: f64| -> f64 {
        if xi == 0.0 {
            return 1.0;
        }
        match e.phi_complex(Complex64::new(0.0, -xi)) {
            Ok(ph) => {
                let ex = -t * ph.re;
                if ex < -745.0 {
                    return 0.0;
                }
                ex.exp() * (-xi * x - t * ph.im).cos()
            }
            Err(_) => f64::NAN,
        }
    };
    let r = quad::oscillatory(&f, 0.0, PI / x, 1e-11, 1e-17, 200_000)?;
    if !r.value.is_finite() {
        return Err(Error::Quadrature(format!("Fourier integrand failed at t={t}, x={x}")));
    }
    Ok(DensityEstimate::new(r.value / PI, Method::Fourier, r.err / PI))
}

/// M = φ(σ+iv) − φ(σ) − ivφ′(σ) with v = u/√(t(−φ″(σ))).
pub struct MellinIntegrand<'a> {
    e: &'a PhiEvaluator,
    pub t: f64,
    pub sigma: f64,
    pub scale: f64,
    phi_s: f64,
    phi1: f64,
    phi2: f64,
    phi3: f64,
}

impl<'a> MellinIntegrand<'a> {
    pub fn new(e: &'a PhiEvaluator, st: &SaddleState) -> Result<Self> {
        Ok(MellinIntegrand {
            e,
            t: st.t,
            sigma: st.sigma,
            scale: st.scale(),
            phi_s: e.phi_deriv(st.sigma, 0)?,
            phi1: e.phi_deriv(st.sigma, 1)?,
            phi2: e.phi_deriv(st.sigma, 2)?,
            phi3: e.phi_deriv(st.sigma, 3)?,
        })
    }

    /// M at u (not multiplied by t).
    pub fn m(&self, u: f64) -> Result<Complex64> {
        let v = u / self.scale;
        let i = Complex64::new(0.0, 1.0);
        if (v / self.sigma).abs() < 1e-4 {
            // −φ″v²/2 − iφ‴v³/6; the next term is relatively O((v/σ)²).
            return Ok(Complex64::new(-self.phi2 * v * v / 2.0, -self.phi3 * v * v * v / 6.0));
        }
        let z = Complex64::new(self.sigma, v);
        if self.e.model().phi_complex_closed(z).is_some() || (v / self.sigma).abs() > 50.0 {
            let ph = self.e.phi_complex(z)?;
            return Ok(ph - self.phi_s - i * v * self.phi1);
        }
        // ∫ e^{−σs}(1 − e^{−ivs} − ivs) ν(s) ds, free of cancellation.
        let m = self.e.model();
        let sigma = self.sigma;
        let f = |s: f64| -> Complex64 {
            let w = Complex64::new(0.0, -v * s);
            -cexp_m1_minus(w) * ((-sigma * s).exp() * m.nu(s))
        };
        let s0 = 1.0 / z.norm();
        let near = quad::log_march(&f, s0, 0.0, Direction::TowardZero, m.breaks(), 1e-12, 0.0);
        let far = quad::log_march(&f, s0, f64::INFINITY, Direction::TowardInfinity, m.breaks(), 1e-12, 0.0);
        Ok(near.value + far.value)
    }

    /// Re e^{−tM(u)}, zero once Re tM > 40.
    pub fn integrand(&self, u: f64) -> f64 {
        match self.m(u) {
            Ok(mm) => {
                let tm = mm * self.t;
                if tm.re > 40.0 {
                    0.0
                } else {
                    (-tm.re).exp() * tm.im.cos()
                }
            }
            Err(_) => f64::NAN,
        }
    }
}

/// e^w − 1 − w without cancellation.
fn cexp_m1_minus(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = w * w / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.norm() > 1e-17 * sum.norm() {
            k += 1.0;
            term = term * w / k;
            sum += term;
        }
        sum
    } else {
        w.exp() - 1.0 - w
    }
}

/// Saddle-point inversion along the vertical line through σ = (φ′)⁻¹(x/t):
/// p = e^{−tH(σ)} / (2π√(t(−φ″(σ)))) · ∫ e^{−tM(t,σ,u)} du.
pub fn density_saddle(e: &PhiEvaluator, t: f64, x: f64) -> Result<DensityEstimate> {
    check_time(e, t)?;
    let t0 = e.model().meta.t0;
    if t0 > 0.0 && t < t0 + 0.5 {
        return Err(Error::Domain(format!(
            "saddle inversion needs t ≥ T₀ + 1/2 for integrable tails (t={t}, T₀={t0})"
        )));
    }
    let st = e.saddle(t, x)?;
    let mi = MellinIntegrand::new(e, &st)?;
    let f = |u: f64| mi.integrand(u);
    let u0 = 8.0;
    let head = quad::adaptive(&f, 0.0, u0, Tol { abs: 1e-15, rel: 1e-13, max_panels: 400 });
    let mut half = head.value;
    let mut err = head.err;
    if f(u0) != 0.0 || f(u0 * 1.5) != 0.0 {
        let omega = x / mi.scale;
        let h = (PI / omega).min(u0);
        let tail = quad::oscillatory(&f, u0, h, 1e-12, 1e-15, 200_000)?;
        half += tail.value;
        err += tail.err;
    }
    let raw = 2.0 * half;
    if !raw.is_finite() || raw <= 0.0 {
        return Err(Error::Quadrature(format!("Mellin integral {raw} at t={t}, x={x}")));
    }
    let log_pref = -t * st.h_sigma - (2.0 * PI * mi.scale).ln();
    let log_value = log_pref + raw.ln();
    let value = log_value.exp();
    Ok(DensityEstimate {
        value,
        method: Method::Saddle,
        err: 2.0 * err * log_pref.exp(),
        log_value,
        raw_integral: Some(raw),
    })
}

/// Closed forms: gamma, stable(1/2) and the geometric stable series.
pub fn density_closed(e: &PhiEvaluator, t: f64, x: f64) -> Result<DensityEstimate> {
    if !(x > 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("t={t}, x={x} must be positive")));
    }
    match &e.model().family {
        Family::Gamma => Ok(closed_from_log(gamma_log_density(t, x), Method::ClosedForm)),
        Family::GeometricStable { alpha } if *alpha == 1.0 => {
            Ok(closed_from_log(gamma_log_density(t, x), Method::ClosedForm))
        }
        Family::Stable { alpha } if *alpha == 0.5 => Ok(closed_from_log(stable_half_log_density(t, x), Method::ClosedForm)),
        Family::GeometricStable { alpha } => {
            let lv = geo_stable_log_density(*alpha, t, x)?;
            Ok(closed_from_log(lv, Method::Series))
        }
        _ => Err(Error::Unsupported(format!("no closed-form density for {}", e.model().name))),
    }
}

fn closed_from_log(lv: f64, method: Method) -> DensityEstimate {
    let v = lv.exp();
    DensityEstimate { value: v, method, err: 1e-14 * v, log_value: lv, raw_integral: None }
}

/// ln of x^{t−1}e^{−x}/Γ(t).
pub fn gamma_log_density(t: f64, x: f64) -> f64 {
    (t - 1.0) * x.ln() - x - ln_gamma(t)
}

/// ln of t x^{−3/2} e^{−t²/(4x)}/(2√π).
pub fn stable_half_log_density(t: f64, x: f64) -> f64 {
    t.ln() - 1.5 * x.ln() - t * t / (4.0 * x) - (2.0 * PI.sqrt()).ln()
}

/// ln p(t,x) for φ = ln(1+λ^α) from
/// p = x^{αt−1}/Γ(t) Σ (−1)ⁿ Γ(t+n) x^{αn} / (n! Γ(αt+αn)).
/// Fails when the alternating terms exceed 1e7 times the result.
pub fn geo_stable_log_density(alpha: f64, t: f64, x: f64) -> Result<f64> {
    let lx = x.ln();
    let mut sum = CompensatedSum::new();
    let mut max_log = f64::NEG_INFINITY;
    // terms are accumulated relative to the first one to avoid overflow
    let log_term = |n: f64| ln_gamma(t + n) + alpha * n * lx - ln_gamma(n + 1.0) - ln_gamma(alpha * (t + n));
    let l0 = log_term(0.0);
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for n in 0..100_000 {
        let nf = n as f64;
        let lt = log_term(nf);
        max_log = max_log.max(lt);
        let mag = (lt - l0).exp();
        if !mag.is_finite() {
            return Err(Error::Precision(format!("series terms overflow at x={x}, t={t}")));
        }
        sum.add(if n % 2 == 0 { mag } else { -mag });
        let s = sum.value();
        if n > 2 && mag < prev && mag < 1e-16 * s.abs() {
            converged = true;
            break;
        }
        prev = mag;
    }
    let s = sum.value();
    if !converged || !(s > 0.0) || max_log - l0 > (1e7 * s).ln() {
        return Err(Error::Precision(format!(
            "alternating series cancellation at x={x}, t={t} (largest term e^{:.1} vs sum {s:.3e})",
            max_log - l0
        )));
    }
    Ok((alpha * t - 1.0) * lx - ln_gamma(t) + l0 + s.ln())
}

/// Best available independent reference: closed form, then saddle, then Fourier.
pub fn reference_density(e: &PhiEvaluator, t: f64, x: f64) -> Result<DensityEstimate> {
    if let Ok(d) = density_closed(e, t, x) {
        return Ok(d);
    }
    if x < t * e.phi_prime_zero() {
        if let Ok(d) = density_saddle(e, t, x) {
            return Ok(d);
        }
    }
    density_fourier(e, t, x)
}

pub fn density_by(e: &PhiEvaluator, method: Method, t: f64, x: f64) -> Result<DensityEstimate> {
    match method {
        Method::Fourier => density_fourier(e, t, x),
        Method::Saddle => density_saddle(e, t, x),
        Method::ClosedForm | Method::Series => density_closed(e, t, x),
        Method::MonteCarlo => Err(Error::Unsupported("Monte Carlo densities come from sample sets".into())),
    }
}

/// Inverse-CDF sampler for jumps larger than ε: P(J > r) = w(r)/w(ε).
pub struct JumpSampler {
    pub eps: f64,
    pub rate: f64,
    /// ln w → ln r, with ln w decreasing in r; stored negated so it increases.
    table: MonotoneCubic,
    neg_lw_min: f64,
    neg_lw_max: f64,
    tail_slope: f64,
    lr_last: f64,
    support_end: f64,
}

pub const SAMPLER_KNOTS: usize = 4096;

impl JumpSampler {
    pub fn new(e: &PhiEvaluator, eps: f64) -> Result<Self> {
        let w_eps = e.tail(eps)?;
        if !(w_eps > 0.0) || !w_eps.is_finite() {
            return Err(Error::Domain(format!("w(ε)={w_eps} at ε={eps}")));
        }
        let (_, sup_end) = e.model().support();
        let r_max = e.invert(crate::bernstein::Inverse::W, w_eps * 1e-14).unwrap_or(sup_end.min(1e300));
        let (la, lb) = (eps.ln(), r_max.ln());
        let mut xs = Vec::with_capacity(SAMPLER_KNOTS);
        let mut ys = Vec::with_capacity(SAMPLER_KNOTS);
        for i in 0..SAMPLER_KNOTS {
            let lr = la + (lb - la) * i as f64 / (SAMPLER_KNOTS - 1) as f64;
            let w = e.tail(lr.exp())?;
            if !(w > 0.0) {
                break;
            }
            let nl = -w.ln();
            if let Some(&last) = xs.last() {
                if nl <= last {
                    continue;
                }
            }
            xs.push(nl);
            ys.push(lr);
        }
        if xs.len() < 2 {
            return Err(Error::Domain("jump table degenerate".into()));
        }
        let n = xs.len();
        let tail_slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        Ok(JumpSampler {
            eps,
            rate: w_eps,
            neg_lw_min: xs[0],
            neg_lw_max: xs[n - 1],
            tail_slope,
            lr_last: ys[n - 1],
            table: MonotoneCubic::new(xs, ys),
            support_end: sup_end,
        })
    }

    /// Jump size for a uniform variate in (0, 1].
    pub fn jump(&self, u: f64) -> f64 {
        let nl = -(u.ln() - self.neg_lw_min);
        let nl = nl.max(self.neg_lw_min);
        let r = if nl <= self.neg_lw_max {
            self.table.eval(nl).exp()
        } else {
            (self.lr_last + self.tail_slope * (nl - self.neg_lw_max)).exp()
        };
        r.min(self.support_end).max(self.eps)
    }
}

/// Draws n samples of S_t: Poisson(t w(ε)) jumps above ε plus the mean
/// t∫₀^ε sν(s)ds of the small jumps. Reproducible for a given seed.
pub fn sample_paths(e: &PhiEvaluator, t: f64, n: usize, eps: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let sampler = JumpSampler::new(e, eps)?;
    if !(sampler.rate < 1e7 / n as f64) {
        return Err(Error::Budget(format!(
            "w(ε)={:.3e} exceeds the event budget 1e7/n={:.3e}",
            sampler.rate,
            1e7 / n as f64
        )));
    }
    let comp = t * small_mean(e.model(), eps)?;
    let poisson = Poisson::new(t * sampler.rate).map_err(|err| Error::Parameter(format!("Poisson rate: {err}")))?;
    const CHUNK: usize = 4096;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| {
                    let k = poisson.sample(&mut rng) as u64;
                    let mut s = comp;
                    for _ in 0..k {
                        let u: f64 = 1.0 - rng.gen::<f64>();
                        s += sampler.jump(u);
                    }
                    s
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// ∫₀^ε s ν(s) ds.
pub fn small_mean(m: &LevyModel, eps: f64) -> Result<f64> {
    if let Some(v) = m.small_moment(1.0, eps) {
        return Ok(v);
    }
    let q = quad::log_march(&|s: f64| s * m.nu(s), eps, 0.0, Direction::TowardZero, m.breaks(), 1e-10, 0.0);
    if !q.value.is_finite() || q.err > 1e-6 * q.value.abs().max(1e-300) {
        return Err(Error::Quadrature(format!("small-jump mean at ε={eps}")));
    }
    Ok(q.value)
}

/// Triangular-kernel density estimate with its asymptotic standard error.
pub fn empirical_density(samples: &[f64], x: f64, bandwidth: f64) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::Config("empty sample set".into()));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth {bandwidth} must be positive")));
    }
    let n = samples.len() as f64;
    let s: f64 = samples
        .iter()
        .map(|&xi| {
            let u = ((x - xi) / bandwidth).abs();
            if u < 1.0 {
                1.0 - u
            } else {
                0.0
            }
        })
        .sum();
    let f = s / (n * bandwidth);
    let err = (f * (2.0 / 3.0) / (n * bandwidth)).sqrt();
    Ok(DensityEstimate::new(f, Method::MonteCarlo, err))
}

/// sup |F_n − F| for the empirical CDF of `samples`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// P(S_t ≤ x) for the gamma subordinator at integer or real t.
pub fn gamma_cdf(t: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_lr(t, x)
}

/// Writes samples as one decimal per line.
pub fn format_samples(samples: &[f64]) -> String {
    let mut s = String::with_capacity(samples.len() * 20);
    for v in samples {
        s.push_str(&format!("{v:.12e}\n"));
    }
    s
}
