//! Large-time limits: the universal saddle-point constant (2π)^{−1/2} and the
//! exact large-time expansions of the geometric stable density.

use crate::bernstein::PhiEvaluator;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::reference_density::{density_saddle, gamma_log_density, geo_stable_log_density, reference_density, Method};
use crate::special::ln_gamma;

/// (2π)^{−1/2}
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// p(t,x) √(t(−φ″(σ))) e^{tH(σ)} with the best available reference density;
/// tends to (2π)^{−1/2} as t → ∞ under (L-3).
pub fn limit_ratio(e: &PhiEvaluator, t: f64, x: f64) -> Result<f64> {
    if !e.model().meta.flags.l3 {
        return Err(Error::Condition(format!("{} lacks (L-3)", e.model().name)));
    }
    let st = e.saddle(t, x)?;
    let p = reference_density(e, t, x)?;
    Ok((p.log_value + 0.5 * (t * st.neg_phi2).ln() + t * st.h_sigma).exp())
}

/// Solves σ + σ^{1−α} = v for v > 2 (so σ > 1) by bisection.
pub fn geo_sigma_of(v: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha={alpha} outside (0,1]")));
    }
    if !(v > 2.0) || !v.is_finite() {
        return Err(Error::Domain(format!("αt/x = {v} must exceed 2")));
    }
    if alpha == 1.0 {
        return Ok(v - 1.0);
    }
    let f = |s: f64| s + s.powf(1.0 - alpha) - v;
    // f(1) = 2 − v < 0 and f(v) > 0
    let (mut lo, mut hi) = (1.0, v);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    if f(s).abs() > 1e-10 * v {
        return Err(Error::Precision(format!("σ residual {} at v={v}", f(s))));
    }
    Ok(s)
}

/// σ = (φ′)⁻¹(x/t) for φ = ln(1 + λ^α), valid when αt/x > 2.
pub fn geo_sigma(t: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) || !(x > 0.0) {
        return Err(Error::Domain(format!("t={t}, x={x} must be positive")));
    }
    geo_sigma_of(alpha * t / x, alpha)
}

/// η₁(λ) = 1 − λ^{1/α}(φ′)⁻¹(αλ^{1/α}) for 0 < λ < 2^{−α}.
pub fn eta1(lambda: f64, alpha: f64) -> Result<f64> {
    let r = lambda.powf(1.0 / alpha);
    Ok(1.0 - r * geo_sigma_of(1.0 / r, alpha)?)
}

/// η₂(λ) = 1 + (φ′)⁻¹(αλ^{1/α})^{−α}.
pub fn eta2(lambda: f64, alpha: f64) -> Result<f64> {
    let r = lambda.powf(1.0 / alpha);
    Ok(1.0 + geo_sigma_of(1.0 / r, alpha)?.powf(-alpha))
}

/// Taylor data at 0: η₁′(0) = 1, η₁″(0) = −2(1−α), δ₁ = 1, δ₂ = α − 1/2.
pub fn eta1_derivs(alpha: f64) -> (f64, f64) {
    (1.0, -2.0 * (1.0 - alpha))
}

pub fn deltas(alpha: f64) -> (f64, f64) {
    (1.0, alpha - 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoAsymptotics {
    pub alpha: f64,
    pub t: f64,
    pub x: f64,
    pub k: u8,
    /// (x/(αt))^α
    pub zeta: f64,
    pub sigma: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// the expression whose large-time limit is 1
    pub value: f64,
    pub density_method: Method,
}

fn geo_log_density(alpha: f64, t: f64, x: f64) -> Result<(f64, Method)> {
    if alpha == 1.0 {
        return Ok((gamma_log_density(t, x), Method::ClosedForm));
    }
    match geo_stable_log_density(alpha, t, x) {
        Ok(v) => Ok((v, Method::Series)),
        Err(_) => {
            let e = PhiEvaluator::new(LevyModel::geometric_stable(alpha)?);
            let d = density_saddle(&e, t, x)?;
            Ok((d.log_value, d.method))
        }
    }
}

/// k = 0: p x^{1−αt} Γ(αt) (1+σ^{−α})^{(1−α)t} e^{αt−σx};
/// k = 1 (α ∈ (1/2,1]): p x^{1−αt} Γ(αt) e^{tζ};
/// k = 2 (α ∈ (1/3,1/2]): p x^{1−αt} Γ(αt) e^{tζ − (1−α)tζ²/2}.
pub fn geo_asymp_detail(t: f64, x: f64, alpha: f64, k: u8) -> Result<GeoAsymptotics> {
    let ok = match k {
        0 => alpha > 0.0 && alpha <= 1.0,
        1 => alpha > 0.5 && alpha <= 1.0,
        2 => alpha > 1.0 / 3.0 && alpha <= 0.5,
        _ => false,
    };
    if !ok {
        return Err(Error::Parameter(format!("order k={k} does not apply at alpha={alpha}")));
    }
    let sigma = geo_sigma(t, x, alpha)?;
    let zeta = (x / (alpha * t)).powf(alpha);
    let (lp, method) = geo_log_density(alpha, t, x)?;
    let base = lp + (1.0 - alpha * t) * x.ln() + ln_gamma(alpha * t);
    let correction = match k {
        0 => (1.0 - alpha) * t * sigma.powf(-alpha).ln_1p() + alpha * t - sigma * x,
        1 => t * zeta,
        _ => t * zeta - 0.5 * (1.0 - alpha) * t * zeta * zeta,
    };
    let e1 = 1.0 - sigma * x / (alpha * t);
    Ok(GeoAsymptotics {
        alpha,
        t,
        x,
        k,
        zeta,
        sigma,
        eta1: e1,
        eta2: 1.0 + sigma.powf(-alpha),
        value: (base + correction).exp(),
        density_method: method,
    })
}

pub fn geo_asymp(t: f64, x: f64, alpha: f64, k: u8) -> Result<f64> {
    Ok(geo_asymp_detail(t, x, alpha, k)?.value)
}

/// CSV rows `alpha,t,x,k,value` with 12 significant digits.
pub fn geo_asymp_csv(rows: &[GeoAsymptotics]) -> String {
    let mut s = String::from("alpha,t,x,k,value\n");
    for r in rows {
        s += &format!("{:.11e},{:.11e},{:.11e},{},{:.11e}\n", r.alpha, r.t, r.x, r.k, r.value);
    }
    s
}
