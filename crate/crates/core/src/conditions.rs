//! Numerical tests of the scaling and regularity conditions on a Lévy density.
//!
//! The conditions are asymptotic, so every verdict here is relative to a finite
//! window of radii and carries that window with it.

use crate::error::{Error, Result};
use crate::levy_model::{ConditionFlags, LevyModel};

/// Points per decade on every test grid.
const PER_DECADE: usize = 8;
/// A scaling index counts as positive above this.
pub const INDEX_TOL: f64 = 0.01;
/// Largest index accepted as a finite upper scaling index.
pub const INDEX_CAP: f64 = 50.0;
/// Ratio R/r of the radius pairs behind the scaling indices.
const PAIR_SPAN: f64 = 100.0;
/// Smallest accepted constant in the doubling and almost-decreasing tests.
const CAP_TOL: f64 = 1e-3;

pub const ZERO_WINDOW: (f64, f64) = (1e-8, 1e-2);
pub const INFINITY_WINDOW: (f64, f64) = (1e2, 1e8);
pub const GLOBAL_WINDOW: (f64, f64) = (1e-8, 1e8);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    /// min over pairs (r, 100r) of log₁₀(ν(r)/ν(100r))/2 − 1
    pub alpha_low: f64,
    /// max of the same; +∞ when ν vanishes inside the window
    pub alpha_high: f64,
    pub window: (f64, f64),
    /// least-squares slope of ln ν against ln r
    pub slope: f64,
    /// max |ln ν − fitted line|
    pub residual: f64,
    /// pair index extrapolated to r → 0 by fitting a + b/ln(1/r); NaN for
    /// windows reaching r ≥ 1
    pub alpha_limit: f64,
}

impl ScalingFit {
    /// Lower scaling holds with a positive index. A slowly varying factor
    /// such as ln²(1/r) shows up as a pair index drifting to 0 like 1/ln(1/r),
    /// which the extrapolated index catches.
    pub fn lower_holds(&self) -> bool {
        self.alpha_low > INDEX_TOL && !(self.alpha_limit <= INDEX_TOL)
    }

    /// Upper scaling holds with a finite index.
    pub fn upper_holds(&self) -> bool {
        self.alpha_high.is_finite() && self.alpha_high > 0.0 && self.alpha_high < INDEX_CAP
    }
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * PER_DECADE as f64).round() as usize).max(1);
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

/// Pairwise scaling indices and a least-squares power-law fit of ν over `window`.
pub fn fit_scaling(m: &LevyModel, window: (f64, f64)) -> Result<ScalingFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("window [{lo}, {hi}] narrower than one decade")));
    }
    let grid = log_grid(lo, hi);
    let nu: Vec<f64> = grid.iter().map(|&r| m.nu(r)).collect();
    // pairs two decades apart smooth out local bumps that a constant absorbs
    let span = (hi / lo).min(PAIR_SPAN);
    let decades = span.log10();
    let (mut a_lo, mut a_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut pair_idx = Vec::new();
    for i in 0..grid.len() {
        let big = grid[i] * span;
        if big > hi * (1.0 + 1e-12) {
            break;
        }
        let (n0, n1) = (nu[i], m.nu(big));
        let idx = match (n0 > 0.0, n1 > 0.0) {
            (true, true) => (n0 / n1).log10() / decades - 1.0,
            (true, false) => f64::INFINITY,
            // vanished to underflow: nothing to compare
            (false, false) if m.support().1.is_infinite() => continue,
            _ => {
                a_lo = f64::NAN;
                a_hi = f64::INFINITY;
                break;
            }
        };
        a_lo = a_lo.min(idx);
        a_hi = a_hi.max(idx);
        pair_idx.push(((grid[i] * span.sqrt()).ln(), idx));
    }
    let alpha_limit = if hi < 1.0 && pair_idx.len() >= 3 && pair_idx.iter().all(|p| p.1.is_finite()) {
        let pts: Vec<(f64, f64)> = pair_idx.iter().map(|&(lr, idx)| (-1.0 / lr, idx)).collect();
        line_fit(&pts).0
    } else {
        f64::NAN
    };
    // least squares on the positive part
    let pts: Vec<(f64, f64)> = grid.iter().zip(&nu).filter(|(_, &v)| v > 0.0).map(|(&r, &v)| (r.ln(), v.ln())).collect();
    let (slope, residual) = if pts.len() >= 2 {
        let (_, slope, res) = line_fit(&pts);
        (slope, res)
    } else {
        (f64::NAN, f64::INFINITY)
    };
    Ok(ScalingFit { alpha_low: a_lo, alpha_high: a_hi, window, slope, residual, alpha_limit })
}

/// Least-squares line through `pts`: (intercept at 0, slope, max |residual|).
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let res = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).abs()).fold(0.0, f64::max);
    (my - slope * mx, slope, res)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateE {
    /// 1 / liminf x ν(x), with 1/∞ = 0
    pub t0: f64,
    /// min of x ν(x) over the two smallest decades
    pub liminf: f64,
    /// |estimate − recorded| / recorded exceeds 5%
    pub disagrees: bool,
}

/// Estimates T₀ = 1/liminf_{x→0} x ν(x) on a log grid over [1e−10, 1e−2].
///
/// If x ν(x) still grows by more than 1% per decade over the smallest decades
/// the liminf is taken to be infinite.
pub fn check_e(m: &LevyModel) -> EstimateE {
    let f = |x: f64| x * m.nu(x);
    let grid = log_grid(1e-10, 1e-9);
    let liminf = grid.iter().map(|&x| f(x)).fold(f64::INFINITY, f64::min);
    let growth = f(1e-10) / f(1e-9);
    let t0 = if growth > 1.01 || liminf.is_infinite() {
        0.0
    } else if liminf > 0.0 {
        1.0 / liminf
    } else {
        f64::INFINITY
    };
    let rec = m.meta.t0;
    let disagrees = if rec == 0.0 { t0 != 0.0 } else { !((t0 - rec).abs() <= 0.05 * rec) };
    EstimateE { t0, liminf, disagrees }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    /// sup of ν beyond the small-radius window
    pub s3_sup: f64,
    pub s3: bool,
    /// min of ν(r)/sup_{u≥r} ν(u) and of ν(2r)/ν(r) for r ≥ R₁/2; 1 when R₁ = ∞
    pub s3_star_const: (f64, f64),
    pub s3_star: bool,
    /// best c₉ with ν(r)/ν(R) ≥ (R/r)^{−c₉} on 0 < r ≤ R < R₃ (window-limited)
    pub l3_c9: f64,
    pub l3: bool,
}

fn support_end(m: &LevyModel) -> f64 {
    m.support().1
}

/// Grid tests of (S-3), (S-3*) and (L-3).
pub fn check_caps(m: &LevyModel) -> Caps {
    let end = support_end(m);
    let top = GLOBAL_WINDOW.1;
    let r1 = m.meta.r1;
    let start = if r1.is_finite() { r1 } else { zero_window(m).1 };
    let s3_sup = log_grid(start, top).iter().map(|&r| m.nu(r)).fold(0.0, f64::max);
    let s3 = s3_sup.is_finite();

    let (mut dec, mut dbl) = (1.0f64, 1.0f64);
    if r1.is_finite() {
        let grid = log_grid(r1 / 2.0, top);
        let nu: Vec<f64> = grid.iter().map(|&r| m.nu(r)).collect();
        let mut sup = 0.0f64;
        for i in (0..grid.len()).rev() {
            sup = sup.max(nu[i]);
            if sup > 0.0 {
                dec = dec.min(nu[i] / sup);
            }
            if nu[i] > 0.0 {
                dbl = dbl.min(m.nu(2.0 * grid[i]) / nu[i]);
            }
        }
    }
    let s3_star = dec > CAP_TOL && dbl > CAP_TOL;

    let r3 = m.meta.r3.min(end).min(top);
    let grid = log_grid(GLOBAL_WINDOW.0, r3 * (1.0 - 1e-9));
    let nu: Vec<f64> = grid.iter().map(|&r| m.nu(r)).collect();
    let mut c9 = 0.0f64;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            // ν(r)/ν(R) ≥ (R/r)^{−c₉}  ⟺  c₉ ≥ ln(ν(R)/ν(r)) / ln(R/r)
            let need = (nu[j] / nu[i]).ln() / (grid[j] / grid[i]).ln();
            c9 = c9.max(need);
        }
    }
    Caps { s3_sup, s3, s3_star_const: (dec, dbl), s3_star, l3_c9: c9, l3: c9.is_finite() }
}

/// Window for conditions at zero, shrunk inside a bounded support.
pub fn zero_window(m: &LevyModel) -> (f64, f64) {
    (ZERO_WINDOW.0, ZERO_WINDOW.1.min(support_end(m) / 4.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub model: String,
    pub e: EstimateE,
    pub zero: ScalingFit,
    pub infinity: Option<ScalingFit>,
    pub global: ScalingFit,
    pub caps: Caps,
    pub flags: ConditionFlags,
}

impl ConditionReport {
    /// Names of flags where the verdict differs from the model's recorded truth.
    pub fn mismatches(&self, truth: &ConditionFlags) -> Vec<&'static str> {
        self.flags.diff(truth)
    }

    pub fn render(&self, truth: &ConditionFlags) -> String {
        let fit = |f: &ScalingFit| {
            format!(
                "{{\"window\": [{:e}, {:e}], \"alpha_low\": {}, \"alpha_high\": {}, \"alpha_limit\": {}, \"slope\": {}, \"residual\": {}}}",
                f.window.0,
                f.window.1,
                num(f.alpha_low),
                num(f.alpha_high),
                num(f.alpha_limit),
                num(f.slope),
                num(f.residual)
            )
        };
        let mut s = String::from("{\n");
        s += &format!("  \"model\": \"{}\",\n", self.model);
        s += &format!(
            "  \"E\": {{\"t0\": {}, \"liminf\": {}, \"disagrees_with_recorded\": {}}},\n",
            num(self.e.t0),
            num(self.e.liminf),
            self.e.disagrees
        );
        s += &format!("  \"zero\": {},\n", fit(&self.zero));
        match &self.infinity {
            Some(f) => s += &format!("  \"infinity\": {},\n", fit(f)),
            None => s += "  \"infinity\": null,\n",
        }
        s += &format!("  \"global\": {},\n", fit(&self.global));
        s += &format!(
            "  \"caps\": {{\"s3_sup\": {}, \"s3_star_decreasing\": {}, \"s3_star_doubling\": {}, \"l3_c9\": {}}},\n",
            num(self.caps.s3_sup),
            num(self.caps.s3_star_const.0),
            num(self.caps.s3_star_const.1),
            num(self.caps.l3_c9)
        );
        s += "  \"flags\": {";
        let vals = self.flags.as_array();
        let items: Vec<String> =
            ConditionFlags::NAMES.iter().zip(vals.iter()).map(|(n, v)| format!("\"{n}\": {v}")).collect();
        s += &items.join(", ");
        s += "},\n";
        let mm = self.mismatches(truth);
        s += &format!("  \"mismatches\": [{}]\n}}\n", mm.iter().map(|n| format!("\"{n}\"")).collect::<Vec<_>>().join(", "));
        s
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("\"{v}\"")
    }
}

/// Combines the window tests into condition flags.
pub fn classify(m: &LevyModel) -> Result<ConditionReport> {
    let e = check_e(m);
    let zero = fit_scaling(m, zero_window(m))?;
    let unbounded = support_end(m).is_infinite();
    let infinity = if unbounded { Some(fit_scaling(m, INFINITY_WINDOW)?) } else { None };
    let global = fit_scaling(m, GLOBAL_WINDOW)?;
    let caps = check_caps(m);

    let mut f = ConditionFlags {
        e: e.t0.is_finite(),
        s1: zero.lower_holds(),
        s2: zero.upper_holds(),
        s3: caps.s3,
        s3_star: caps.s3_star,
        l3: caps.l3,
        ..ConditionFlags::default()
    };
    if let Some(inf) = &infinity {
        f.l1 = inf.lower_holds();
        f.l2 = inf.upper_holds();
    }
    f.s = f.s1 && f.s2 && f.s3;
    f.l = f.l1 && f.l2 && f.l3;
    // the global window crosses r = 1, so the drift test comes from the zero window
    f.g = global.lower_holds() && !(zero.alpha_limit <= INDEX_TOL) && global.upper_holds();
    f.s_pure = f.s && zero.alpha_high < 2.0;
    if let Some(inf) = &infinity {
        f.l_pure = f.l && inf.alpha_high < 2.0;
        f.l_mixed = f.l && inf.alpha_low > 1.0;
    }
    Ok(ConditionReport { model: m.name.clone(), e, zero, infinity, global, caps, flags: f })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_index_is_exact() {
        let m = LevyModel::stable(0.5).unwrap();
        let f = fit_scaling(&m, (1e-6, 1e-2)).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-9, "{}", f.slope);
        assert!((f.alpha_low - 0.5).abs() < 1e-9 && (f.alpha_high - 0.5).abs() < 1e-9);
        assert!(f.residual < 1e-9);
        assert!(fit_scaling(&m, (1e-3, 5e-3)).is_err());
    }

    #[test]
    fn estimates_t0() {
        assert!((check_e(&LevyModel::gamma().unwrap()).t0 - 1.0).abs() < 0.01);
        assert_eq!(check_e(&LevyModel::stable(0.3).unwrap()).t0, 0.0);
        let g = check_e(&LevyModel::geometric_stable(0.7).unwrap());
        assert!((g.t0 - 1.0 / 0.7).abs() < 0.05 / 0.7, "{g:?}");
        assert!(!g.disagrees);
    }

    #[test]
    fn geometric_stable_fails_lower_scaling_at_zero() {
        let m = LevyModel::geometric_stable(0.7).unwrap();
        let z = fit_scaling(&m, zero_window(&m)).unwrap();
        assert!(!z.lower_holds(), "{z:?}");
        let r = classify(&m).unwrap();
        assert!(r.flags.l && !r.flags.s);
    }

    #[test]
    fn slowly_varying_density_has_zero_limit_index() {
        // s^{-1} ln²(1 + 1/s): every finite pair index is positive, the limit is 0
        let m = LevyModel::log_perturbed(0.0, 2.0, 3.0, 0.0).unwrap();
        let f = fit_scaling(&m, ZERO_WINDOW).unwrap();
        assert!(f.alpha_low > 0.1 && f.alpha_limit.abs() < INDEX_TOL, "{f:?}");
        assert!(!f.lower_holds());
        let m = LevyModel::log_perturbed(0.5, 1.0, 3.0, 0.0).unwrap();
        let f = fit_scaling(&m, ZERO_WINDOW).unwrap();
        assert!((f.alpha_limit - 0.5).abs() < 0.05 && f.lower_holds(), "{f:?}");
    }

    #[test]
    fn log_correction_shows_as_residual() {
        let m = LevyModel::log_perturbed(0.5, 1.0, 3.0, 0.0).unwrap();
        let f = fit_scaling(&m, (1e-8, 1e-2)).unwrap();
        assert!(f.slope < -1.5 && f.slope > -1.6, "{}", f.slope);
        assert!(f.residual > 1e-2);
        assert!(f.alpha_high > f.alpha_low);
    }

    #[test]
    fn truncated_caps() {
        let m = LevyModel::truncated_stable(0.5).unwrap();
        let c = check_caps(&m);
        assert_eq!(c.s3_sup, 0.0);
        assert!(c.s3 && !c.s3_star && c.l3);
    }
}
