//! Lévy densities of driftless subordinators and the model catalog.

use crate::error::{Error, Result};
use crate::quad::{self, Direction};
use crate::special::{exp_int_e1, ln_gamma, CompensatedSum, EULER_GAMMA};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Boolean truth table for the structural conditions on ν.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConditionFlags {
    pub e: bool,
    pub s1: bool,
    pub s2: bool,
    pub s3: bool,
    pub s3_star: bool,
    pub l1: bool,
    pub l2: bool,
    pub l3: bool,
    pub s: bool,
    pub l: bool,
    pub g: bool,
    pub s_pure: bool,
    pub l_pure: bool,
    pub l_mixed: bool,
}

impl ConditionFlags {
    pub const NAMES: [&'static str; 14] = [
        "E", "S-1", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "S", "L", "G", "S.Pure", "L.Pure", "L.Mixed",
    ];

    pub fn as_array(&self) -> [bool; 14] {
        [
            self.e, self.s1, self.s2, self.s3, self.s3_star, self.l1, self.l2, self.l3, self.s, self.l, self.g,
            self.s_pure, self.l_pure, self.l_mixed,
        ]
    }

    /// Names of the flags where `self` and `other` differ.
    pub fn diff(&self, other: &ConditionFlags) -> Vec<&'static str> {
        let a = self.as_array();
        let b = other.as_array();
        (0..14).filter(|&i| a[i] != b[i]).map(|i| Self::NAMES[i]).collect()
    }

    fn from_list(list: &[&str]) -> Self {
        let mut f = ConditionFlags::default();
        for name in list {
            match *name {
                "E" => f.e = true,
                "S-1" => f.s1 = true,
                "S-2" => f.s2 = true,
                "S-3" => f.s3 = true,
                "S-3*" => f.s3_star = true,
                "L-1" => f.l1 = true,
                "L-2" => f.l2 = true,
                "L-3" => f.l3 = true,
                "S" => f.s = true,
                "L" => f.l = true,
                "G" => f.g = true,
                "S.Pure" => f.s_pure = true,
                "L.Pure" => f.l_pure = true,
                "L.Mixed" => f.l_mixed = true,
                other => panic!("unknown condition {other}"),
            }
        }
        f
    }
}

/// Known constants and condition flags of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    /// Constant of condition (E); `f64::INFINITY` when (E) fails.
    pub t0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha3: Option<f64>,
    pub alpha4: Option<f64>,
    pub flags: ConditionFlags,
}

impl ModelMeta {
    /// Large-time threshold used by the large-time envelopes.
    pub fn t1(&self) -> f64 {
        (2.0 * self.t0).max(2.0)
    }

    fn check(&self) -> Result<()> {
        if self.flags.s {
            if let (Some(a1), Some(a2)) = (self.alpha1, self.alpha2) {
                if !(a1 <= a2 && a1 < 1.0) {
                    return Err(Error::Parameter(format!("(S) needs alpha1 <= alpha2 and alpha1 < 1, got {a1}, {a2}")));
                }
            }
        }
        if self.flags.l_mixed && !self.alpha3.is_some_and(|a| a > 1.0) {
            return Err(Error::Parameter("(L.Mixed) needs alpha3 > 1".into()));
        }
        Ok(())
    }

    fn unknown() -> Self {
        ModelMeta {
            t0: f64::INFINITY,
            r1: f64::INFINITY,
            r2: 1.0,
            r3: 1.0,
            alpha1: None,
            alpha2: None,
            alpha3: None,
            alpha4: None,
            flags: ConditionFlags::default(),
        }
    }
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    Stable { alpha: f64 },
    TruncatedStable { alpha: f64 },
    Gamma,
    GeometricStable { alpha: f64 },
    /// Weighted sum of stable densities: (weight, index) pairs.
    StableMixture { parts: Vec<(f64, f64)> },
    LogPerturbed { gamma1: f64, p: f64, gamma2: f64, q: f64 },
    Oscillating,
    /// Log-log linear interpolation between knots; zero outside.
    Tabulated { ln_s: Vec<f64>, ln_nu: Vec<f64> },
    Custom { density: DensityFn },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Stable { alpha } => write!(f, "Stable({alpha})"),
            Family::TruncatedStable { alpha } => write!(f, "TruncatedStable({alpha})"),
            Family::Gamma => write!(f, "Gamma"),
            Family::GeometricStable { alpha } => write!(f, "GeometricStable({alpha})"),
            Family::StableMixture { parts } => write!(f, "StableMixture({parts:?})"),
            Family::LogPerturbed { gamma1, p, gamma2, q } => write!(f, "LogPerturbed({gamma1},{p},{gamma2},{q})"),
            Family::Oscillating => write!(f, "Oscillating"),
            Family::Tabulated { ln_s, .. } => write!(f, "Tabulated({} knots)", ln_s.len()),
            Family::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// First two nontrivial points of the oscillating construction (a₁ = 3, a₂ = e^{3^{3/2}}).
pub const OSC_A1: f64 = 3.0;
pub fn osc_a2() -> f64 {
    OSC_A1.powf(1.5).exp()
}

/// ψ of the oscillating example on the range representable in `f64`
/// (everything above a₂ lies below a₃ ≈ e^{2427}).
pub fn osc_psi(r: f64) -> f64 {
    let a1 = OSC_A1;
    let a2 = osc_a2();
    let psi_a1 = 4.0 / 3.0 * a1.sqrt();
    if r <= a1 {
        4.0 / 3.0 * r.sqrt()
    } else if r <= a2 {
        r.powi(4) + psi_a1 - a1.powi(4)
    } else {
        let psi_a2 = a2.powi(4) + psi_a1 - a1.powi(4);
        4.0 / 3.0 * r.sqrt() + psi_a2 - 4.0 / 3.0 * a2.sqrt()
    }
}

/// A driftless subordinator given by its Lévy density.
#[derive(Clone)]
pub struct LevyModel {
    pub name: String,
    pub family: Family,
    pub meta: ModelMeta,
    breaks: Vec<f64>,
    support: (f64, f64),
}

impl fmt::Debug for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevyModel({})", self.name)
    }
}

fn check_alpha(alpha: f64, allow_one: bool) -> Result<()> {
    let ok = alpha > 0.0 && (alpha < 1.0 || (allow_one && alpha == 1.0));
    if !ok {
        return Err(Error::Parameter(format!("index alpha={alpha} outside (0,1)")));
    }
    Ok(())
}

impl LevyModel {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha, false)?;
        let meta = ModelMeta {
            t0: 0.0,
            r1: f64::INFINITY,
            r2: 1.0,
            r3: f64::INFINITY,
            alpha1: Some(alpha),
            alpha2: Some(alpha),
            alpha3: Some(alpha),
            alpha4: Some(alpha),
            flags: ConditionFlags::from_list(&[
                "E", "S-1", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "S", "L", "G", "S.Pure", "L.Pure",
            ]),
        };
        Self::build(format!("stable({alpha})"), Family::Stable { alpha }, meta, vec![], (0.0, f64::INFINITY))
    }

    pub fn truncated_stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha, false)?;
        let meta = ModelMeta {
            t0: 0.0,
            r1: 1.0,
            r2: 1.0,
            r3: 1.0,
            alpha1: Some(alpha),
            alpha2: Some(alpha),
            alpha3: None,
            alpha4: None,
            flags: ConditionFlags::from_list(&["E", "S-1", "S-2", "S-3", "L-3", "S", "S.Pure"]),
        };
        Self::build(format!("truncated_stable({alpha})"), Family::TruncatedStable { alpha }, meta, vec![1.0], (0.0, 1.0))
    }

    pub fn gamma() -> Result<Self> {
        let meta = ModelMeta {
            t0: 1.0,
            r1: 1.0,
            r2: 1.0,
            r3: f64::INFINITY,
            alpha1: None,
            alpha2: None,
            alpha3: None,
            alpha4: None,
            flags: ConditionFlags::from_list(&["E", "S-2", "S-3", "L-1", "L-3"]),
        };
        Self::build("gamma".into(), Family::Gamma, meta, vec![], (0.0, f64::INFINITY))
    }

    /// Geometric stable; `alpha = 1` gives the gamma subordinator.
    pub fn geometric_stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha, true)?;
        let meta = if alpha < 1.0 {
            ModelMeta {
                t0: 1.0 / alpha,
                r1: 1.0,
                r2: 1.0,
                r3: f64::INFINITY,
                alpha1: None,
                alpha2: None,
                alpha3: Some(alpha),
                alpha4: Some(alpha),
                flags: ConditionFlags::from_list(&["E", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "L", "L.Pure"]),
            }
        } else {
            Self::gamma()?.meta
        };
        Self::build(format!("geometric_stable({alpha})"), Family::GeometricStable { alpha }, meta, vec![], (0.0, f64::INFINITY))
    }

    /// ν = Σ wᵢ βᵢ/Γ(1−βᵢ) s^{−1−βᵢ}, φ = Σ wᵢ λ^{βᵢ}.
    pub fn stable_mixture(parts: Vec<(f64, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parameter("mixture needs at least one component".into()));
        }
        for &(w, b) in &parts {
            check_alpha(b, false)?;
            if !(w > 0.0) {
                return Err(Error::Parameter(format!("mixture weight {w} must be positive")));
            }
        }
        let lo = parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = parts.iter().map(|p| p.1).fold(0.0, f64::max);
        let meta = ModelMeta {
            t0: 0.0,
            r1: f64::INFINITY,
            r2: 1.0,
            r3: f64::INFINITY,
            alpha1: Some(lo),
            alpha2: Some(hi),
            alpha3: Some(lo),
            alpha4: Some(hi),
            flags: ConditionFlags::from_list(&[
                "E", "S-1", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "S", "L", "G", "S.Pure", "L.Pure",
            ]),
        };
        let name = format!(
            "stable_mixture({})",
            parts.iter().map(|(w, b)| format!("{w}@{b}")).collect::<Vec<_>>().join(",")
        );
        Self::build(name, Family::StableMixture { parts }, meta, vec![], (0.0, f64::INFINITY))
    }

    /// ν(s) = s^{−1−γ₁} ln^p(1+1/s) on (0,1], s^{−1−γ₂} ln^q(1+s) on (1,∞).
    pub fn log_perturbed(gamma1: f64, p: f64, gamma2: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma1) {
            return Err(Error::Parameter(format!("gamma1={gamma1} outside [0,1]")));
        }
        if gamma1 == 0.0 && !(p > 0.0) {
            return Err(Error::Parameter("gamma1 = 0 needs p > 0".into()));
        }
        if gamma1 == 1.0 && !(p < -1.0) {
            return Err(Error::Parameter("gamma1 = 1 needs p < -1".into()));
        }
        if !(gamma2 > 1.0) || !q.is_finite() || !p.is_finite() {
            return Err(Error::Parameter(format!("gamma2={gamma2} must exceed 1")));
        }
        let small_pure = gamma1 > 0.0;
        let mut list = vec!["E", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "L", "L.Mixed"];
        if gamma1 > 0.0 {
            list.extend_from_slice(&["S-1", "S", "G"]);
        }
        if small_pure {
            list.push("S.Pure");
        }
        if gamma2 < 2.0 {
            list.push("L.Pure");
        }
        let meta = ModelMeta {
            t0: 0.0,
            r1: if gamma1 > 0.0 { f64::INFINITY } else { 1.0 },
            r2: 1.0,
            r3: f64::INFINITY,
            // at γ₁ = 1 the log factor costs an arbitrarily small amount of index
            alpha1: if gamma1 > 0.0 { Some(gamma1.min(0.99)) } else { None },
            alpha2: Some(gamma1.max(gamma2)),
            alpha3: Some(gamma2),
            alpha4: Some(gamma2),
            flags: ConditionFlags::from_list(&list),
        };
        Self::build(
            format!("log_perturbed({gamma1},{p},{gamma2},{q})"),
            Family::LogPerturbed { gamma1, p, gamma2, q },
            meta,
            vec![1.0],
            (0.0, f64::INFINITY),
        )
    }

    /// ν(r) = 1/(r ψ(r)) with the piecewise ψ of [`osc_psi`].
    pub fn oscillating() -> Result<Self> {
        let meta = ModelMeta {
            t0: 0.0,
            r1: f64::INFINITY,
            r2: 1.0,
            r3: f64::INFINITY,
            alpha1: Some(0.5),
            alpha2: Some(4.0),
            alpha3: Some(0.5),
            alpha4: Some(4.0),
            flags: ConditionFlags::from_list(&[
                "E", "S-1", "S-2", "S-3", "S-3*", "L-1", "L-2", "L-3", "S", "L", "G",
            ]),
        };
        Self::build("oscillating".into(), Family::Oscillating, meta, vec![OSC_A1, osc_a2()], (0.0, f64::INFINITY))
    }

    /// Tabulated density from (s, ν(s)) knots; must be positive and strictly increasing in s.
    pub fn tabulated(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Parameter("tabulated density needs at least two knots".into()));
        }
        let mut ln_s = Vec::with_capacity(knots.len());
        let mut ln_nu = Vec::with_capacity(knots.len());
        for (i, &(s, v)) in knots.iter().enumerate() {
            if !(s > 0.0) || !(v > 0.0) || !s.is_finite() || !v.is_finite() {
                return Err(Error::Parameter(format!("knot {i} ({s}, {v}) must be positive and finite")));
            }
            if i > 0 && s <= knots[i - 1].0 {
                return Err(Error::Parameter("knots must be strictly increasing in s".into()));
            }
            ln_s.push(s.ln());
            ln_nu.push(v.ln());
        }
        let support = (knots[0].0, knots[knots.len() - 1].0);
        let m = Self::build("tabulated".into(), Family::Tabulated { ln_s, ln_nu }, ModelMeta::unknown(), vec![], support)?;
        m.check_integrable()?;
        Ok(m)
    }

    /// Density given by an arbitrary function; meta defaults to "unknown".
    pub fn custom(name: &str, density: DensityFn, meta: Option<ModelMeta>) -> Result<Self> {
        let m = Self::build(
            name.to_string(),
            Family::Custom { density },
            meta.unwrap_or_else(ModelMeta::unknown),
            vec![],
            (0.0, f64::INFINITY),
        )?;
        m.check_integrable()?;
        Ok(m)
    }

    fn build(name: String, family: Family, meta: ModelMeta, breaks: Vec<f64>, support: (f64, f64)) -> Result<Self> {
        meta.check()?;
        Ok(LevyModel { name, family, meta, breaks, support })
    }

    /// ∫₀^∞ min(1,s) ν(s) ds must be finite.
    fn check_integrable(&self) -> Result<()> {
        let near = quad::log_march(&|s: f64| s * self.nu(s), 1.0, 0.0, Direction::TowardZero, &self.breaks, 1e-6, 0.0);
        let far = quad::log_march(&|s: f64| self.nu(s), 1.0, f64::INFINITY, Direction::TowardInfinity, &self.breaks, 1e-6, 0.0);
        let total = near.value + far.value;
        let err = near.err + far.err;
        if !total.is_finite() || !(err <= 1e-6 * total.abs().max(1e-300)) {
            return Err(Error::Parameter(format!(
                "density is not integrable against min(1,s) (estimate {total:.3e} ± {err:.3e})"
            )));
        }
        for s in [1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3] {
            if self.nu(s) < 0.0 {
                return Err(Error::Parameter(format!("density negative at s={s}")));
            }
        }
        Ok(())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Interval outside of which ν vanishes.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// ν(s) with the convention ν = 0 outside the support. Used by quadrature.
    pub fn nu(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Stable { alpha } => alpha / gamma_fn(1.0 - alpha) * s.powf(-1.0 - alpha),
            Family::TruncatedStable { alpha } => {
                if s < 1.0 {
                    s.powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            Family::Gamma => (-s).exp() / s,
            Family::GeometricStable { alpha } => geo_stable_nu(*alpha, s).unwrap_or(f64::NAN),
            Family::StableMixture { parts } => parts
                .iter()
                .map(|&(w, b)| w * b / gamma_fn(1.0 - b) * s.powf(-1.0 - b))
                .sum(),
            Family::LogPerturbed { gamma1, p, gamma2, q } => {
                if s <= 1.0 {
                    s.powf(-1.0 - gamma1) * (1.0 / s).ln_1p().powf(*p)
                } else {
                    s.powf(-1.0 - gamma2) * s.ln_1p().powf(*q)
                }
            }
            Family::Oscillating => 1.0 / (s * osc_psi(s)),
            Family::Tabulated { ln_s, ln_nu } => {
                let l = s.ln();
                let n = ln_s.len();
                if l < ln_s[0] || l > ln_s[n - 1] {
                    return 0.0;
                }
                let i = match ln_s.binary_search_by(|v| v.partial_cmp(&l).unwrap()) {
                    Ok(i) => return ln_nu[i].exp(),
                    Err(i) => i - 1,
                };
                let t = (l - ln_s[i]) / (ln_s[i + 1] - ln_s[i]);
                (ln_nu[i] + t * (ln_nu[i + 1] - ln_nu[i])).exp()
            }
            Family::Custom { density } => density(s),
        }
    }

    /// ν(s) with domain checks: s must be positive, and tabulated densities are
    /// not extrapolated beyond their knots.
    pub fn eval_density(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("jump size s={s} must be positive")));
        }
        if let Family::Tabulated { ln_s, .. } = &self.family {
            let l = s.ln();
            if l < ln_s[0] - 1e-12 || l > ln_s[ln_s.len() - 1] + 1e-12 {
                return Err(Error::Domain(format!("s={s} outside tabulated knots")));
            }
        }
        if let Family::GeometricStable { alpha } = &self.family {
            return geo_stable_nu(*alpha, s);
        }
        Ok(self.nu(s))
    }

    /// Closed-form tail w(r) = ν(r,∞) when one exists.
    pub fn tail_closed(&self, r: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some(r.powf(-alpha) / gamma_fn(1.0 - alpha)),
            Family::StableMixture { parts } => {
                Some(parts.iter().map(|&(w, b)| w * r.powf(-b) / gamma_fn(1.0 - b)).sum())
            }
            Family::TruncatedStable { alpha } => Some(if r < 1.0 { (r.powf(-alpha) - 1.0) / alpha } else { 0.0 }),
            Family::Gamma => Some(exp_int_e1(r)),
            Family::GeometricStable { alpha } if *alpha == 1.0 => Some(exp_int_e1(r)),
            Family::GeometricStable { alpha } => Some(geo_stable_tail(*alpha, r)),
            Family::Oscillating => Some(osc_tail(r)),
            _ => None,
        }
    }

    /// w(r) = ν(r,∞): closed form when available, otherwise quadrature.
    pub fn eval_tail(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("tail argument r={r} must be positive")));
        }
        if let Some(v) = self.tail_closed(r) {
            return Ok(v);
        }
        if r >= self.support.1 {
            return Ok(0.0);
        }
        let q = quad::log_march(&|s: f64| self.nu(s), r, self.support.1, Direction::TowardInfinity, &self.breaks, 1e-11, 0.0);
        if !q.value.is_finite() || q.err > 1e-8 * q.value.abs().max(1e-300) {
            return Err(Error::Quadrature(format!("tail at r={r}: {:.3e} ± {:.3e}", q.value, q.err)));
        }
        Ok(q.value)
    }

    /// Closed-form φ^{(n)}(λ), n = 0..3, when one exists.
    pub fn phi_closed(&self, lambda: f64, n: u8) -> Option<f64> {
        let l = lambda;
        match &self.family {
            Family::Stable { alpha } => Some(stable_deriv(*alpha, l, n)),
            Family::StableMixture { parts } => Some(parts.iter().map(|&(w, b)| w * stable_deriv(b, l, n)).sum()),
            Family::Gamma => Some(gamma_deriv(l, n)),
            Family::GeometricStable { alpha } => Some(geo_deriv(*alpha, l, n)),
            _ => None,
        }
    }

    /// Closed-form H(λ) = φ(λ) − λφ′(λ), arranged to avoid cancellation.
    pub fn h_closed(&self, l: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some((1.0 - alpha) * l.powf(*alpha)),
            Family::StableMixture { parts } => Some(parts.iter().map(|&(w, b)| w * (1.0 - b) * l.powf(b)).sum()),
            Family::Gamma => Some(geo_h(1.0, l)),
            Family::GeometricStable { alpha } => Some(geo_h(*alpha, l)),
            _ => None,
        }
    }

    /// Closed-form φ at a complex argument with Re z ≥ 0 (principal branches).
    pub fn phi_complex_closed(&self, z: Complex64) -> Option<Complex64> {
        match &self.family {
            Family::Stable { alpha } => Some(cpow(z, *alpha)),
            Family::StableMixture { parts } => Some(parts.iter().map(|&(w, b)| cpow(z, b) * w).sum()),
            Family::Gamma => Some((z + 1.0).ln()),
            Family::GeometricStable { alpha } => Some((cpow(z, *alpha) + 1.0).ln()),
            _ => None,
        }
    }

    /// ∫₀^ε s^m ν(s) ds in closed form, when available (m ≥ 1).
    pub fn small_moment(&self, m: f64, eps: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some(alpha / gamma_fn(1.0 - alpha) * eps.powf(m - alpha) / (m - alpha)),
            Family::StableMixture { parts } => Some(
                parts
                    .iter()
                    .map(|&(w, b)| w * b / gamma_fn(1.0 - b) * eps.powf(m - b) / (m - b))
                    .sum(),
            ),
            Family::TruncatedStable { alpha } if eps <= 1.0 => Some(eps.powf(m - alpha) / (m - alpha)),
            Family::LogPerturbed { gamma1, p, .. } if *gamma1 == 1.0 && m == 1.0 && eps < 1e-3 => {
                // ∫_U^∞ u^p e^u/(e^u−1) du with U = ln(1+1/ε)
                let u = (1.0 / eps).ln_1p();
                Some(u.powf(p + 1.0) / (-p - 1.0) + u.powf(*p) * eps / (1.0 + eps))
            }
            _ => None,
        }
    }

    /// Left end of the real half-line on which the closed-form φ is analytic:
    /// −1 for the gamma law (exponential moments below 1), 0 otherwise.
    pub fn laplace_abscissa(&self) -> f64 {
        match &self.family {
            Family::Gamma => -1.0,
            Family::GeometricStable { alpha } if *alpha == 1.0 => -1.0,
            _ => 0.0,
        }
    }

    /// True when φ, φ′, φ″, H are available in closed form.
    pub fn has_closed_phi(&self) -> bool {
        self.phi_closed(1.0, 0).is_some()
    }
}

pub fn gamma_fn(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Principal z^a for Re z ≥ 0, z ≠ 0.
pub fn cpow(z: Complex64, a: f64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (z.ln() * a).exp()
}

fn stable_deriv(a: f64, l: f64, n: u8) -> f64 {
    match n {
        0 => l.powf(a),
        1 => a * l.powf(a - 1.0),
        2 => a * (a - 1.0) * l.powf(a - 2.0),
        3 => a * (a - 1.0) * (a - 2.0) * l.powf(a - 3.0),
        _ => f64::NAN,
    }
}

fn gamma_deriv(l: f64, n: u8) -> f64 {
    match n {
        0 => l.ln_1p(),
        1 => 1.0 / (1.0 + l),
        2 => -1.0 / ((1.0 + l) * (1.0 + l)),
        3 => 2.0 / (1.0 + l).powi(3),
        _ => f64::NAN,
    }
}

fn geo_deriv(a: f64, l: f64, n: u8) -> f64 {
    if a == 1.0 {
        return gamma_deriv(l, n);
    }
    let u = l.powf(a);
    match n {
        0 => u.ln_1p(),
        1 => a * u / (l * (1.0 + u)),
        2 => a * u * ((a - 1.0) - u) / (l * l * (1.0 + u) * (1.0 + u)),
        3 => {
            let f2 = a * u * ((a - 1.0) - u) / (l * l * (1.0 + u) * (1.0 + u));
            f2 / l * (a - a * u / (a - 1.0 - u) - 2.0 - 2.0 * a * u / (1.0 + u))
        }
        _ => f64::NAN,
    }
}

/// H for φ = ln(1+λ^α): ln(1+u) − αu/(1+u), u = λ^α, by series for small u.
fn geo_h(a: f64, l: f64) -> f64 {
    let u = if a == 1.0 { l } else { l.powf(a) };
    if u.abs() < 0.1 {
        let mut s = CompensatedSum::new();
        let mut pw = u;
        for k in 1..60 {
            let c = 1.0 / k as f64 - a;
            let term = if k % 2 == 1 { pw * c } else { -pw * c };
            s.add(term);
            if pw.abs() < 1e-18 * s.value().abs() {
                break;
            }
            pw *= u;
        }
        s.value()
    } else {
        u.ln_1p() - a * u / (1.0 + u)
    }
}

/// Geometric stable Lévy density ν(x) = (α/x) E_α(−x^α).
///
/// Uses the alternating series for moderate x^α and, beyond, the
/// completely monotone representation
/// E_α(−x^α) = (sin απ/π) ∫₀^∞ e^{−rx} r^{α−1}/(r^{2α} + 2r^α cos απ + 1) dr.
pub fn geo_stable_nu(alpha: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x={x} must be positive")));
    }
    if alpha == 1.0 {
        return Ok((-x).exp() / x);
    }
    let z = x.powf(alpha);
    if z <= 6.0 {
        if let Ok(ml) = mittag_leffler_series(alpha, z) {
            return Ok(alpha / x * ml);
        }
    }
    let sa = (alpha * PI).sin();
    let ca = (alpha * PI).cos();
    let f = |r: f64| {
        let ra = r.powf(alpha);
        (-r * x).exp() * r.powf(alpha - 1.0) / (ra * ra + 2.0 * ra * ca + 1.0)
    };
    let start = 1.0 / x;
    let lo = quad::log_march(&f, start, 0.0, Direction::TowardZero, &[], 1e-13, 0.0);
    let hi = quad::log_march(&f, start, f64::INFINITY, Direction::TowardInfinity, &[], 1e-13, 0.0);
    Ok(alpha / x * sa / PI * (lo.value + hi.value))
}

/// Tail of the geometric stable density from the same spectral representation:
/// w(x) = α (sin απ/π) ∫₀^∞ E₁(rx) r^{α−1}/(r^{2α} + 2r^α cos απ + 1) dr.
pub fn geo_stable_tail(alpha: f64, x: f64) -> f64 {
    let sa = (alpha * PI).sin();
    let ca = (alpha * PI).cos();
    let f = |r: f64| {
        if r * x > 740.0 {
            return 0.0;
        }
        let ra = r.powf(alpha);
        // r x may underflow; E₁(u) = −γ − ln u + O(u) there
        let e1 = if r * x < 1e-12 { -EULER_GAMMA - r.ln() - x.ln() } else { exp_int_e1(r * x) };
        e1 * r.powf(alpha - 1.0) / (ra * ra + 2.0 * ra * ca + 1.0)
    };
    let c = 1e-12 / x;
    if c <= GEO_SPLIT.1 {
        let start = 1.0 / x;
        let lo = quad::log_march(&f, start, 0.0, Direction::TowardZero, &[1.0], 1e-13, 0.0);
        let hi = quad::log_march(&f, start, f64::INFINITY, Direction::TowardInfinity, &[1.0], 1e-13, 0.0);
        return alpha * sa / PI * (lo.value + hi.value);
    }
    // Tiny x: marching over the ~ln(1/x) decades is slow, so on (0, a] and
    // [b, c] expand the rational factor in powers of r^{±α} and integrate
    // r^{β−1}(A − ln r), A = −γ − ln x, term by term.
    let (a, b) = GEO_SPLIT;
    let big_a = -EULER_GAMMA - x.ln();
    let prim = |r: f64, beta: f64| r.powf(beta) / beta * (big_a - r.ln() + 1.0 / beta);
    // 1/(1 + 2z cos απ + z²) = Σ U_k z^k with U_k = sin((k+1)(1−α)π)/sin απ
    let u = |k: usize| ((k + 1) as f64 * (1.0 - alpha) * PI).sin() / sa;
    let mut series = 0.0;
    for k in 0..2000 {
        let beta = alpha * (k + 1) as f64;
        let piece = prim(a, beta) + prim(c, -beta) - prim(b, -beta);
        series += u(k) * piece;
        // U_k vanishes at isolated k, so bound by |U_k| ≤ 1/sin απ instead
        if piece.abs() < 1e-17 * sa * series.abs() {
            break;
        }
    }
    let mid = quad::log_march(&f, a, b, Direction::TowardInfinity, &[1.0], 1e-13, 0.0);
    let far = quad::log_march(&f, c, f64::INFINITY, Direction::TowardInfinity, &[1.0 / x], 1e-13, 0.0);
    alpha * sa / PI * (series + mid.value + far.value)
}

/// Where the tiny-x tail expansion hands over to quadrature.
const GEO_SPLIT: (f64, f64) = (0.25, 4.0);

/// Tail of the oscillating density, integrated segment by segment in closed form.
pub fn osc_tail(r: f64) -> f64 {
    let a1 = OSC_A1;
    let a2 = osc_a2();
    let k = 4.0 / 3.0;
    let c = osc_psi(a1) - a1.powi(4);
    let d = osc_psi(a2) - k * a2.sqrt();
    // ∫ ds/(s(k√s + d)) over [u², ∞) with u = √s equals (2/d) ln(1 + d/(k u)).
    let seg3 = |from: f64| 2.0 / d * (d / (k * from.sqrt())).ln_1p();
    // ∫ ds/(s(s⁴ + c)) = (1/(4c)) ln(s⁴/(s⁴ + c)).
    let seg2_anti = |s: f64| {
        let s4 = s.powi(4);
        -(c / s4).ln_1p() / (4.0 * c)
    };
    // ∫ ds/(k s^{3/2}) = −(2/k) s^{−1/2}.
    let seg1 = |lo: f64, hi: f64| 2.0 / k * (lo.powf(-0.5) - hi.powf(-0.5));
    if r >= a2 {
        seg3(r)
    } else if r >= a1 {
        seg2_anti(a2) - seg2_anti(r) + seg3(a2)
    } else {
        seg1(r, a1) + seg2_anti(a2) - seg2_anti(a1) + seg3(a2)
    }
}

/// Σ (−1)ⁿ zⁿ/Γ(1+αn) with log-gamma terms and compensated summation.
pub fn mittag_leffler_series(alpha: f64, z: f64) -> Result<f64> {
    let lz = z.ln();
    let mut s = CompensatedSum::new();
    s.add(1.0);
    let mut max_term: f64 = 1.0;
    let mut prev = 1.0;
    for n in 1..2000 {
        let nf = n as f64;
        let term = (nf * lz - ln_gamma(1.0 + alpha * nf)).exp();
        max_term = max_term.max(term);
        s.add(if n % 2 == 1 { -term } else { term });
        let v = s.value();
        if term < prev && term < 1e-15 * v.abs() {
            if max_term > 1e5 * v.abs() {
                return Err(Error::Precision(format!("Mittag-Leffler series cancellation at z={z}")));
            }
            return Ok(v);
        }
        prev = term;
    }
    Err(Error::Precision(format!("Mittag-Leffler series did not converge at z={z}")))
}

/// Family name plus named parameters, e.g. `stable:alpha=0.5` or
/// `log_perturbed:gamma1=0.5,p=1,gamma2=3,q=0`. Mixtures take
/// `parts=w@beta|w@beta`; tabulated densities carry their knots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSpec {
    pub family: String,
    pub params: Vec<(String, String)>,
    pub knots: Vec<(f64, f64)>,
}

impl ModelSpec {
    pub fn new(family: &str) -> Self {
        ModelSpec { family: family.to_string(), ..Default::default() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn num(&self, key: &str) -> Result<f64> {
        let v = self.raw(key).ok_or_else(|| Error::Config(format!("{} needs parameter '{key}'", self.family)))?;
        v.trim().parse().map_err(|_| Error::Config(format!("parameter {key}='{v}' is not a number")))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("{} does not take parameter '{k}'", self.family)));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        if family.is_empty() {
            return Err(Error::Config("empty model family".into()));
        }
        let mut spec = ModelSpec::new(family.trim());
        for kv in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("model parameter '{kv}' is not key=value")))?;
            spec.params.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(spec)
    }
}

/// Builds a catalog model from its spec.
pub fn make_catalog_model(spec: &ModelSpec) -> Result<LevyModel> {
    match spec.family.as_str() {
        "stable" => {
            spec.check_keys(&["alpha"])?;
            LevyModel::stable(spec.num("alpha")?)
        }
        "truncated_stable" => {
            spec.check_keys(&["alpha"])?;
            LevyModel::truncated_stable(spec.num("alpha")?)
        }
        "gamma" => {
            spec.check_keys(&[])?;
            LevyModel::gamma()
        }
        "geometric_stable" => {
            spec.check_keys(&["alpha"])?;
            LevyModel::geometric_stable(spec.num("alpha")?)
        }
        "stable_mixture" => {
            spec.check_keys(&["parts"])?;
            let raw = spec.raw("parts").ok_or_else(|| Error::Config("stable_mixture needs parts=w@beta|...".into()))?;
            let mut parts = Vec::new();
            for p in raw.split('|') {
                let (w, b) = p.split_once('@').ok_or_else(|| Error::Config(format!("mixture part '{p}' is not w@beta")))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("'{x}' is not a number")));
                parts.push((parse(w)?, parse(b)?));
            }
            LevyModel::stable_mixture(parts)
        }
        "log_perturbed" => {
            spec.check_keys(&["gamma1", "p", "gamma2", "q"])?;
            LevyModel::log_perturbed(spec.num("gamma1")?, spec.num("p")?, spec.num("gamma2")?, spec.num("q")?)
        }
        "oscillating" => {
            spec.check_keys(&[])?;
            LevyModel::oscillating()
        }
        "tabulated" => {
            spec.check_keys(&["file"])?;
            LevyModel::tabulated(&spec.knots)
        }
        other => Err(Error::Config(format!("unknown model family '{other}'"))),
    }
}
