//! Laplace exponent φ, its derivatives, H, the tail w, their inverses and the
//! derived scales b, σ, D, θ and 𝓗.

use crate::error::{Error, Result};
use crate::levy_model::{Family, LevyModel};
use crate::quad::{self, Direction, Tol};
use crate::roots::{brent, golden_max, invert_positive};
use crate::special::h_kernel;
use num_complex::Complex64;
use parking_lot::RwLock;
use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::sync::Arc;

/// Function to invert with [`PhiEvaluator::invert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inverse {
    H,
    Phi,
    PhiPrime,
    W,
}

/// Saddle point data at (t, x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleState {
    pub t: f64,
    pub x: f64,
    pub sigma: f64,
    pub h_sigma: f64,
    pub neg_phi2: f64,
    /// σ √(t(−φ″(σ)))
    pub script_t: f64,
    /// (σ₀ ∨ σ) √(t(−φ″(σ)))
    pub script_t0: f64,
}

impl SaddleState {
    /// √(t(−φ″(σ))), the spatial scale of the tilted law.
    pub fn scale(&self) -> f64 {
        (self.t * self.neg_phi2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaBranch {
    BelowMode,
    Root,
    BeyondD,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaResult {
    pub t: f64,
    pub y: f64,
    pub theta: f64,
    pub branch: ThetaBranch,
}

/// Scales depending on t only, computed once per t.
#[derive(Debug, Clone)]
pub struct TimeScales {
    pub t: f64,
    /// H⁻¹(1/t)
    pub h_inv: f64,
    /// w⁻¹(2e/t), left end of the θ interval.
    pub s_lo: f64,
    /// H⁻¹(1/t)⁻¹, right end of the θ interval.
    pub s_hi: f64,
    /// b(t) = φ′(H⁻¹(1/t))
    pub b: f64,
    /// D(t) and its maximizer.
    pub d: f64,
    pub d_arg: f64,
    /// (s, t s H(1/s)) on a log grid over [s_lo, s_hi] with at least
    /// `THETA_GRID` points.
    pub grid: Vec<(f64, f64)>,
}

pub const THETA_GRID: usize = 512;
// |ln λ| bound of the bracketing search in `roots::invert_positive`
const LN_EDGE: f64 = 699.0;
const SCRIPT_H_FLOOR_AT: f64 = 1e-30;

// cache kinds
const K_TAIL: u8 = 4;
const K_H: u8 = 5;
const K_INV: u8 = 10;

/// Quadrature-backed evaluator for a fixed model. Cheap to share across
/// threads; the caches take a write lock only on insertion.
pub struct PhiEvaluator {
    model: LevyModel,
    rel: f64,
    sigma0: f64,
    // failures are deterministic too, so they are cached alongside values
    cache: RwLock<HashMap<(u8, u64), Result<f64>>>,
    scales: RwLock<HashMap<u64, Arc<TimeScales>>>,
    phi_prime_zero: RwLock<Option<f64>>,
}

impl PhiEvaluator {
    pub fn new(model: LevyModel) -> Self {
        Self::with_tol(model, 1e-10)
    }

    pub fn with_tol(model: LevyModel, rel: f64) -> Self {
        PhiEvaluator {
            model,
            rel,
            sigma0: 1.0,
            cache: RwLock::new(HashMap::new()),
            scales: RwLock::new(HashMap::new()),
            phi_prime_zero: RwLock::new(None),
        }
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn tol(&self) -> f64 {
        self.rel
    }

    pub fn set_sigma0(&mut self, s0: f64) {
        self.sigma0 = s0;
    }

    fn cached(&self, kind: u8, arg: f64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let key = (kind, arg.to_bits());
        if let Some(v) = self.cache.read().get(&key) {
            return v.clone();
        }
        let v = f();
        self.cache.write().insert(key, v.clone());
        v
    }

    fn moment_hook_eps(&self, lambda: f64) -> Option<(f64, f64)> {
        match self.model.family {
            Family::LogPerturbed { gamma1: 1.0, .. } => {
                let eps = 1e-13 * (1.0 / lambda).min(1.0);
                self.model.small_moment(1.0, eps).map(|m| (eps, m))
            }
            _ => None,
        }
    }

    fn check(&self, q: &quad::QuadResult<f64>, what: &str, arg: f64) -> Result<f64> {
        if !q.value.is_finite() || q.err > 1e-6 * q.value.abs().max(1e-300) {
            return Err(Error::Quadrature(format!(
                "{what} at {arg:e}: {:.6e} ± {:.3e} ({})",
                q.value, q.err, self.model.name
            )));
        }
        Ok(q.value)
    }

    /// φ^{(n)}(λ) for n = 0..3.
    pub fn phi_deriv(&self, lambda: f64, n: u8) -> Result<f64> {
        if n > 3 {
            return Err(Error::Unsupported(format!("derivative order {n}")));
        }
        if lambda < 0.0 && lambda > self.model.laplace_abscissa() {
            if let Some(v) = self.model.phi_closed(lambda, n) {
                return Ok(v);
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ={lambda} must be nonnegative")));
        }
        if lambda == 0.0 {
            return match n {
                0 => Ok(0.0),
                1 => Ok(self.phi_prime_zero()),
                _ => Err(Error::Domain("higher derivatives at λ=0".into())),
            };
        }
        if let Some(v) = self.model.phi_closed(lambda, n) {
            return Ok(v);
        }
        self.cached(n, lambda, || self.phi_quad(lambda, n))
    }

    fn phi_quad(&self, l: f64, n: u8) -> Result<f64> {
        let m = &self.model;
        let br = m.breaks();
        let s0 = 1.0 / l;
        let rel = self.rel;
        let hook = if n <= 1 { self.moment_hook_eps(l) } else { None };
        let (near_lim, near_extra) = match hook {
            Some((eps, m1)) => (eps, if n == 0 { l * m1 } else { m1 }),
            None => (0.0, 0.0),
        };
        if n == 0 {
            let f = |s: f64| -(-l * s).exp_m1() * m.nu(s);
            let near = quad::log_march(&f, s0, near_lim, Direction::TowardZero, br, rel, 0.0);
            let big = 42.0 * s0;
            let far = quad::log_march(&f, s0, big, Direction::TowardInfinity, br, rel, 0.0);
            let tail = self.tail(big)?;
            let q = quad::QuadResult { value: near.value + near_extra + far.value + tail, err: near.err + far.err, evals: 0 };
            self.check(&q, "phi", l)
        } else {
            let f = |s: f64| s.powi(n as i32) * (-l * s).exp() * m.nu(s);
            let near = quad::log_march(&f, s0, near_lim, Direction::TowardZero, br, rel, 0.0);
            let far = quad::log_march(&f, s0, f64::INFINITY, Direction::TowardInfinity, br, rel, 0.0);
            let q = quad::QuadResult { value: near.value + near_extra + far.value, err: near.err + far.err, evals: 0 };
            let v = self.check(&q, "phi derivative", l)?;
            Ok(if n % 2 == 1 { v } else { -v })
        }
    }

    /// H(λ) = φ(λ) − λφ′(λ) = ∫(1 − e^{−λs} − λs e^{−λs}) ν(s) ds.
    pub fn h_of(&self, lambda: f64) -> Result<f64> {
        if lambda < 0.0 && lambda > self.model.laplace_abscissa() {
            if let Some(v) = self.model.h_closed(lambda) {
                return Ok(v);
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ={lambda} must be nonnegative")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.model.h_closed(lambda) {
            return Ok(v);
        }
        self.cached(K_H, lambda, || {
            let m = &self.model;
            let br = m.breaks();
            let s0 = 1.0 / lambda;
            let f = |s: f64| h_kernel(lambda * s) * m.nu(s);
            let near = quad::log_march(&f, s0, 0.0, Direction::TowardZero, br, self.rel, 0.0);
            let big = 42.0 * s0;
            let far = quad::log_march(&f, s0, big, Direction::TowardInfinity, br, self.rel, 0.0);
            let tail = self.tail(big)?;
            let q = quad::QuadResult { value: near.value + far.value + tail, err: near.err + far.err, evals: 0 };
            self.check(&q, "H", lambda)
        })
    }

    /// w(r) = ν(r, ∞).
    pub fn tail(&self, r: f64) -> Result<f64> {
        if let Some(v) = self.model.tail_closed(r) {
            return Ok(v);
        }
        self.cached(K_TAIL, r, || self.model.eval_tail(r))
    }

    /// φ′(0⁺) = ∫ s ν(s) ds, possibly +∞.
    pub fn phi_prime_zero(&self) -> f64 {
        if let Some(v) = *self.phi_prime_zero.read() {
            return v;
        }
        let v = match &self.model.family {
            Family::Stable { .. } | Family::StableMixture { .. } | Family::Oscillating => f64::INFINITY,
            Family::GeometricStable { alpha } if *alpha < 1.0 => f64::INFINITY,
            Family::GeometricStable { .. } | Family::Gamma => 1.0,
            Family::TruncatedStable { alpha } => 1.0 / (1.0 - alpha),
            _ => {
                let m = &self.model;
                let f = |s: f64| s * m.nu(s);
                let near = quad::log_march(&f, 1.0, 0.0, Direction::TowardZero, m.breaks(), 1e-12, 0.0);
                let far = quad::log_march(&f, 1.0, f64::INFINITY, Direction::TowardInfinity, m.breaks(), 1e-12, 0.0);
                let v = near.value + far.value;
                if v.is_finite() && far.err <= 1e-8 * v {
                    v
                } else {
                    f64::INFINITY
                }
            }
        };
        *self.phi_prime_zero.write() = Some(v);
        v
    }

    fn eval_which(&self, which: Inverse, l: f64) -> Result<f64> {
        match which {
            Inverse::H => self.h_of(l),
            Inverse::Phi => self.phi_deriv(l, 0),
            Inverse::PhiPrime => self.phi_deriv(l, 1),
            Inverse::W => self.tail(l),
        }
    }

    /// Inverse of H, φ (increasing) or φ′, w (decreasing) at v > 0.
    pub fn invert(&self, which: Inverse, v: f64) -> Result<f64> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::OutOfRange(format!("{which:?}⁻¹ needs a positive finite value, got {v}")));
        }
        if which == Inverse::PhiPrime && v >= self.phi_prime_zero() {
            return Err(Error::OutOfRange(format!("φ′⁻¹({v}) with φ′(0) = {}", self.phi_prime_zero())));
        }
        let kind = K_INV
            + match which {
                Inverse::H => 0,
                Inverse::Phi => 1,
                Inverse::PhiPrime => 2,
                Inverse::W => 3,
            };
        self.cached(kind, v, || {
            if let Some(l) = self.closed_inverse(which, v) {
                return Ok(l);
            }
            let increasing = matches!(which, Inverse::H | Inverse::Phi);
            // cheap rejection when the solution lies beyond the representable range
            let edge = if increasing { LN_EDGE.exp() } else { (-LN_EDGE).exp() };
            if let Ok(fe) = self.eval_which(which, edge) {
                if fe < v {
                    return Err(Error::OutOfRange(format!("{which:?}⁻¹({v}) lies beyond λ = {edge:e}")));
                }
            }
            let l = invert_positive(&mut |l: f64| self.eval_which(which, l), v, increasing, 1e-13, 600)?;
            let back = self.eval_which(which, l)?;
            if (back - v).abs() > 1e-8 * v {
                return Err(Error::Precision(format!("{which:?}⁻¹({v}) round trip gave {back}")));
            }
            Ok(l)
        })
    }

    fn closed_inverse(&self, which: Inverse, v: f64) -> Option<f64> {
        match (&self.model.family, which) {
            (Family::Stable { alpha }, Inverse::H) => Some((v / (1.0 - alpha)).powf(1.0 / alpha)),
            (Family::Stable { alpha }, Inverse::Phi) => Some(v.powf(1.0 / alpha)),
            (Family::Stable { alpha }, Inverse::PhiPrime) => Some((v / alpha).powf(1.0 / (alpha - 1.0))),
            (Family::Gamma, Inverse::PhiPrime) => Some(1.0 / v - 1.0),
            (Family::GeometricStable { alpha }, Inverse::PhiPrime) if *alpha == 1.0 => Some(1.0 / v - 1.0),
            (Family::Gamma, Inverse::Phi) => Some(v.exp_m1()),
            _ => None,
        }
    }

    /// b(t) = φ′(H⁻¹(1/t)).
    pub fn b_of(&self, t: f64) -> Result<f64> {
        Ok(self.scales(t)?.b)
    }

    /// Saddle point σ = (φ′)⁻¹(x/t) and associated quantities.
    pub fn saddle(&self, t: f64, x: f64) -> Result<SaddleState> {
        if !(t > 0.0) || !(x > 0.0) {
            return Err(Error::Domain(format!("saddle needs t, x > 0 (t={t}, x={x})")));
        }
        let p0 = self.phi_prime_zero();
        let sigma = if x < t * p0 {
            self.invert(Inverse::PhiPrime, x / t)?
        } else {
            // beyond tφ′(0) the saddle point is negative; only where φ continues analytically
            match self.closed_inverse(Inverse::PhiPrime, x / t) {
                Some(s) if s > self.model.laplace_abscissa() => s,
                _ => return Err(Error::Domain(format!("x={x} ≥ tφ′(0) = {}", t * p0))),
            }
        };
        let h_sigma = self.h_of(sigma)?;
        let neg_phi2 = -self.phi_deriv(sigma, 2)?;
        let root = (t * neg_phi2).sqrt();
        Ok(SaddleState {
            t,
            x,
            sigma,
            h_sigma,
            neg_phi2,
            script_t: sigma * root,
            script_t0: sigma.max(self.sigma0) * root,
        })
    }

    /// t s H(1/s)
    fn g(&self, t: f64, s: f64) -> Result<f64> {
        Ok(t * s * self.h_of(1.0 / s)?)
    }

    /// Per-t scales: H⁻¹(1/t), w⁻¹(2e/t), b(t), D(t) and the θ grid.
    pub fn scales(&self, t: f64) -> Result<Arc<TimeScales>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("t={t} must be positive")));
        }
        if let Some(s) = self.scales.read().get(&t.to_bits()) {
            return Ok(s.clone());
        }
        let h_inv = self.invert(Inverse::H, 1.0 / t)?;
        let s_hi = 1.0 / h_inv;
        let s_lo = self.invert(Inverse::W, 2.0 * E / t)?;
        let b = self.phi_deriv(h_inv, 1)?;
        let mut grid = Vec::with_capacity(THETA_GRID);
        let (ll, lh) = (s_lo.ln(), s_hi.ln());
        if s_lo < s_hi {
            // Interior points sit on a dyadic lattice in ln s so that nearby
            // times share cached H values.
            let step = 2f64.powi(((lh - ll) / (THETA_GRID - 1) as f64).log2().floor() as i32);
            grid.push((s_lo, self.g(t, s_lo)?));
            let mut k = (ll / step).floor() + 1.0;
            while k * step < lh {
                let s = (k * step).exp();
                grid.push((s, self.g(t, s)?));
                k += 1.0;
            }
            grid.push((s_hi, self.g(t, s_hi)?));
        } else {
            grid.push((s_hi, self.g(t, s_hi)?));
        }
        let (d, d_arg) = self.d_from_grid(t, &grid)?;
        let sc = Arc::new(TimeScales { t, h_inv, s_lo, s_hi, b, d, d_arg, grid });
        self.scales.write().insert(t.to_bits(), sc.clone());
        Ok(sc)
    }

    /// D(t) = t max s H(1/s) over [w⁻¹(2e/t), H⁻¹(1/t)⁻¹]: best point of the
    /// θ grid, then golden-section refinement between its neighbours.
    fn d_from_grid(&self, t: f64, grid: &[(f64, f64)]) -> Result<(f64, f64)> {
        let (mut i_best, mut best) = (0, grid[0].1);
        for (i, p) in grid.iter().enumerate() {
            if p.1 > best {
                (i_best, best) = (i, p.1);
            }
        }
        let mut arg = grid[i_best].0;
        if grid.len() > 2 {
            let a = grid[i_best.saturating_sub(1)].0.ln();
            let b = grid[(i_best + 1).min(grid.len() - 1)].0.ln();
            let (u, v) = golden_max(&mut |u: f64| self.g(t, u.exp()), a, b, 1e-8)?;
            if v > best {
                (best, arg) = (v, u.exp());
            }
        }
        Ok((best, arg))
    }

    /// D(t).
    pub fn d_of(&self, t: f64) -> Result<f64> {
        Ok(self.scales(t)?.d)
    }

    /// θ(t, y): the minimal solution of t s H(1/s) = y in [w⁻¹(2e/t), H⁻¹(1/t)⁻¹]
    /// between the two constant branches.
    pub fn theta_of(&self, t: f64, y: f64) -> Result<ThetaResult> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("y={y} must be nonnegative")));
        }
        let sc = self.scales(t)?;
        if y < sc.s_hi {
            return Ok(ThetaResult { t, y, theta: sc.s_hi, branch: ThetaBranch::BelowMode });
        }
        if y > sc.d {
            return Ok(ThetaResult { t, y, theta: sc.s_lo, branch: ThetaBranch::BeyondD });
        }
        let grid = &sc.grid;
        let sign0 = (grid[0].1 - y).signum();
        if grid[0].1 == y {
            return Ok(ThetaResult { t, y, theta: grid[0].0, branch: ThetaBranch::Root });
        }
        let mut bracket = None;
        for i in 1..grid.len() {
            let d = grid[i].1 - y;
            if d == 0.0 {
                return Ok(ThetaResult { t, y, theta: grid[i].0, branch: ThetaBranch::Root });
            }
            if d.signum() != sign0 {
                bracket = Some((grid[i - 1].0, grid[i].0));
                break;
            }
        }
        let (a, b) = match bracket {
            Some(br) => br,
            // g stays above y up to s_hi, where g(s_hi) = s_hi ≈ y up to rounding
            None if sign0 > 0.0 => {
                return Ok(ThetaResult { t, y, theta: sc.s_hi, branch: ThetaBranch::Root });
            }
            None => {
                // y lies between the grid maximum and D: the maximizer brackets it.
                let i = grid.partition_point(|p| p.0 < sc.d_arg).max(1).min(grid.len() - 1);
                let left = grid[..i].iter().rev().find(|p| p.0 < sc.d_arg).map(|p| p.0).unwrap_or(sc.s_lo);
                (left, sc.d_arg)
            }
        };
        let mut f = |u: f64| -> Result<f64> { Ok(self.g(t, u.exp())? - y) };
        let (ua, ub) = (a.ln(), b.ln());
        let (fa, fb) = (f(ua)?, f(ub)?);
        let u = if fa.signum() == fb.signum() {
            if fa.abs() < fb.abs() { ua } else { ub }
        } else {
            brent(&mut f, ua, ub, fa, fb, 1e-14, 200)?
        };
        Ok(ThetaResult { t, y, theta: u.exp(), branch: ThetaBranch::Root })
    }

    fn check_script_h(&self) -> Result<()> {
        if self.model.meta.flags.l_mixed || self.phi_prime_zero().is_finite() {
            Ok(())
        } else {
            Err(Error::Condition(format!("𝓗 needs (L.Mixed) or finite φ′(0); {} has neither", self.model.name)))
        }
    }

    /// 𝓗(r) = inf_{s ≥ r} 1/(s H(1/s)).
    pub fn script_h(&self, r: f64) -> Result<f64> {
        self.check_script_h()?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("r={r} must be positive")));
        }
        let h = |s: f64| -> Result<f64> { Ok(s * self.h_of(1.0 / s)?) };
        let per_decade = 16;
        let step = 10f64.ln() / per_decade as f64;
        let mut best = (0usize, h(r)?);
        let mut k = 0usize;
        while k < per_decade * 60 {
            k += 1;
            let s = r * (step * k as f64).exp();
            let v = h(s)?;
            if v > best.1 {
                best = (k, v);
            }
            if k >= 2 * per_decade && k - best.0 >= 2 * per_decade {
                break;
            }
        }
        if best.0 > 0 {
            let lr = r.ln();
            let a = lr + step * (best.0 as f64 - 1.0);
            let b = lr + step * (best.0 as f64 + 1.0);
            let (_, v) = golden_max(&mut |u: f64| h(u.exp()), a, b, 1e-9)?;
            if v > best.1 {
                best.1 = v;
            }
        }
        Ok(1.0 / best.1)
    }

    /// 𝓗⁻¹(u) = sup{r : 𝓗(r) ≤ u}, or 0 when no r qualifies.
    pub fn script_h_inv(&self, u: f64) -> Result<f64> {
        self.check_script_h()?;
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("u={u} must be positive")));
        }
        let step = 4f64.ln();
        let mut lo = 0.0f64;
        let mut hi;
        if self.script_h(1.0)? <= u {
            hi = lo + step;
            let mut n = 0;
            while self.script_h(hi.exp())? <= u {
                lo = hi;
                hi += step;
                n += 1;
                if n > 300 {
                    return Err(Error::OutOfRange(format!("𝓗 stays below {u}")));
                }
            }
        } else {
            // s H(1/s) → 0 as s → 0, so 𝓗 is flat near 0; below that floor
            // the set is empty and its supremum is 0
            if self.script_h(SCRIPT_H_FLOOR_AT)? > u {
                return Ok(0.0);
            }
            hi = 0.0;
            lo = -step;
            let mut n = 0;
            while self.script_h(lo.exp())? > u {
                hi = lo;
                lo -= step;
                n += 1;
                if n > 300 {
                    return Err(Error::OutOfRange(format!("𝓗 exceeds {u} everywhere")));
                }
            }
        }
        while hi - lo > 1e-12 {
            let m = 0.5 * (lo + hi);
            if self.script_h(m.exp())? <= u {
                lo = m;
            } else {
                hi = m;
            }
        }
        Ok(lo.exp())
    }

    /// φ(z) = ∫(1 − e^{−zs}) ν(s) ds for Re z ≥ 0.
    pub fn phi_complex(&self, z: Complex64) -> Result<Complex64> {
        if z.re < 0.0 {
            if z.re > self.model.laplace_abscissa() {
                if let Some(v) = self.model.phi_complex_closed(z) {
                    return Ok(v);
                }
            }
            return Err(Error::Domain(format!("Re z = {} < 0", z.re)));
        }
        if z.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if let Some(v) = self.model.phi_complex_closed(z) {
            return Ok(v);
        }
        if z.im == 0.0 {
            return Ok(Complex64::new(self.phi_deriv(z.re, 0)?, 0.0));
        }
        let m = &self.model;
        let br = m.breaks();
        let az = z.norm();
        let s0 = 1.0 / az;
        let hook = self.moment_hook_eps(az);
        let near_lim = hook.map_or(0.0, |h| h.0);
        let f_near = |s: f64| -> Complex64 { -cexp_m1(-z * s) * m.nu(s) };
        let near = quad::log_march(&f_near, s0, near_lim, Direction::TowardZero, br, self.rel, 0.0);
        let mut value = near.value + hook.map_or(Complex64::new(0.0, 0.0), |h| z * h.1);
        let (lo_sup, hi_sup) = m.support();
        let _ = lo_sup;
        if s0 >= hi_sup {
            return Ok(value);
        }
        let w0 = self.tail(s0)?;
        let scale = near.value.norm() + w0;
        let abs = 1e-13 * scale;
        let f = |s: f64| -> Complex64 { (-z * s).exp() * m.nu(s) };
        let far = if z.re >= z.im.abs() {
            quad::log_march(&f, s0, hi_sup, Direction::TowardInfinity, br, self.rel, abs).value
        } else {
            let h = PI / z.im.abs();
            let last_break = br.iter().cloned().filter(|&b| b > s0 && b < hi_sup).fold(s0, f64::max);
            let mut acc = blocks(&f, s0, last_break.min(hi_sup), h, br, self.rel, abs);
            if hi_sup.is_finite() {
                acc += blocks(&f, last_break, hi_sup, h, &[], self.rel, abs);
            } else {
                let r = quad::oscillatory(&f, last_break, h, self.rel, abs, 20000)?;
                acc += r.value;
            }
            acc
        };
        value = value + Complex64::new(w0, 0.0) - far;
        Ok(value)
    }
}

/// e^w − 1 without cancellation for small |w|.
pub fn cexp_m1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = w;
        let mut sum = w;
        let mut k = 1.0;
        while term.norm() > 1e-17 * sum.norm() {
            k += 1.0;
            term = term * w / k;
            sum += term;
        }
        sum
    } else {
        w.exp() - 1.0
    }
}

/// ∫_a^b f over consecutive blocks of length h, split at breakpoints.
fn blocks(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, h: f64, breaks: &[f64], rel: f64, abs: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = a;
    while lo < b {
        let mut hi = (lo + h).min(b);
        for &br in breaks {
            if br > lo && br < hi {
                hi = br;
            }
        }
        acc += quad::adaptive(f, lo, hi, Tol { abs: abs * 1e-3, rel: rel * 0.1, max_panels: 100 }).value;
        lo = hi;
    }
    acc
}
