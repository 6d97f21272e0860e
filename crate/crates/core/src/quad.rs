//! Adaptive Gauss–Kronrod quadrature over real and complex integrands.
//!
//! Three drivers are provided:
//! - [`adaptive`]: global bisection on a finite interval (21-point Kronrod rule).
//! - [`log_march`]: integration of `f(s) ds` outward from a point in the variable
//!   `v = ln s`, panel by panel, until the geometric tail is negligible.
//! - [`oscillatory`]: integration over `[a, ∞)` of an integrand oscillating with a
//!   known half period, summing blocks and accelerating with Wynn's epsilon.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Div, Mul, Sub};

/// Values that can be integrated: `f64` and `Complex64`.
pub trait QuadValue:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Div<Output = Self>
    + Default
    + Send
    + Sync
{
    fn norm(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    #[inline]
    fn norm(&self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    #[inline]
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    #[inline]
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub err: f64,
    pub evals: usize,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
/// Returns (integral, error estimate, integral of |f|).
#[allow(clippy::needless_range_loop)]
pub fn gk21<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64, f64) {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let fc = f(centr);
    let mut resg = T::default();
    let mut resk = fc * WGK[10];
    let mut resabs = fc.norm() * WGK[10];
    let mut fv1 = [T::default(); 10];
    let mut fv2 = [T::default(); 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg = resg + (f1 + f2) * WG[j];
        resk = resk + (f1 + f2) * WGK[jtw];
        resabs += WGK[jtw] * (f1.norm() + f2.norm());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk = resk + (f1 + f2) * WGK[jtwm1];
        resabs += WGK[jtwm1] * (f1.norm() + f2.norm());
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).norm() + (fv2[j] - reskh).norm());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = ((resk - resg) * hlgth).norm();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (1.0f64).min((200.0 * abserr / resasc).powf(1.5));
    }
    let uflow = f64::MIN_POSITIVE;
    let epmach = f64::EPSILON;
    if resabs > uflow / (50.0 * epmach) {
        abserr = abserr.max(epmach * 50.0 * resabs);
    }
    (result, abserr, resabs)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Tolerances and subdivision budget for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol { abs: 0.0, rel, max_panels: 400 }
    }
    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

/// Adaptive global bisection on `[a, b]`. Never fails: if the budget is
/// exhausted the best estimate is returned together with its error.
pub fn adaptive<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64, tol: Tol) -> QuadResult<T> {
    if a == b {
        return QuadResult { value: T::default(), err: 0.0, evals: 0 };
    }
    let (v, e, _) = gk21(f, a, b);
    let mut evals = 21;
    let mut total = v;
    let mut total_err = e;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    while heap.len() < tol.max_panels {
        // Below ~1e-13 the Kronrod error estimate is dominated by its roundoff floor.
        let target = tol.abs.max(tol.rel.max(1e-13) * total.norm());
        if total_err <= target || !total_err.is_finite() {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1, _) = gk21(f, worst.a, mid);
        let (v2, e2, _) = gk21(f, mid, worst.b);
        evals += 42;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to avoid drift from incremental updates.
    let mut value = T::default();
    let mut err = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        err += p.err;
    }
    QuadResult { value, err, evals }
}

/// Direction of a [`log_march`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    TowardZero,
    TowardInfinity,
}

/// Integrates `f(s) ds` from `start` toward 0 (down to `limit`) or toward
/// infinity (up to `limit`), using unit panels in `v = ln s`. Panels are split
/// at `breaks` (in `s`). Stops once the geometric tail estimate falls below
/// `rel * |total|` (or `abs`). The tail estimate is added to `err`, not to the value.
pub fn log_march<T: QuadValue>(
    f: &impl Fn(f64) -> T,
    start: f64,
    limit: f64,
    dir: Direction,
    breaks: &[f64],
    rel: f64,
    abs: f64,
) -> QuadResult<T> {
    let g = |v: f64| {
        let s = v.exp();
        f(s) * s
    };
    let v_start = start.ln();
    let v_limit = if limit <= 0.0 {
        -745.0
    } else if limit.is_infinite() {
        709.0
    } else {
        limit.ln().clamp(-745.0, 709.0)
    };
    let sgn = if dir == Direction::TowardZero { -1.0 } else { 1.0 };
    if (v_limit - v_start) * sgn <= 0.0 {
        return QuadResult { value: T::default(), err: 0.0, evals: 0 };
    }
    let mut vbreaks: Vec<f64> = breaks
        .iter()
        .filter(|&&b| b > 0.0 && b.is_finite())
        .map(|b| b.ln())
        .filter(|&vb| (vb - v_start) * sgn > 0.0 && (v_limit - vb) * sgn > 0.0)
        .collect();
    vbreaks.sort_by(|x, y| ((x - v_start) * sgn).partial_cmp(&((y - v_start) * sgn)).unwrap());

    let width = 1.0;
    let mut total = T::default();
    let mut err = 0.0;
    let mut evals = 0;
    let mut v0 = v_start;
    let mut prev_norm = f64::NAN;
    let mut small_run = 0;
    let mut bi = 0;
    let mut panels = 0;
    loop {
        let mut v1 = v0 + sgn * width;
        if (v1 - v_limit) * sgn > 0.0 {
            v1 = v_limit;
        }
        if bi < vbreaks.len() && (v1 - vbreaks[bi]) * sgn >= 0.0 {
            v1 = vbreaks[bi];
            bi += 1;
        }
        let (lo, hi) = if sgn > 0.0 { (v0, v1) } else { (v1, v0) };
        let r = adaptive(&g, lo, hi, Tol { abs: abs * 1e-3, rel: rel * 0.1, max_panels: 200 });
        evals += r.evals;
        total = total + r.value;
        err += r.err;
        panels += 1;
        let pn = r.value.norm();
        let done_at_limit = (v1 - v_limit).abs() < 1e-300 || v1 == v_limit;
        if done_at_limit {
            break;
        }
        let past_breaks = bi >= vbreaks.len();
        let tn = total.norm();
        if past_breaks && panels >= 2 {
            if pn == 0.0 {
                small_run += 1;
                if small_run >= 3 {
                    break;
                }
            } else if prev_norm.is_finite() && prev_norm > 0.0 {
                let rho = pn / prev_norm;
                if rho < 0.9 {
                    let tail = pn * rho / (1.0 - rho);
                    if tail <= rel * 1e-2 * tn || tail <= abs * 1e-2 {
                        err += tail;
                        break;
                    }
                }
                small_run = 0;
            }
        }
        if panels > 1600 {
            err += pn * 10.0;
            break;
        }
        prev_norm = pn;
        v0 = v1;
    }
    QuadResult { value: total, err, evals }
}

/// Wynn epsilon extrapolation of the limit of a sequence of partial sums.
/// Returns the highest even-column estimate on the last anti-diagonal and the
/// difference to the previous such estimate as an error proxy.
pub fn wynn_epsilon<T: QuadValue>(s: &[T]) -> (T, f64) {
    let n = s.len();
    if n == 0 {
        return (T::default(), f64::INFINITY);
    }
    if n < 3 {
        let e = if n == 2 { (s[1] - s[0]).norm() } else { f64::INFINITY };
        return (s[n - 1], e);
    }
    // e_prev = column k-1, e_cur = column k; columns indexed by start position.
    let mut e_prev: Vec<T> = vec![T::default(); n + 1];
    let mut e_cur: Vec<T> = s.to_vec();
    let mut best = s[n - 1];
    let mut best_prev = s[n - 2];
    let mut k = 0;
    loop {
        let len = e_cur.len();
        if len < 2 {
            break;
        }
        let mut next = Vec::with_capacity(len - 1);
        for i in 0..len - 1 {
            let d = e_cur[i + 1] - e_cur[i];
            if d.norm() == 0.0 || !d.is_finite_value() {
                // Converged column: stop here.
                return (e_cur[len - 1], (best - best_prev).norm().min(d.norm()));
            }
            let one = one_like::<T>(d);
            next.push(e_prev[i + 1] + one / d);
        }
        k += 1;
        e_prev = e_cur;
        e_cur = next;
        if k % 2 == 0 {
            let m = e_cur.len();
            if m >= 1 {
                best_prev = if m >= 2 { e_cur[m - 2] } else { best };
                best = e_cur[m - 1];
            }
        }
    }
    (best, (best - best_prev).norm())
}

#[allow(clippy::eq_op)]
fn one_like<T: QuadValue>(d: T) -> T {
    // d / d == 1 in the value type.
    d / d
}

/// Integrates `f` over `[a, ∞)` where `f` oscillates with half period
/// `half_period`. Block sums are accumulated; the limit is extrapolated with
/// Wynn's epsilon once the blocks stop decaying fast enough to simply stop.
pub fn oscillatory<T: QuadValue>(
    f: &impl Fn(f64) -> T,
    a: f64,
    half_period: f64,
    rel: f64,
    abs: f64,
    max_blocks: usize,
) -> Result<QuadResult<T>> {
    let mut sums: Vec<T> = Vec::new();
    let mut total = T::default();
    let mut err = 0.0;
    let mut evals = 0;
    let mut last_est: Option<T> = None;
    let mut stable_hits = 0;
    let mut tiny_run = 0;
    let mut max_block = 0.0f64;
    for k in 0..max_blocks {
        let lo = a + k as f64 * half_period;
        let hi = lo + half_period;
        let r = adaptive(f, lo, hi, Tol { abs: abs * 1e-3, rel: rel * 0.01, max_panels: 100 });
        evals += r.evals;
        err += r.err;
        total = total + r.value;
        let bn = r.value.norm();
        max_block = max_block.max(bn);
        sums.push(total);
        let scale = total.norm().max(abs);
        if bn <= 1e-3 * rel * scale || bn <= abs * 1e-3 {
            tiny_run += 1;
            if tiny_run >= 3 {
                return Ok(QuadResult { value: total, err, evals });
            }
        } else {
            tiny_run = 0;
        }
        if sums.len() >= 8 {
            let start = sums.len().saturating_sub(40);
            let (est, _) = wynn_epsilon(&sums[start..]);
            if let Some(prev) = last_est {
                let d = (est - prev).norm();
                if d <= rel * est.norm().max(abs) || d <= abs {
                    stable_hits += 1;
                    if stable_hits >= 3 {
                        return Ok(QuadResult { value: est, err: err + d, evals });
                    }
                } else {
                    stable_hits = 0;
                }
            }
            last_est = Some(est);
        }
    }
    if let Some(est) = last_est {
        let start = sums.len().saturating_sub(40);
        let (e2, d) = wynn_epsilon(&sums[start..]);
        let _ = est;
        if d <= 1e3 * rel * e2.norm().max(abs) {
            return Ok(QuadResult { value: e2, err: err + d, evals });
        }
    }
    Err(Error::Quadrature(format!(
        "oscillatory integral did not settle within {max_blocks} blocks (largest block {max_block:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk21_integrates_polynomials_exactly() {
        let (v, _, _) = gk21(&|x: f64| x.powi(20) - 3.0 * x.powi(7), 0.0, 1.0);
        assert!((v - (1.0 / 21.0 - 3.0 / 8.0)).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive(&|x: f64| x.powf(-0.5), 0.0, 1.0, Tol::rel(1e-10).with_abs(0.0));
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn log_march_power_tail() {
        // ∫_1^∞ s^{-3/2} ds = 2
        let r = log_march(&|s: f64| s.powf(-1.5), 1.0, f64::INFINITY, Direction::TowardInfinity, &[], 1e-12, 0.0);
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
        // ∫_0^1 s^{-1/2} ds = 2
        let r = log_march(&|s: f64| s.powf(-0.5), 1.0, 0.0, Direction::TowardZero, &[], 1e-12, 0.0);
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = Vec::new();
        let mut acc = 0.0;
        for k in 1..=20 {
            acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            s.push(acc);
        }
        let (est, _) = wynn_epsilon(&s);
        assert!((est - 2f64.ln()).abs() < 1e-12, "{est}");
    }

    #[test]
    fn oscillatory_dirichlet_integral() {
        // ∫_0^∞ sin(x)/x dx = π/2, with a small-x series to stay finite at 0.
        let f = |x: f64| if x < 1e-8 { 1.0 } else { x.sin() / x };
        let r = oscillatory(&f, 0.0, std::f64::consts::PI, 1e-12, 1e-15, 2000).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn oscillatory_complex_exponential() {
        // ∫_0^∞ e^{-x} e^{ix} dx = 1/(1-i)
        let f = |x: f64| Complex64::new(-x, x).exp();
        let r = oscillatory(&f, 0.0, std::f64::consts::PI, 1e-13, 1e-16, 2000).unwrap();
        let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -1.0);
        assert!((r.value - exact).norm() < 1e-12);
    }
}
