//! Bracketing and Brent root finding for monotone functions.

use crate::error::{Error, Result};

/// Brent's method on `[a, b]` with `f(a)`, `f(b)` of opposite sign.
pub fn brent(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!("no sign change on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
    }
    Ok(b)
}

/// Solves `f(λ) = v` for a positive monotone `f` on `(0, ∞)`.
///
/// Works in `u = ln λ` on `ln f(e^u) - ln v`. The bracket starts at `λ = 1`
/// and expands by a factor 4 per step, at most `max_steps` times.
pub fn invert_positive(
    f: &mut impl FnMut(f64) -> Result<f64>,
    v: f64,
    increasing: bool,
    rel_tol: f64,
    max_steps: usize,
) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::OutOfRange(format!("target {v} must be positive and finite")));
    }
    let lv = v.ln();
    let mut g = |u: f64| -> Result<f64> {
        let fv = f(u.exp())?;
        let lf = if fv > 0.0 { fv.ln() } else { f64::NEG_INFINITY };
        let d = lf - lv;
        Ok(if increasing { d } else { -d })
    };
    let step = 4f64.ln();
    let mut u0 = 0.0;
    let mut g0 = g(u0)?;
    if g0 == 0.0 {
        return Ok(1.0);
    }
    // g is increasing in u after the sign flip for decreasing f.
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    for _ in 0..max_steps {
        let u1 = u0 + dir * step;
        if !(u1.abs() < 700.0) {
            break;
        }
        let g1 = g(u1)?;
        if g1.is_nan() {
            return Err(Error::Bracket(format!("NaN while bracketing at λ={}", u1.exp())));
        }
        if g1 == 0.0 {
            return Ok(u1.exp());
        }
        if g1.signum() != g0.signum() {
            let (a, b, fa, fb) = if u0 < u1 { (u0, u1, g0, g1) } else { (u1, u0, g1, g0) };
            let (a, b, fa, fb) = sanitize(&mut g, a, b, fa, fb)?;
            let u = brent(&mut g, a, b, fa, fb, rel_tol, 200)?;
            return Ok(u.exp());
        }
        u0 = u1;
        g0 = g1;
    }
    Err(Error::OutOfRange(format!("could not bracket a solution of f(λ) = {v}")))
}

/// Replaces infinite endpoint values (f = 0 beyond a support edge) by bisection
/// until both ends are finite, keeping the sign change.
fn sanitize(
    g: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<(f64, f64, f64, f64)> {
    for _ in 0..200 {
        if fa.is_finite() && fb.is_finite() {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = g(m)?;
        if fm == 0.0 {
            return Ok((m, m, 0.0, 0.0));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    if !fa.is_finite() {
        fa = -1e300;
    }
    if !fb.is_finite() {
        fb = 1e300;
    }
    Ok((a, b, fa, fb))
}

/// Bisection on a monotone predicate: returns the boundary `u` in `[lo, hi]`
/// between `pred = true` (at `lo`) and `pred = false` (at `hi`).
pub fn bisect_boundary(
    pred: &mut impl FnMut(f64) -> Result<bool>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    for _ in 0..400 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let m = 0.5 * (lo + hi);
        if pred(m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max(f: &mut impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}
