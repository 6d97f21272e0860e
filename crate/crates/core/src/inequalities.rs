//! Pointwise checks of the universal inequalities linking φ, H, w and b,
//! evaluated on log grids for a single model.

use std::f64::consts::E;

use crate::bernstein::{Inverse, PhiEvaluator, ThetaBranch};
use crate::error::{Error, Result};
use crate::quad::{self, Direction};

/// (e − 2)/(e² − e)
pub const C_STAR: f64 = (E - 2.0) / (E * E - E);
/// (2e² − 4e + 1)/(e − 2)
pub const B_DIFF_CONST: f64 = (2.0 * E * E - 4.0 * E + 1.0) / (E - 2.0);

/// Relative slack for rounding in both sides of an inequality.
pub const SLACK: f64 = 1e-8;

/// ∫₀^r sⁿ ν(s) ds.
pub fn truncated_moment(e: &PhiEvaluator, n: f64, r: f64) -> Result<f64> {
    let m = e.model();
    let (_, end) = m.support();
    let start = r.min(end);
    let q = quad::log_march(&|s: f64| s.powf(n) * m.nu(s), start, 0.0, Direction::TowardZero, m.breaks(), 1e-11, 0.0);
    if !q.value.is_finite() || q.err > 1e-6 * q.value.abs().max(1e-300) {
        return Err(Error::Quadrature(format!("∫₀^{r} s^{n} ν ds (err {:.2e})", q.err)));
    }
    Ok(q.value)
}

/// ∫₀^r s w(s) ds = r² w(r)/2 + ½∫₀^r s² ν(s) ds.
pub fn tail_moment(e: &PhiEvaluator, r: f64) -> Result<f64> {
    Ok(0.5 * r * r * e.tail(r)? + 0.5 * truncated_moment(e, 2.0, r)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub points: usize,
    pub violations: usize,
    /// points where an ingredient could not be evaluated
    pub skipped: usize,
    /// min over points of rhs/lhs − 1 (negative means violated)
    pub worst_margin: f64,
    pub worst_at: f64,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check { name, points: 0, violations: 0, skipped: 0, worst_margin: f64::INFINITY, worst_at: f64::NAN }
    }

    /// Records lhs ≤ rhs at argument `at`.
    fn le(&mut self, at: f64, lhs: Result<f64>, rhs: Result<f64>) {
        match (lhs, rhs) {
            (Ok(l), Ok(r)) if l.is_finite() && r.is_finite() => {
                self.points += 1;
                let margin = if l > 0.0 { r / l - 1.0 } else if r >= l { f64::INFINITY } else { -1.0 };
                if l > r + SLACK * r.abs().max(l.abs()) {
                    self.violations += 1;
                }
                if margin < self.worst_margin {
                    self.worst_margin = margin;
                    self.worst_at = at;
                }
            }
            _ => self.skipped += 1,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.points > 0
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Runs every check on `lambdas` (for H-side inequalities) and `times`.
pub fn suite(e: &PhiEvaluator, lambdas: &[f64], times: &[f64]) -> Vec<Check> {
    let mut h1 = Check::new("H over second moment");
    let mut h2 = Check::new("H over tail");
    let mut ck_lo = Check::new("H over tail moment, lower");
    let mut ck_hi = Check::new("H over tail moment, upper");
    let mut dbl = Check::new("H doubling");
    let h: Vec<Result<f64>> = lambdas.iter().map(|&l| e.h_of(l)).collect();
    for (i, &l) in lambdas.iter().enumerate() {
        let r = 1.0 / l;
        let hl = h[i].clone();
        h1.le(l, truncated_moment(e, 2.0, r).map(|m| l * l * m / (2.0 * E)), hl.clone());
        h2.le(l, e.tail(r).map(|w| (E - 2.0) / E * w), hl.clone());
        let tm = tail_moment(e, r);
        ck_lo.le(l, tm.clone().map(|m| l * l * m / E), hl.clone());
        ck_hi.le(l, hl.clone(), tm.map(|m| 5.0 * l * l * m));
        for (j, &big) in lambdas.iter().enumerate().skip(i + 1) {
            dbl.le(big, h[j].clone(), hl.clone().map(|v| (big / l).powi(2) * v));
        }
    }

    let mut wh = Check::new("tail inverse below 1/H inverse");
    let mut est_lo = Check::new("tb over phi inverse, lower");
    let mut est_hi = Check::new("tb over phi inverse, upper");
    let mut bdiff = Check::new("b difference");
    let mut theta = [
        Check::new("theta lower bracket"),
        Check::new("theta upper bracket"),
        Check::new("theta bound"),
        Check::new("theta equality"),
    ];
    for &t in times {
        let hinv = e.invert(Inverse::H, 1.0 / t);
        wh.le(t, e.invert(Inverse::W, 2.0 * E / t), hinv.clone().map(|v| 1.0 / v));
        let tb = e.b_of(t).map(|b| t * b);
        est_lo.le(t, e.invert(Inverse::Phi, 1.0 / t).map(|v| 1.0 / v), tb.clone());
        est_hi.le(t, tb.clone(), e.invert(Inverse::Phi, C_STAR / t).map(|v| 1.0 / v));
        let diff = e.b_of(t / 4.0).and_then(|b4| tb.clone().map(|v| v - t * b4));
        bdiff.le(t, diff, hinv.clone().map(|v| B_DIFF_CONST * 4.0 / v));
        theta_contract(e, t, &mut theta);
    }
    let mut out = vec![h1, h2, ck_lo, ck_hi, dbl, wh, est_lo, est_hi, bdiff];
    out.extend(theta);
    out
}

/// θ(t, y) ∈ [w⁻¹(2e/t), H⁻¹(1/t)⁻¹], tθH(1/θ) ≤ y ∨ H⁻¹(1/t)⁻¹, with
/// equality on the root branch.
fn theta_contract(e: &PhiEvaluator, t: f64, c: &mut [Check; 4]) {
    let sc = match e.scales(t) {
        Ok(sc) => sc,
        Err(_) => {
            c.iter_mut().for_each(|c| c.skipped += 1);
            return;
        }
    };
    let mut ys = vec![0.5 * sc.s_hi, sc.s_hi, 4.0 * sc.d, 100.0 * sc.d];
    if sc.d > sc.s_hi {
        ys.extend([(sc.s_hi * sc.d).sqrt(), sc.d]);
    }
    for y in ys {
        let th = match e.theta_of(t, y) {
            Ok(th) => th,
            Err(_) => {
                c.iter_mut().for_each(|c| c.skipped += 1);
                continue;
            }
        };
        let g = e.h_of(1.0 / th.theta).map(|h| t * th.theta * h);
        c[0].le(t, Ok(sc.s_lo), Ok(th.theta));
        c[1].le(t, Ok(th.theta), Ok(sc.s_hi));
        c[2].le(t, g.clone(), Ok(y.max(sc.s_hi)));
        if th.branch == ThetaBranch::Root {
            c[3].le(t, Ok(y), g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LevyModel;

    #[test]
    fn constants() {
        assert!((C_STAR - 0.153_8).abs() < 1e-4);
        assert!((B_DIFF_CONST - (2.0 * E * E - 4.0 * E + 1.0) / (E - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn tail_moment_stable_half() {
        // w(s) = s^{−1/2}/√π, so ∫₀^r s w = (2/3) r^{3/2}/√π
        let e = PhiEvaluator::new(LevyModel::stable(0.5).unwrap());
        let v = tail_moment(&e, 4.0).unwrap();
        let expect = 2.0 / 3.0 * 8.0 / std::f64::consts::PI.sqrt();
        assert!((v / expect - 1.0).abs() < 1e-8, "{v} vs {expect}");
    }

    #[test]
    fn stable_half_tb_lower_bound_fails() {
        // tb(t) = t²/4 while 1/φ⁻¹(1/t) = t²
        let e = PhiEvaluator::new(LevyModel::stable(0.5).unwrap());
        let checks = suite(&e, &log_grid(1e-2, 1e2, 8), &log_grid(0.1, 10.0, 8));
        for c in &checks {
            if c.name == "tb over phi inverse, lower" {
                assert_eq!(c.violations, c.points);
                assert!((c.worst_margin + 0.75).abs() < 1e-8);
            } else {
                assert!(c.passed(), "{c:?}");
            }
        }
    }
}
