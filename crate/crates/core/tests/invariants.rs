use std::f64::consts::{E, PI};

use subordinator::bernstein::{Inverse, PhiEvaluator};
use subordinator::envelope::{pure_jump_min, right_tail};
use subordinator::examples_catalog::catalog;
use subordinator::inequalities::{log_grid, truncated_moment};
use subordinator::quad::{self, Direction};
use subordinator::reference_density::{density_closed, density_saddle, MellinIntegrand};
use subordinator::LevyModel;

#[test]
fn tail_matches_density_quadrature() {
    for m in catalog().unwrap() {
        let (_, end) = m.support();
        for r in log_grid(1e-4, 1e2, 13) {
            if r >= end {
                continue;
            }
            let f = |s: f64| m.eval_density(s).unwrap();
            let q = quad::log_march(&f, r, end, Direction::TowardInfinity, m.breaks(), 1e-10, 0.0);
            let w = m.eval_tail(r).unwrap();
            assert!((q.value / w - 1.0).abs() < 1e-6, "{} r={r}: {} vs {w}", m.name, q.value);
        }
    }
}

#[test]
fn stable_tail_is_exact_power() {
    for a in [0.3, 0.5, 0.8] {
        let m = LevyModel::stable(a).unwrap();
        let c0 = m.eval_tail(1.0).unwrap();
        for r in log_grid(1e-4, 1e2, 25) {
            let c = m.eval_tail(r).unwrap() * r.powf(a);
            assert!((c / c0 - 1.0).abs() < 1e-6, "alpha={a} r={r}");
        }
    }
}

#[test]
fn derivative_lower_bounds() {
    // e⁻¹ ∫₀^{1/λ} sⁿ ν ≤ |φ⁽ⁿ⁾(λ)|
    for m in [LevyModel::stable(0.5).unwrap(), LevyModel::gamma().unwrap(), LevyModel::truncated_stable(0.3).unwrap()] {
        let e = PhiEvaluator::new(m);
        for l in log_grid(1e-2, 1e3, 11) {
            for n in 1..=3u8 {
                let lhs = truncated_moment(&e, n as f64, 1.0 / l).unwrap() / E;
                let rhs = e.phi_deriv(l, n).unwrap().abs();
                assert!(lhs <= rhs * (1.0 + 1e-8), "{} n={n} λ={l}: {lhs} > {rhs}", e.model().name);
            }
        }
    }
}

#[test]
fn mellin_integral_window_and_symmetry() {
    let (lo, hi) = (PI.sqrt(), 2.0 * PI.sqrt());
    for m in [LevyModel::stable(0.5).unwrap(), LevyModel::stable(0.3).unwrap(), LevyModel::gamma().unwrap()] {
        let e = PhiEvaluator::new(m);
        let mut seen = 0;
        for t in [2.0, 5.0, 10.0] {
            let tb = t * e.b_of(t).unwrap();
            for x in log_grid(1e-3 * tb, tb, 9) {
                let st = e.saddle(t, x).unwrap();
                let mi = MellinIntegrand::new(&e, &st).unwrap();
                for u in [0.3, 2.0, 9.0] {
                    let (a, b) = (mi.m(u).unwrap(), mi.m(-u).unwrap());
                    assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-300), "{} M({u})", e.model().name);
                }
                if t * st.h_sigma < 4.0 {
                    continue;
                }
                let raw = density_saddle(&e, t, x).unwrap().raw_integral.unwrap();
                assert!(raw >= lo * (1.0 - 1e-9) && raw <= hi, "{} t={t} x={x}: {raw}", e.model().name);
                seen += 1;
            }
        }
        assert!(seen > 0, "{}: no point with tH(σ) ≥ 4", e.model().name);
    }
}

#[test]
fn densities_are_normalized() {
    for m in [LevyModel::gamma().unwrap(), LevyModel::stable(0.5).unwrap()] {
        let e = PhiEvaluator::new(m);
        for t in [1.0, 2.0] {
            let tb = t * e.b_of(t).unwrap();
            // beyond t b(t) the pure-jump envelope t ν carries mass t w(X − t b);
            // its constant is unknown, so aim well below the 1e-3 budget
            let x_max = tb + e.invert(Inverse::W, 1e-5 / t).unwrap();
            let f = |x: f64| density_closed(&e, t, x).map(|d| d.value).unwrap_or(0.0);
            let head = quad::log_march(&f, tb, 0.0, Direction::TowardZero, &[], 1e-10, 0.0);
            let tail = quad::log_march(&f, tb, x_max, Direction::TowardInfinity, &[], 1e-10, 0.0);
            let mass = head.value + tail.value;
            assert!((0.999..=1.0 + 1e-6).contains(&mass), "{} t={t}: mass {mass}", e.model().name);
        }
    }
}

#[test]
fn right_tail_tracks_pure_jump_envelope() {
    for m in [LevyModel::stable(0.3), LevyModel::stable(0.5), LevyModel::stable(0.8), LevyModel::truncated_stable(0.5)] {
        let e = PhiEvaluator::new(m.unwrap());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for t in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let sc = e.scales(t).unwrap();
            for y in log_grid(sc.s_hi, 1e3 * sc.s_hi, 30) {
                let (Ok(a), Ok(b)) = (right_tail(&e, t, y, 1.0), pure_jump_min(&e, t, t * sc.b + y, 1.0)) else {
                    continue;
                };
                lo = lo.min(a / b);
                hi = hi.max(a / b);
            }
        }
        assert!(hi / lo < 50.0, "{}: ratio in [{lo}, {hi}]", e.model().name);
    }
}

#[test]
fn boundary_exponential_is_dominated_by_jump_term() {
    // exp(−y/w⁻¹(2e/t)) ≤ C tν(y)/H⁻¹(1/t) on [H⁻¹(1/t)⁻¹, R₁/2), one C per model
    for m in [LevyModel::stable(0.5), LevyModel::stable(0.8), LevyModel::gamma(), LevyModel::truncated_stable(0.5)] {
        let e = PhiEvaluator::new(m.unwrap());
        let r1 = e.model().meta.r1;
        let mut c = 0.0f64;
        let mut n = 0;
        for t in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let sc = e.scales(t).unwrap();
            for y in log_grid(sc.s_hi, 1e3 * sc.s_hi, 30).into_iter().filter(|&y| y < r1 / 2.0) {
                let lhs = (-y / sc.s_lo).exp();
                let rhs = t * e.model().nu(y) / sc.h_inv;
                c = c.max(lhs / rhs);
                n += 1;
            }
        }
        assert!(n > 0 && c.is_finite() && c < 1.0, "{}: C = {c} over {n} points", e.model().name);
    }
}
