//! Special functions used by the closed forms.

pub use statrs::function::gamma::ln_gamma;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E₁(x) = ∫_x^∞ e^{-s}/s ds for x > 0.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz on the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ln(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// e^{-u}(e^u - 1 - u) = 1 - e^{-u} - u e^{-u}, accurate for small u.
pub fn h_kernel(u: f64) -> f64 {
    if u < 0.5 {
        // series of e^u - 1 - u
        let mut term = u * u / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term > 1e-18 * sum {
            k += 1.0;
            term *= u / k;
            sum += term;
        }
        sum * (-u).exp()
    } else {
        -(-u).exp_m1() - u * (-u).exp()
    }
}

/// Monotone (Fritsch–Carlson) cubic interpolant through increasing `xs`.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n);
        let mut d = vec![0.0; n - 1];
        for i in 0..n - 1 {
            d[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut ms = vec![0.0; n];
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                ms[i] = 0.0;
            } else {
                ms[i] = 0.5 * (d[i - 1] + d[i]);
            }
        }
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
                continue;
            }
            let a = ms[i] / d[i];
            let b = ms[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                ms[i] = tau * a * d[i];
                ms[i + 1] = tau * b * d[i];
            }
        }
        MonotoneCubic { xs, ys, ms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_values() {
        // Abramowitz–Stegun table values.
        assert!((exp_int_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_int_e1(0.1) - 1.822_923_958_419_390_7).abs() < 1e-13);
        assert!((exp_int_e1(5.0) - 0.001_148_295_591_275_326).abs() < 1e-16);
    }

    #[test]
    fn e1_matches_quadrature() {
        for &x in &[0.3, 0.99, 1.01, 2.5, 12.0] {
            let q = crate::quad::log_march(
                &|s: f64| (-s).exp() / s,
                x,
                f64::INFINITY,
                crate::quad::Direction::TowardInfinity,
                &[],
                1e-13,
                0.0,
            );
            assert!((q.value / exp_int_e1(x) - 1.0).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn ln_gamma_accuracy() {
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln 49! via direct sum
        let direct: f64 = (1..50).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma(50.0) / direct - 1.0).abs() < 1e-13);
    }

    #[test]
    fn h_kernel_branches_agree() {
        for &u in &[1e-8f64, 1e-3, 0.2, 0.49999, 0.5, 3.0] {
            let direct = 1.0 - (-u).exp() - u * (-u).exp();
            let k = h_kernel(u);
            if u > 1e-3 {
                assert!((k / direct - 1.0).abs() < 1e-9, "u={u}");
            } else {
                assert!((k / (u * u / 2.0) - 1.0).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 5.0 { x } else { 5.0 + 0.01 * x }).collect();
        let m = MonotoneCubic::new(xs, ys);
        let mut prev = m.eval(0.0);
        for i in 1..900 {
            let v = m.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
