//! Truncated Taylor series ("jets") in the arc-length variable.
//!
//! A jet of order `k` stores `f(s0), f'(s0), f''(s0)/2!, ..., f^(k)(s0)/k!`.
//! Arithmetic follows the usual recurrences of Taylor-mode differentiation,
//! which lets the trailer-chain relations be differentiated to arbitrary order
//! without hand-expanding them.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    /// Builds a jet from plain derivatives `[f, f', f'', ...]`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let c = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Jet { c }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "jet needs at least the value coefficient");
        Jet { c }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// k-th derivative (not the normalized coefficient).
    pub fn derivative_at(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.c.len()).map(|k| self.derivative_at(k)).collect()
    }

    /// d/ds; the result is one order lower.
    pub fn diff(&self) -> Jet {
        if self.c.len() == 1 {
            return Jet { c: vec![0.0] };
        }
        let c = self.c[1..]
            .iter()
            .enumerate()
            .map(|(k, v)| v * (k + 1) as f64)
            .collect();
        Jet { c }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet {
            c: self.c[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.c[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s / self.c[0];
        }
        Jet { c: r }
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self * &other.recip()
    }

    /// Returns `(sin f, cos f)`.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.c[j];
                ds += w * c[k - j];
                dc -= w * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }

    pub fn tan(&self) -> Jet {
        let (s, c) = self.sin_cos();
        s.div(&c)
    }

    pub fn atan(&self) -> Jet {
        // (atan f)' = f' / (1 + f^2)
        let n = self.c.len();
        let denom = &(self * self) + 1.0;
        let inner = self.diff().div(&denom.truncate(n.saturating_sub(2)));
        let mut c = vec![0.0; n];
        c[0] = self.c[0].atan();
        for k in 1..n {
            c[k] = inner.c[k - 1] / k as f64;
        }
        Jet { c }
    }

    pub fn sqrt(&self) -> Jet {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = self.c[0].sqrt();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.c[k] - s) / (2.0 * r[0]);
        }
        Jet { c: r }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n).map(|k| self.c[k] + o.c[k]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n).map(|k| self.c[k] - o.c[k]).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n)
                .map(|k| (0..=k).map(|j| self.c[j] * o.c[k - j]).sum())
                .collect(),
        }
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, v: f64) -> Jet {
        let mut c = self.c.clone();
        c[0] += v;
        Jet { c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // f(s) = 0.3 + 0.5 s - 0.2 s^2 + 0.1 s^3 around s = 0
    fn poly() -> Jet {
        Jet::from_coeffs(vec![0.3, 0.5, -0.2, 0.1])
    }

    fn fd_derivs(f: impl Fn(f64) -> f64) -> [f64; 3] {
        let h = 1e-3;
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let d3 = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
        [d1, d2, d3]
    }

    fn p(s: f64) -> f64 {
        0.3 + 0.5 * s - 0.2 * s * s + 0.1 * s * s * s
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let cases: Vec<(Jet, Box<dyn Fn(f64) -> f64>)> = vec![
            (poly().tan(), Box::new(|s| p(s).tan())),
            (poly().atan(), Box::new(|s| p(s).atan())),
            (poly().sin(), Box::new(|s| p(s).sin())),
            (poly().cos(), Box::new(|s| p(s).cos())),
            (poly().recip(), Box::new(|s| 1.0 / p(s))),
            ((&poly() + 1.0).sqrt(), Box::new(|s| (p(s) + 1.0).sqrt())),
        ];
        for (jet, f) in cases {
            let fd = fd_derivs(&f);
            assert_relative_eq!(jet.value(), f(0.0), epsilon = 1e-14);
            for k in 0..3 {
                assert_relative_eq!(jet.derivative_at(k + 1), fd[k], max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn diff_drops_one_order() {
        let d = poly().diff();
        assert_eq!(d.order(), 2);
        let got = d.derivatives();
        for (g, w) in got.iter().zip([0.5, -0.4, 0.6]) {
            assert_relative_eq!(*g, w, epsilon = 1e-15);
        }
    }

    #[test]
    fn derivative_roundtrip() {
        let j = Jet::from_derivatives(&[1.0, 2.0, 6.0, 24.0]);
        assert_eq!(j.coeffs(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.derivatives(), vec![1.0, 2.0, 6.0, 24.0]);
    }
}
