//! Dense real polynomials and rational functions in one variable.
//!
//! Coefficients are stored in ascending order, so `coeffs[k]` multiplies
//! `x^k`. Root finding uses the eigenvalues of the companion matrix followed
//! by a few Newton steps on the original polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn deriv(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Monic-free normalization: divide by the coefficient of largest modulus.
    pub fn normalized(&self) -> Self {
        let m = self
            .coeffs
            .iter()
            .fold(0.0_f64, |m, c| if c.abs() > m.abs() { *c } else { m });
        if m == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / m)
        }
    }

    /// Synthetic division by `(x - root)`; returns quotient and remainder.
    pub fn deflate(&self, root: f64) -> (Self, f64) {
        let n = self.coeffs.len();
        if n == 1 {
            return (Self::zero(), self.coeffs[0]);
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = self.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            q[k] = carry;
            carry = self.coeffs[k] + carry * root;
        }
        (Self::new(q), carry)
    }

    /// All complex roots, polished by Newton iteration.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let d = self.deriv();
        m.complex_eigenvalues()
            .iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..8 {
                    let dz = d.eval_c(z);
                    if dz.norm() == 0.0 {
                        break;
                    }
                    let step = self.eval_c(z) / dz;
                    let next = z - step;
                    if !next.re.is_finite() || !next.im.is_finite() {
                        break;
                    }
                    if self.eval_c(next).norm() > self.eval_c(z).norm() {
                        break;
                    }
                    z = next;
                    if step.norm() <= 1e-16 * z.norm().max(1.0) {
                        break;
                    }
                }
                if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
                    z.im = 0.0;
                }
                z
            })
            .collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + o.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// Quotient of two polynomials. Not automatically reduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        Self { num, den }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        self.num.eval_c(x) / self.den.eval_c(x)
    }

    /// Poles of the function: roots of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_arith() {
        let p = Poly::new(vec![1.0, -3.0, 2.0]); // (1-x)(1-2x)
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(0.5), 0.0);
        let q = &p * &Poly::linear(-2.0, 1.0);
        assert_eq!(q.degree(), 3);
        assert!(q.eval(2.0).abs() < 1e-15);
        assert_eq!((&q - &q).degree(), 0);
        assert!((&q - &q).is_zero());
        assert_eq!(p.deriv().coeffs(), &[-3.0, 4.0]);
    }

    #[test]
    fn deflate_exact() {
        let p = Poly::new(vec![0.0, 6.0, -5.0, 1.0]); // x(x-2)(x-3)
        let (q, rem) = p.deflate(0.0);
        assert_eq!(rem, 0.0);
        assert_eq!(q.coeffs(), &[6.0, -5.0, 1.0]);
        let (q2, rem2) = q.deflate(2.0);
        assert!(rem2.abs() < 1e-14);
        assert_eq!(q2.coeffs(), &[-3.0, 1.0]);
    }

    #[test]
    fn roots_real_and_complex() {
        // (x^2 + 1)(x - 4)
        let p = Poly::new(vec![-4.0, 1.0, -4.0, 1.0]);
        let mut r = p.roots();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((r[2] - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        assert_eq!(r[2].im, 0.0);
    }

    #[test]
    fn rational_poles() {
        let f = RationalFn::new(Poly::constant(3.0), Poly::linear(2.0, 1.0));
        assert_eq!(f.eval(1.0), 1.0);
        let p = f.poles();
        assert_eq!(p.len(), 1);
        assert!((p[0].re + 2.0).abs() < 1e-14);
    }
}
