//! The kernel `H(alpha, z)` and its algebraic branches.
//!
//! ```text
//! H(alpha, z) = a z^2 + b(alpha) z + d
//!   a = -lambda,  b(alpha) = -alpha r + lambda + c mu,  d = -c mu
//!
//! Delta(alpha) = b^2 - 4 c lambda mu = r^2 (alpha - alpha_1)(alpha - alpha_2)
//! alpha_{1,2}  = (sqrt(c mu) -+ sqrt(lambda))^2 / r
//!
//! Z0 Z1 = c mu / lambda,   Z0 + Z1 = b(alpha) / lambda
//! alpha(z) = (-lambda z^2 + (lambda + c mu) z - c mu) / (z r)
//! ```
//!
//! `Z0` is the root of smaller modulus. On the real axis left of `alpha_1`
//! both roots are real and positive.

use crate::error::{FluidError, Result};
use crate::model::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCoeffs {
    pub a: f64,
    pub lambda_plus_cmu: f64,
    pub r: f64,
    pub d: f64,
}

impl KernelCoeffs {
    pub fn new(p: &ModelParams) -> Self {
        Self {
            a: -p.lambda,
            lambda_plus_cmu: p.lambda + p.cmu(),
            r: p.r,
            d: -p.cmu(),
        }
    }

    pub fn b(&self, alpha: Complex64) -> Complex64 {
        -alpha * self.r + self.lambda_plus_cmu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoints {
    pub alpha1: f64,
    pub alpha2: f64,
}

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn b_real(p: &ModelParams, alpha: f64) -> f64 {
    -alpha * p.r + p.lambda + p.cmu()
}

pub fn kernel_h(p: &ModelParams, alpha: Complex64, z: Complex64) -> Complex64 {
    let k = KernelCoeffs::new(p);
    z * z * k.a + k.b(alpha) * z + k.d
}

pub fn kernel_h_real(p: &ModelParams, alpha: f64, z: f64) -> f64 {
    -p.lambda * z * z + b_real(p, alpha) * z - p.cmu()
}

pub fn discriminant(p: &ModelParams, alpha: Complex64) -> Complex64 {
    let b = KernelCoeffs::new(p).b(alpha);
    b * b - 4.0 * p.cmu() * p.lambda
}

pub fn discriminant_real(p: &ModelParams, alpha: f64) -> f64 {
    let b = b_real(p, alpha);
    b * b - 4.0 * p.cmu() * p.lambda
}

pub fn branch_points(p: &ModelParams) -> BranchPoints {
    let (s, l) = (p.cmu().sqrt(), p.lambda.sqrt());
    BranchPoints {
        alpha1: (s - l).powi(2) / p.r,
        alpha2: (s + l).powi(2) / p.r,
    }
}

fn near_branch(p: &ModelParams, delta: f64) -> bool {
    delta.abs() < 1e-14 * (p.lambda + p.cmu()).powi(2)
}

fn check_cut(p: &ModelParams, alpha: Complex64) -> Result<()> {
    let bp = branch_points(p);
    if alpha.im == 0.0 && alpha.re > bp.alpha1 && alpha.re < bp.alpha2 {
        let delta = discriminant_real(p, alpha.re);
        if !near_branch(p, delta) {
            return Err(FluidError::OnCut(alpha.re));
        }
    }
    Ok(())
}

/// Returns `(Z0, Z1)` using the half-plane rule: `Z0 = (b - sqrt(Delta)) / (2 lambda)`
/// when `Re alpha <= (lambda + c mu) / r`, else `(b + sqrt(Delta)) / (2 lambda)`.
pub fn branches(p: &ModelParams, alpha: Complex64) -> Result<(Complex64, Complex64)> {
    check_cut(p, alpha)?;
    let b = KernelCoeffs::new(p).b(alpha);
    let delta = b * b - 4.0 * p.cmu() * p.lambda;
    if near_branch(p, delta.norm()) {
        let z = b / (2.0 * p.lambda);
        return Ok((z, z));
    }
    let sd = delta.sqrt();
    // Z+ and Z- of the quadratic with a = -lambda.
    let plus_side = alpha.re <= (p.lambda + p.cmu()) / p.r;
    let big = if plus_side { b + sd } else { b - sd };
    let z1 = big / (2.0 * p.lambda);
    let z0 = cx(2.0 * p.cmu()) / big;
    Ok((z0, z1))
}

pub fn branch_z0(p: &ModelParams, alpha: Complex64) -> Result<Complex64> {
    branches(p, alpha).map(|b| b.0)
}

pub fn branch_z1(p: &ModelParams, alpha: Complex64) -> Result<Complex64> {
    branches(p, alpha).map(|b| b.1)
}

/// `Z0` for real `alpha <= alpha_1`. NaN to the right of the branch point.
pub fn z0_real(p: &ModelParams, alpha: f64) -> f64 {
    let b = b_real(p, alpha);
    let delta = b * b - 4.0 * p.cmu() * p.lambda;
    if near_branch(p, delta) || (delta < 0.0 && near_branch(p, delta * 1e-4)) {
        return b / (2.0 * p.lambda);
    }
    if delta < 0.0 {
        return f64::NAN;
    }
    2.0 * p.cmu() / (b + delta.sqrt())
}

/// `Z1` for real `alpha <= alpha_1`. NaN to the right of the branch point.
pub fn z1_real(p: &ModelParams, alpha: f64) -> f64 {
    let b = b_real(p, alpha);
    let delta = b * b - 4.0 * p.cmu() * p.lambda;
    if near_branch(p, delta) || (delta < 0.0 && near_branch(p, delta * 1e-4)) {
        return b / (2.0 * p.lambda);
    }
    if delta < 0.0 {
        return f64::NAN;
    }
    (b + delta.sqrt()) / (2.0 * p.lambda)
}

/// `dZ0/dalpha = r Z0 / sqrt(Delta)` for real `alpha < alpha_1`.
pub fn z0_prime_real(p: &ModelParams, alpha: f64) -> f64 {
    p.r * z0_real(p, alpha) / discriminant_real(p, alpha).sqrt()
}

pub fn alpha_of_z(p: &ModelParams, z: Complex64) -> Complex64 {
    (-p.lambda * z * z + (p.lambda + p.cmu()) * z - p.cmu()) / (z * p.r)
}

pub fn h0(p: &ModelParams, z: Complex64) -> Complex64 {
    let c = p.c as i32;
    p.mu * z.powi(c) - p.cmu() * z.powi(c - 1)
}

pub fn h1(p: &ModelParams, alpha: Complex64, z: Complex64) -> Complex64 {
    let c = p.c as i32;
    (p.mu - alpha * p.r - alpha) * z.powi(c) - p.cmu() * z.powi(c - 1)
}

pub fn h2(p: &ModelParams, z: Complex64) -> Complex64 {
    p.lambda * z * z - (p.lambda + p.cmu()) * z + p.cmu()
}
