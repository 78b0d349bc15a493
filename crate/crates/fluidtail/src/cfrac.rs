//! Continued fraction for the lower phases and the reduced kernel equation.
//!
//! Writing `phi_i(alpha) = int_0^inf e^{alpha x} pi_i(x) dx` for the level
//! densities, the phases `i < c-1` are eliminated by
//!
//! ```text
//! A_{-1} = 0
//! A_i(alpha) = (i+1) mu / ((c-i) alpha + lambda + i mu - lambda A_{i-1}(alpha))
//!
//! phi_i = T_i + A_i phi_{i+1},
//! T_i   = sum_{n=0}^{i} k_n lambda^{i-n} prod_{m=n}^{i} A_m / ((m+1) mu)
//!
//! k_0 = mu Pi_1(0) - lambda Pi_0(0)
//! k_i = lambda Pi_{i-1}(0) - (lambda + i mu) Pi_i(0) + (i+1) mu Pi_{i+1}(0)
//! ```
//!
//! and the remaining unknown satisfies
//!
//! ```text
//! H1^(alpha, z) phi_{c-1}(alpha) + H2(z) psi(z) + H0^(alpha, z) = 0   at z = Z0(alpha)
//!
//! H1^ = lambda z^c A_{c-2} + H1
//! H0^ = H0 Pi_{c-1}(0) + lambda z^c Pi_{c-2}(0) + lambda z^c T_{c-2}
//! psi(z) = Pi_{c-1}(0) z^{c-1}
//! ```
//!
//! As rational functions `A_i = P_i / Q_i` with `P_i = (i+1) mu Q_{i-1}` and
//! `Q_i = ((c-i) alpha + lambda + i mu) Q_{i-1} - lambda P_{i-1}`.

use crate::error::{FluidError, Result};
use crate::kernel;
use crate::model::ModelParams;
use crate::poly::{Poly, RationalFn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySource {
    SpectralOracle,
    UserSupplied,
}

/// Atoms `Pi_i(0)` of the level at zero for phases `0..c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVector {
    pub pi0: Vec<f64>,
    pub source: BoundarySource,
}

impl BoundaryVector {
    pub fn new(pi0: Vec<f64>, source: BoundarySource) -> Self {
        Self { pi0, source }
    }

    pub fn zeros(c: usize) -> Self {
        Self::new(vec![0.0; c], BoundarySource::UserSupplied)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.pi0.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.pi0.iter().all(|&v| v == 0.0)
    }

    /// Checks nonnegativity, `Pi_i(0) <= xi_i`, and `lambda Pi_0(0) >= mu Pi_1(0)`.
    pub fn validate(&self, p: &ModelParams, xi: &crate::model::PhaseDistribution) -> Result<()> {
        let tol = 1e-10;
        for (i, &v) in self.pi0.iter().enumerate() {
            if v < -tol {
                return Err(FluidError::NegativeMass { phase: i, value: v });
            }
            if v > xi.xi(i) + tol {
                return Err(FluidError::Numerical(format!(
                    "boundary mass {v} exceeds xi_{i} = {}",
                    xi.xi(i)
                )));
            }
        }
        if p.c >= 2 && p.lambda * self.get(0) - p.mu * self.get(1) < -tol {
            return Err(FluidError::Numerical(
                "lambda Pi_0(0) - mu Pi_1(0) is negative".into(),
            ));
        }
        Ok(())
    }
}

/// `A_0 .. A_{c-2}` as rational functions; empty for `c = 1`.
pub fn a_chain(p: &ModelParams) -> Vec<RationalFn> {
    let c = p.c;
    let mut out = Vec::with_capacity(c.saturating_sub(1));
    let mut prev_p = Poly::zero();
    let mut prev_q = Poly::constant(1.0);
    for i in 0..c.saturating_sub(1) {
        let fi = i as f64;
        let diag = Poly::linear(p.lambda + fi * p.mu, (c - i) as f64);
        let num = prev_q.scale((fi + 1.0) * p.mu);
        let den = &(&diag * &prev_q) - &prev_p.scale(p.lambda);
        out.push(RationalFn::new(num.clone(), den.clone()));
        prev_p = num;
        prev_q = den;
    }
    out
}

/// `(P, Q)` with `A_{c-2} = P / Q`, or `(0, 1)` when `c = 1`.
pub fn last_a_parts(p: &ModelParams) -> (Poly, Poly) {
    match a_chain(p).pop() {
        Some(f) => (f.num, f.den),
        None => (Poly::zero(), Poly::constant(1.0)),
    }
}

/// Direct evaluation of `A_0 .. A_{c-2}` at `alpha`.
pub fn a_values(p: &ModelParams, alpha: Complex64) -> Result<Vec<Complex64>> {
    let c = p.c;
    let mut out = Vec::with_capacity(c.saturating_sub(1));
    let mut prev = Complex64::new(0.0, 0.0);
    for i in 0..c.saturating_sub(1) {
        let fi = i as f64;
        let den = alpha * (c - i) as f64 + p.lambda + fi * p.mu - prev * p.lambda;
        if den.norm() < 1e-300 || den.norm() < 1e-13 * (p.lambda + fi * p.mu) {
            return Err(FluidError::Pole(alpha.re));
        }
        prev = (fi + 1.0) * p.mu / den;
        out.push(prev);
    }
    Ok(out)
}

pub fn a_values_real(p: &ModelParams, alpha: f64) -> Result<Vec<f64>> {
    Ok(a_values(p, Complex64::new(alpha, 0.0))?
        .into_iter()
        .map(|v| v.re)
        .collect())
}

pub fn k_constants(b: &BoundaryVector, p: &ModelParams) -> Vec<f64> {
    let c = p.c;
    if c < 2 {
        return Vec::new();
    }
    let (l, m) = (p.lambda, p.mu);
    let mut k = vec![m * b.get(1) - l * b.get(0)];
    for i in 1..c - 1 {
        let fi = i as f64;
        k.push(l * b.get(i - 1) - (l + fi * m) * b.get(i) + (fi + 1.0) * m * b.get(i + 1));
    }
    k
}

/// Pairs `(A_i(alpha), T_i(alpha))` for `i = 0..c-2`, so that `phi_i = T_i + A_i phi_{i+1}`.
pub fn phi_chain_coeffs(
    p: &ModelParams,
    alpha: Complex64,
    b: &BoundaryVector,
) -> Result<Vec<(Complex64, Complex64)>> {
    let a = a_values(p, alpha)?;
    let k = k_constants(b, p);
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let mut t = Complex64::new(0.0, 0.0);
        for n in 0..=i {
            let mut prod = Complex64::new(1.0, 0.0);
            for m in n..=i {
                prod *= a[m] / ((m as f64 + 1.0) * p.mu);
            }
            t += k[n] * p.lambda.powi((i - n) as i32) * prod;
        }
        out.push((a[i], t));
    }
    Ok(out)
}

pub fn h1_hat(p: &ModelParams, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    let a = a_values(p, alpha)?;
    let h1 = kernel::h1(p, alpha, z);
    Ok(match a.last() {
        Some(&ac) => p.lambda * z.powi(p.c as i32) * ac + h1,
        None => h1,
    })
}

pub fn h1_hat_real(p: &ModelParams, alpha: f64, z: f64) -> Result<f64> {
    h1_hat(p, Complex64::new(alpha, 0.0), Complex64::new(z, 0.0)).map(|v| v.re)
}

/// `dH1^/dz`, exact.
pub fn h1_hat_dz(p: &ModelParams, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    let a = a_values(p, alpha)?;
    let ac = a.last().copied().unwrap_or_default();
    let c = p.c as i32;
    let lead = p.lambda * ac + p.mu - alpha * (p.r + 1.0);
    let low = if c >= 2 {
        p.cmu() * (c - 1) as f64 * z.powi(c - 2)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(lead * c as f64 * z.powi(c - 1) - low)
}

fn t_last(p: &ModelParams, alpha: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    Ok(phi_chain_coeffs(p, alpha, b)?
        .last()
        .map(|x| x.1)
        .unwrap_or_default())
}

pub fn h0_hat(p: &ModelParams, alpha: Complex64, z: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    let c = p.c;
    let base = kernel::h0(p, z) * b.get(c - 1);
    if c == 1 {
        return Ok(base);
    }
    let t = t_last(p, alpha, b)?;
    Ok(base + p.lambda * z.powi(c as i32) * (b.get(c - 2) + t))
}

/// `dH0^/dz`, exact.
pub fn h0_hat_dz(p: &ModelParams, alpha: Complex64, z: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    let c = p.c as i32;
    let dh0 = p.mu * c as f64 * z.powi(c - 1)
        - if c >= 2 {
            p.cmu() * (c - 1) as f64 * z.powi(c - 2)
        } else {
            Complex64::new(0.0, 0.0)
        };
    let base = dh0 * b.get(p.c - 1);
    if p.c == 1 {
        return Ok(base);
    }
    let t = t_last(p, alpha, b)?;
    Ok(base + p.lambda * c as f64 * z.powi(c - 1) * (b.get(p.c - 2) + t))
}

/// `psi(z) = sum_{i >= c-1} Pi_i(0) z^i`, which reduces to one term since
/// `Pi_i(0) = 0` for `i >= c`.
pub fn psi(p: &ModelParams, z: Complex64, b: &BoundaryVector) -> Complex64 {
    b.get(p.c - 1) * z.powi(p.c as i32 - 1)
}

pub fn psi_dz(p: &ModelParams, z: Complex64, b: &BoundaryVector) -> Complex64 {
    if p.c == 1 {
        return Complex64::new(0.0, 0.0);
    }
    b.get(p.c - 1) * (p.c - 1) as f64 * z.powi(p.c as i32 - 2)
}

/// `H2(z) psi(z) + H0^(alpha, z)`, the numerator of `phi_{c-1}` up to sign.
pub fn numerator(p: &ModelParams, alpha: Complex64, z: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    Ok(kernel::h2(p, z) * psi(p, z, b) + h0_hat(p, alpha, z, b)?)
}

/// `L(alpha, z) = -(H2 psi + H0^) / H1^`.
pub fn kernel_l(p: &ModelParams, alpha: Complex64, z: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    let d = h1_hat(p, alpha, z)?;
    if d.norm() == 0.0 {
        return Err(FluidError::ZeroDenominator("H1^ vanishes".into()));
    }
    Ok(-numerator(p, alpha, z, b)? / d)
}

/// `dL/dz`, exact in `z`.
pub fn kernel_l_dz(p: &ModelParams, alpha: Complex64, z: Complex64, b: &BoundaryVector) -> Result<Complex64> {
    let n = numerator(p, alpha, z, b)?;
    let dn = kernel::h2(p, z) * psi_dz(p, z, b)
        + (2.0 * p.lambda * z - (p.lambda + p.cmu())) * psi(p, z, b)
        + h0_hat_dz(p, alpha, z, b)?;
    let d = h1_hat(p, alpha, z)?;
    let dd = h1_hat_dz(p, alpha, z)?;
    Ok(-(dn * d - n * dd) / (d * d))
}

/// `phi_0 .. phi_{c-1}` at `alpha` off the cut, from the kernel equation and the chain.
pub fn phi_all(p: &ModelParams, alpha: Complex64, b: &BoundaryVector) -> Result<Vec<Complex64>> {
    let z0 = kernel::branch_z0(p, alpha)?;
    let top = kernel_l(p, alpha, z0, b)?;
    let chain = phi_chain_coeffs(p, alpha, b)?;
    let mut out = vec![Complex64::new(0.0, 0.0); p.c];
    out[p.c - 1] = top;
    for i in (0..p.c - 1).rev() {
        let (a, t) = chain[i];
        out[i] = t + a * out[i + 1];
    }
    Ok(out)
}
