//! Decay rate, regime and prefactors of the stationary level density.
//!
//! `phi_{c-1}(alpha) = L(alpha, Z0(alpha))` is analytic for `alpha < alpha*`.
//! Its dominant singularity is either a pole `alpha~` of order `k` or the
//! branch point `alpha_1`:
//!
//! ```text
//! Case I    alpha~ <  alpha_1   phi ~ c1 (alpha~ - alpha)^{-k}          pi ~ C1 x^{k-1} e^{-alpha* x},  C1 = c1 / Gamma(k)
//! Case II   alpha~ =  alpha_1   phi ~ c2 (alpha_1 - alpha)^{-1/2}       pi ~ C2 x^{-1/2} e^{-alpha* x}, C2 = c2 / sqrt(pi)
//! Case III  no zero             phi' ~ c3 (alpha_1 - alpha)^{-1/2}      pi ~ C3 x^{-3/2} e^{-alpha* x}, C3 = c3 / sqrt(pi)
//!
//! c1 = -(-1)^k k! N / f^(k)(alpha~),      f(alpha) = H1^(alpha, Z0(alpha))
//! c2 = 2 lambda N / (dH1^/dz  r sqrt(alpha_2 - alpha*))
//! c3 = dL/dz  r sqrt(alpha_2 - alpha_1) / (4 lambda)
//! ```
//!
//! where `N = H2(Z0) psi(Z0) + H0^(alpha*, Z0)` and the last two use
//! `Z0(alpha) ~ z* - r sqrt(alpha_2 - alpha_1) sqrt(alpha_1 - alpha) / (2 lambda)`.
//!
//! Phases above `c - 1` decay with the same rate. In Case I the phase ratio
//! is `1 / Z1(alpha*)`; in Cases II and III `Z0 = Z1` at `alpha_1`.

use crate::cfrac::{self, BoundaryVector};
use crate::error::{FluidError, Result};
use crate::kernel;
use crate::model::{self, ModelParams};
use crate::numdiff;
use crate::roots::{self, ZeroFinding};
use crate::spectral;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    II,
    III,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub case: CaseTag,
    pub alpha_star: f64,
    pub alpha1: f64,
    pub k: usize,
}

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn classify(p: &ModelParams, zero: &ZeroFinding) -> Result<Classification> {
    let a1 = kernel::branch_points(p).alpha1;
    let (case, alpha_star, k) = match zero.alpha_tilde {
        Some(at) if (at - a1).abs() <= 1e-9 * a1 => (CaseTag::II, a1, 1),
        Some(at) if at < a1 => (CaseTag::I, at, zero.k),
        Some(at) => {
            return Err(FluidError::AssumptionViolated(format!(
                "zero {at} lies beyond alpha_1 = {a1}"
            )))
        }
        None => (CaseTag::III, a1, 1),
    };
    if !(alpha_star > 0.0 && alpha_star <= a1) {
        return Err(FluidError::Numerical(format!("alpha* = {alpha_star} outside (0, alpha_1]")));
    }
    Ok(Classification {
        case,
        alpha_star,
        alpha1: a1,
        k,
    })
}

fn numerator_at(p: &ModelParams, alpha: f64, b: &BoundaryVector) -> Result<f64> {
    let z0 = kernel::z0_real(p, alpha);
    Ok(cfrac::numerator(p, cx(alpha), cx(z0), b)?.re)
}

/// `c1` and an error estimate from the derivative extrapolation.
pub fn constant_c1(p: &ModelParams, b: &BoundaryVector, zero: &ZeroFinding) -> Result<(f64, f64)> {
    let cls = classify(p, zero)?;
    if cls.case != CaseTag::I {
        return Err(FluidError::InvalidParam("c1 is defined in Case I only".into()));
    }
    let (at, k) = (cls.alpha_star, cls.k);
    let f = |a: f64| roots::h1_on_z0(p, a).unwrap_or(f64::NAN);
    let h = 0.1 * at.min(cls.alpha1 - at);
    let (d, err) = numdiff::derivative(&f, at, k, h);
    if !(d.abs() > 1e-12 * zero.scale / cls.alpha1.powi(k as i32)) {
        return Err(FluidError::ZeroDenominator(format!("f^({k})(alpha~) = {d}")));
    }
    let n = numerator_at(p, at, b)?;
    let kfact: f64 = (1..=k).map(|j| j as f64).product();
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
    let c1 = sign * kfact * n / d;
    Ok((c1, (c1 * err / d).abs()))
}

pub fn constant_c2(p: &ModelParams, b: &BoundaryVector) -> Result<f64> {
    let bp = kernel::branch_points(p);
    let a = bp.alpha1;
    let z = kernel::z0_real(p, a);
    let dz = cfrac::h1_hat_dz(p, cx(a), cx(z))?.re;
    if dz == 0.0 {
        return Err(FluidError::ZeroDenominator("dH1^/dz vanishes at the branch point".into()));
    }
    let n = numerator_at(p, a, b)?;
    Ok(2.0 * p.lambda * n / (dz * p.r * (bp.alpha2 - a).sqrt()))
}

pub fn constant_c3(p: &ModelParams, b: &BoundaryVector) -> Result<f64> {
    let bp = kernel::branch_points(p);
    let a = bp.alpha1;
    let z = kernel::z0_real(p, a);
    let dl = cfrac::kernel_l_dz(p, cx(a), cx(z), b)?.re;
    Ok(dl * p.r * (bp.alpha2 - a).sqrt() / (4.0 * p.lambda))
}

fn gamma_int(k: usize) -> f64 {
    (1..k).map(|j| j as f64).product()
}

/// Density prefactor `C` and power of `x` for the given regime.
pub fn density_prefactor(case: CaseTag, c_const: f64, k: usize) -> (f64, f64) {
    match case {
        CaseTag::I => (c_const / gamma_int(k), k as f64 - 1.0),
        CaseTag::II => (c_const / PI.sqrt(), -0.5),
        CaseTag::III => (c_const / PI.sqrt(), -1.5),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub case_tag: CaseTag,
    pub alpha_star: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub k: usize,
    /// `Z0(alpha*)`
    pub z_star: f64,
    /// `c mu / lambda`
    pub z_tilde: f64,
    /// Ratio of consecutive phase prefactors for phases `>= c-1`.
    pub phase_ratio: f64,
    pub c_const: f64,
    pub c_const_err: f64,
    #[serde(rename = "C_const")]
    pub big_c: f64,
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    pub d_ztilde: f64,
    pub power: f64,
    pub boundary: BoundaryVector,
    pub zero: ZeroFinding,
}

/// Full analytic report from a known boundary vector.
pub fn analyze_with_boundary(p: &ModelParams, b: &BoundaryVector, zero: &ZeroFinding) -> Result<TailReport> {
    let cls = classify(p, zero)?;
    let bp = kernel::branch_points(p);
    let (c_const, c_const_err) = match cls.case {
        CaseTag::I => constant_c1(p, b, zero)?,
        CaseTag::II => (constant_c2(p, b)?, 0.0),
        CaseTag::III => (constant_c3(p, b)?, 0.0),
    };
    let (big_c, power) = density_prefactor(cls.case, c_const, cls.k);
    let z_star = kernel::z0_real(p, cls.alpha_star);
    let phase_ratio = match cls.case {
        CaseTag::I => 1.0 / kernel::z1_real(p, cls.alpha_star),
        _ => 1.0 / z_star,
    };
    let c_tilde = marginal_bracket(p, cls.alpha_star)? * big_c;
    let d_ztilde = boundary_tail(p, b)?.d_ztilde;
    Ok(TailReport {
        case_tag: cls.case,
        alpha_star: cls.alpha_star,
        alpha1: bp.alpha1,
        alpha2: bp.alpha2,
        k: cls.k,
        z_star,
        z_tilde: p.cmu() / p.lambda,
        phase_ratio,
        c_const,
        c_const_err,
        big_c,
        c_tilde,
        d_ztilde,
        power,
        boundary: b.clone(),
        zero: zero.clone(),
    })
}

/// Runs the zero search and the spectral solve for the boundary, then assembles the report.
pub fn analyze(p: &ModelParams, truncation: usize) -> Result<TailReport> {
    let zero = roots::find_alpha_tilde(p)?;
    let sol = spectral::solve_truncated(p, truncation)?;
    let b = sol.boundary_vector()?;
    analyze_with_boundary(p, &b, &zero)
}

/// `H1^(alpha*, 1) / H(alpha*, 1) + sum_{k=0}^{c-2} prod_{m=k}^{c-2} A_m(alpha*)`.
pub fn marginal_bracket(p: &ModelParams, alpha: f64) -> Result<f64> {
    let h = kernel::kernel_h_real(p, alpha, 1.0);
    let a = cfrac::a_values_real(p, alpha)?;
    let mut chain = 0.0;
    for k in 0..a.len() {
        chain += a[k..].iter().product::<f64>();
    }
    Ok(cfrac::h1_hat_real(p, alpha, 1.0)? / h + chain)
}

/// Leading behaviour `pi(x) ~ density_prefactor x^power e^{-rate x}` and
/// `Pi(x) - limit ~ cdf_prefactor x^power e^{-rate x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDescriptor {
    pub phase: Option<usize>,
    pub rate: f64,
    pub power: f64,
    pub density_prefactor: f64,
    pub cdf_prefactor: f64,
    pub limit: f64,
}

fn descriptor(report: &TailReport, phase: Option<usize>, pref: f64, limit: f64) -> AsymptoticDescriptor {
    AsymptoticDescriptor {
        phase,
        rate: report.alpha_star,
        power: report.power,
        density_prefactor: pref,
        cdf_prefactor: -pref / report.alpha_star,
        limit,
    }
}

pub fn joint_tail(i: usize, report: &TailReport, p: &ModelParams) -> Result<AsymptoticDescriptor> {
    if i + 1 < p.c {
        return Err(FluidError::InvalidParam(format!("phase {i} is below c - 1")));
    }
    let xi = model::phase_stationary(p)?;
    let pref = report.big_c * report.phase_ratio.powi((i + 1 - p.c) as i32);
    Ok(descriptor(report, Some(i), pref, xi.xi(i)))
}

pub fn phi_lower_chain_tail(i: usize, report: &TailReport, p: &ModelParams) -> Result<AsymptoticDescriptor> {
    if i + 1 >= p.c {
        return Err(FluidError::InvalidParam(format!("phase {i} is not below c - 1")));
    }
    let a = cfrac::a_values_real(p, report.alpha_star)?;
    let mult: f64 = a[i..].iter().product();
    let xi = model::phase_stationary(p)?;
    Ok(descriptor(report, Some(i), report.big_c * mult, xi.xi(i)))
}

pub fn marginal_tail(report: &TailReport) -> AsymptoticDescriptor {
    descriptor(report, None, report.c_tilde, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTail {
    pub z_tilde: f64,
    pub alpha_at_z_tilde: f64,
    pub d_ztilde: f64,
    pub ratio: f64,
}

/// `d = [H1^(0, z~) phi_{c-1}(0) + H0^(0, z~)] / (lambda (z~ - 1))` with `z~ = c mu / lambda`.
pub fn boundary_tail(p: &ModelParams, b: &BoundaryVector) -> Result<BoundaryTail> {
    let zt = p.cmu() / p.lambda;
    let alpha = kernel::alpha_of_z(p, cx(zt)).re;
    let xi = model::phase_stationary(p)?;
    let phi = xi.xi(p.c - 1) - b.get(p.c - 1);
    let h1 = cfrac::h1_hat(p, cx(0.0), cx(zt))?.re;
    let h0 = cfrac::h0_hat(p, cx(0.0), cx(zt), b)?.re;
    Ok(BoundaryTail {
        z_tilde: zt,
        alpha_at_z_tilde: alpha,
        d_ztilde: (h1 * phi + h0) / (p.lambda * (zt - 1.0)),
        ratio: 1.0 / zt,
    })
}

/// `-(lambda / c mu) z + (lambda + c mu) / c mu - r alpha / c mu - 1/z`, zero when `H(alpha, z) = 0`.
pub fn kernel_ratio_residual(p: &ModelParams, alpha: f64, z: f64) -> f64 {
    let cmu = p.cmu();
    -(p.lambda / cmu) * z + (p.lambda + cmu) / cmu - p.r * alpha / cmu - 1.0 / z
}
