//! The zero `alpha~` of `H1^(alpha, Z0(alpha))` in `(0, alpha_1]`.
//!
//! With `A_{c-2} = P / Q` and `N(alpha) = lambda P + (mu - alpha (r+1)) Q`,
//!
//! ```text
//! Q H1^(alpha, z) = z^{c-1} (N z - c mu Q)
//!
//! g(alpha) = 2a Q^2 H1^(alpha, Z0) H1^(alpha, Z1)
//!          = 2a (c mu / lambda)^c g~(alpha)
//! g~(alpha) = N^2 - b(alpha) N Q + c lambda mu Q^2
//! ```
//!
//! using `Z0 Z1 = c mu / lambda` and `Z0 + Z1 = b / lambda`. `g~` always
//! vanishes at `alpha = 0` (where `Z0 = 1`); that root is divided out. Real
//! roots in `(0, alpha_1]` are kept only if they belong to the `Z0` factor.
//!
//! Closed forms:
//!
//! ```text
//! c = 1:  g~ / alpha = (r+1) alpha - mu + lambda (r+1)
//! c = 2:  g~ / alpha = 4(r+1) alpha^3 + 4(2 lambda (r+1) + mu r) alpha^2
//!                    + (5 lambda^2 (r+1) + 2 lambda mu r - 4 mu^2) alpha
//!                    + lambda^3 (r+1) - 4 lambda mu^2
//! ```

use crate::cfrac::{self, BoundaryVector};
use crate::error::{FluidError, Result};
use crate::kernel;
use crate::model::{self, ModelParams};
use crate::numdiff;
use crate::poly::Poly;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroMethod {
    ClosedFormC1,
    CubicC2,
    RationalizedGeneral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha: f64,
    /// `|H1^(alpha, Z0(alpha))|`
    pub on_z0: f64,
    /// `|H1^(alpha, Z1(alpha))|`
    pub on_z1: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroFinding {
    pub alpha_tilde: Option<f64>,
    pub k: usize,
    pub method: ZeroMethod,
    /// Roots of `g~ / alpha`.
    #[serde(with = "complex_list")]
    pub all_roots: Vec<Complex64>,
    pub candidates: Vec<Candidate>,
    pub scale: f64,
    pub alpha1: f64,
}

mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// `g~(alpha)`, including the trivial root at zero.
pub fn rationalize_g_tilde(p: &ModelParams) -> Poly {
    let (pp, q) = cfrac::last_a_parts(p);
    let n = &pp.scale(p.lambda) + &(&Poly::linear(p.mu, -(p.r + 1.0)) * &q);
    let b = Poly::linear(p.lambda + p.cmu(), -p.r);
    let nq = &n * &q;
    &(&(&n * &n) - &(&b * &nq)) + &(&q * &q).scale(p.cmu() * p.lambda)
}

/// `g(alpha) = 2a Q^2 H1^(alpha, Z0) H1^(alpha, Z1)` as a polynomial.
pub fn rationalize_g(p: &ModelParams) -> Poly {
    let pre = -2.0 * p.lambda * (p.cmu() / p.lambda).powi(p.c as i32);
    rationalize_g_tilde(p).scale(pre)
}

/// `g~(alpha) / alpha`.
pub fn reduced_g(p: &ModelParams) -> Poly {
    rationalize_g_tilde(p).deflate(0.0).0
}

pub fn cubic_c2(p: &ModelParams) -> Poly {
    let (l, m, r1) = (p.lambda, p.mu, p.r + 1.0);
    Poly::new(vec![
        l.powi(3) * r1 - 4.0 * l * m * m,
        5.0 * l * l * r1 + 2.0 * l * m * p.r - 4.0 * m * m,
        4.0 * (2.0 * l * r1 + m * p.r),
        4.0 * r1,
    ])
}

/// `H1^(alpha, Z0(alpha))` for real `alpha <= alpha_1`.
pub fn h1_on_z0(p: &ModelParams, alpha: f64) -> Result<f64> {
    cfrac::h1_hat_real(p, alpha, kernel::z0_real(p, alpha))
}

pub fn h1_on_z1(p: &ModelParams, alpha: f64) -> Result<f64> {
    cfrac::h1_hat_real(p, alpha, kernel::z1_real(p, alpha))
}

/// `max |H1^(alpha, Z0(alpha))|` over a grid of `(0, alpha_1]`.
pub fn zero_scale(p: &ModelParams) -> f64 {
    let a1 = kernel::branch_points(p).alpha1;
    (1..=200)
        .filter_map(|j| h1_on_z0(p, a1 * j as f64 / 200.0).ok())
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn default_method(p: &ModelParams) -> ZeroMethod {
    match p.c {
        1 => ZeroMethod::ClosedFormC1,
        2 => ZeroMethod::CubicC2,
        _ => ZeroMethod::RationalizedGeneral,
    }
}

pub fn find_alpha_tilde(p: &ModelParams) -> Result<ZeroFinding> {
    find_alpha_tilde_with(p, default_method(p))
}

pub fn find_alpha_tilde_with(p: &ModelParams, method: ZeroMethod) -> Result<ZeroFinding> {
    let v = model::is_stable(p)?;
    if !v.stable {
        return Err(FluidError::UnstableFluid { drift: v.mean_drift });
    }
    let a1 = kernel::branch_points(p).alpha1;
    let all_roots = match method {
        ZeroMethod::ClosedFormC1 if p.c == 1 => {
            vec![Complex64::new(p.mu / (p.r + 1.0) - p.lambda, 0.0)]
        }
        ZeroMethod::CubicC2 if p.c == 2 => cubic_c2(p).roots(),
        ZeroMethod::RationalizedGeneral => reduced_g(p).roots(),
        _ => {
            return Err(FluidError::InvalidParam(format!(
                "method {method:?} does not apply to c = {}",
                p.c
            )))
        }
    };
    let scale = zero_scale(p);
    let mut candidates = Vec::new();
    for z in &all_roots {
        let re = z.re;
        if z.im.abs() > 1e-9 * re.abs().max(1.0) || re <= 0.0 || re > a1 * (1.0 + 1e-9) {
            continue;
        }
        if (re - a1).abs() <= 1e-9 * a1 {
            // Both branches coincide here, and H1^(., Z0(.)) has a square-root
            // singularity, so a root 1e-9 away leaves a residual near 1e-4.5.
            let v = h1_on_z0(p, a1)?.abs();
            candidates.push(Candidate {
                alpha: a1,
                on_z0: v,
                on_z1: v,
                accepted: v < 1e-4 * scale,
            });
            continue;
        }
        let on_z0 = h1_on_z0(p, re)?.abs();
        let on_z1 = h1_on_z1(p, re)?.abs();
        let accepted = on_z0 < 1e-8 * scale && on_z1 > 1e-4 * scale;
        candidates.push(Candidate {
            alpha: re,
            on_z0,
            on_z1,
            accepted,
        });
    }
    let mut survivors: Vec<f64> = candidates.iter().filter(|c| c.accepted).map(|c| c.alpha).collect();
    survivors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    survivors.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    if survivors.len() > 1 {
        return Err(FluidError::AssumptionViolated(format!(
            "{} zeros of H1^(alpha, Z0(alpha)) in (0, alpha_1]: {:?}",
            survivors.len(),
            survivors
        )));
    }
    let alpha_tilde = survivors.first().copied();
    let k = match alpha_tilde {
        Some(at) if at < a1 => multiplicity(p, at, a1, scale)?,
        _ => 1,
    };
    Ok(ZeroFinding {
        alpha_tilde,
        k,
        method,
        all_roots,
        candidates,
        scale,
        alpha1: a1,
    })
}

/// Smallest `j` in `1..=4` with a non-negligible `j`-th derivative of `H1^(., Z0(.))`.
fn multiplicity(p: &ModelParams, at: f64, a1: f64, scale: f64) -> Result<usize> {
    let f = |a: f64| h1_on_z0(p, a).unwrap_or(f64::NAN);
    let h = 0.1 * at.min(a1 - at);
    let mut fact = 1.0;
    for j in 1..=4 {
        fact *= j as f64;
        let (d, _) = numdiff::derivative(&f, at, j, h);
        if d.is_finite() && d.abs() * a1.powi(j as i32) / fact > 1e-6 * scale {
            return Ok(j);
        }
    }
    Err(FluidError::MultiplicityTooHigh(4))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub alpha_tilde: f64,
    /// `N(alpha~) = H2(Z0) psi(Z0) + H0^(alpha~, Z0)`
    pub numerator: f64,
    pub scale: f64,
    pub degenerate: bool,
    /// Independent closed form of the numerator for `c <= 2`.
    pub closed_form: Option<f64>,
}

pub fn check_assumption1(p: &ModelParams, zero: &ZeroFinding, b: &BoundaryVector) -> Result<Assumption1Report> {
    let at = zero
        .alpha_tilde
        .ok_or_else(|| FluidError::InvalidParam("no zero to check".into()))?;
    let z0 = kernel::z0_real(p, at);
    let zc = Complex64::new(z0, 0.0);
    let n = cfrac::numerator(p, Complex64::new(at, 0.0), zc, b)?.re;
    let scale = b.pi0.iter().map(|v| v.abs()).sum::<f64>() * p.lambda * z0.powi(p.c as i32 + 1);
    let closed_form = match p.c {
        1 => Some(p.lambda * z0 * (z0 - 1.0) * b.get(0)),
        2 => {
            let (l, m) = (p.lambda, p.mu);
            Some(
                z0 * z0
                    * (l * (z0 - 1.0) * b.get(1)
                        + 2.0 * at * (l * b.get(0) - m * b.get(1)) / (2.0 * at + l)),
            )
        }
        _ => None,
    };
    Ok(Assumption1Report {
        alpha_tilde: at,
        numerator: n,
        scale,
        degenerate: !(n.abs() >= 1e-8 * scale) || scale == 0.0,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pm(c: usize, l: f64, m: f64, r: f64) -> ModelParams {
        ModelParams::new(c, l, m, r).unwrap()
    }

    #[test]
    fn g_tilde_c1_closed_form() {
        let p = pm(1, 1.3, 5.0, 0.7);
        let g = rationalize_g_tilde(&p);
        let expect = Poly::new(vec![0.0, p.lambda * (p.r + 1.0) - p.mu, p.r + 1.0]);
        for (a, b) in g.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(g.coeffs()[0], 0.0);
    }

    #[test]
    fn g_matches_product_of_branches() {
        // g = 2a Q^2 H1^(Z0) H1^(Z1), checked at complex alpha.
        let p = pm(3, 2.0, 1.5, 1.2);
        let (_, q) = cfrac::last_a_parts(&p);
        let g = rationalize_g(&p);
        for &a in &[Complex64::new(0.3, 0.2), Complex64::new(-0.4, 1.1), Complex64::new(2.0, -0.5)] {
            let (z0, z1) = kernel::branches(&p, a).unwrap();
            let prod = -2.0 * p.lambda
                * q.eval_c(a).powi(2)
                * cfrac::h1_hat(&p, a, z0).unwrap()
                * cfrac::h1_hat(&p, a, z1).unwrap();
            let got = g.eval_c(a);
            assert!((got - prod).norm() < 1e-9 * prod.norm().max(1.0), "{got} vs {prod}");
        }
    }

    #[test]
    fn cubic_matches_general_c2() {
        let p = pm(2, 1.7, 2.9, 1.3);
        let a = reduced_g(&p).normalized();
        let b = cubic_c2(&p).normalized();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn c1_case_one() {
        let z = find_alpha_tilde(&pm(1, 1.0, 3.0, 1.0)).unwrap();
        assert_eq!(z.method, ZeroMethod::ClosedFormC1);
        assert_eq!(z.alpha_tilde, Some(0.5));
        assert_eq!(z.k, 1);
        let g = find_alpha_tilde_with(&pm(1, 1.0, 3.0, 1.0), ZeroMethod::RationalizedGeneral).unwrap();
        assert!((g.alpha_tilde.unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn c1_case_two_at_branch_point() {
        let z = find_alpha_tilde(&pm(1, 1.0, 4.0, 1.0)).unwrap();
        assert_eq!(z.alpha_tilde, Some(1.0));
        assert_eq!(z.k, 1);
    }

    #[test]
    fn c1_spurious_root_rejected() {
        // mu > lambda (r+1)^2: mu/(r+1) - lambda belongs to the Z1 factor.
        let z = find_alpha_tilde(&pm(1, 1.0, 100.0, 1.0)).unwrap();
        assert_eq!(z.alpha_tilde, None);
        assert_eq!(z.candidates.len(), 1);
        assert!(!z.candidates[0].accepted);
        assert!(z.candidates[0].on_z1 < 1e-10 * z.scale);
    }

    #[test]
    fn c3_example_roots() {
        let p = pm(3, 20.0, 30.0, 10.0);
        let z = find_alpha_tilde(&p).unwrap();
        assert_eq!(z.alpha_tilde, None);
        let mut re: Vec<f64> = z.all_roots.iter().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let frozen = [-87.9052408, -30.7917914, -20.8280780, -3.56423499, 2.48328465170759];
        for (a, b) in re.iter().zip(frozen) {
            assert_relative_eq!(*a, b, max_relative = 1e-7);
        }
        assert!(z.all_roots.iter().all(|r| r.im == 0.0));
        // The positive root lies below alpha_1 but on the Z1 factor.
        assert_eq!(z.candidates.len(), 1);
        assert!(!z.candidates[0].accepted);
    }

    #[test]
    fn case_one_multi_server() {
        let z = find_alpha_tilde(&pm(2, 4.21, 3.3, 1.2)).unwrap();
        assert_relative_eq!(z.alpha_tilde.unwrap(), 0.0992312350110077, max_relative = 1e-9);
        assert_eq!(z.k, 1);
        let z = find_alpha_tilde(&pm(3, 5.4, 3.4, 3.65)).unwrap();
        assert_relative_eq!(z.alpha_tilde.unwrap(), 0.12480489243693048, max_relative = 1e-9);
    }

    #[test]
    fn assumption1_closed_forms() {
        let p = pm(2, 4.21, 3.3, 1.2);
        let z = find_alpha_tilde(&p).unwrap();
        let b = BoundaryVector::new(vec![0.05, 0.03], cfrac::BoundarySource::UserSupplied);
        let rep = check_assumption1(&p, &z, &b).unwrap();
        assert_relative_eq!(rep.numerator, rep.closed_form.unwrap(), max_relative = 1e-12);
        assert!(!rep.degenerate);
        let rep = check_assumption1(&p, &z, &BoundaryVector::zeros(2)).unwrap();
        assert!(rep.degenerate);
        let p = pm(1, 1.0, 3.0, 1.0);
        let z = find_alpha_tilde(&p).unwrap();
        let b = BoundaryVector::new(vec![0.3], cfrac::BoundarySource::UserSupplied);
        let rep = check_assumption1(&p, &z, &b).unwrap();
        assert_relative_eq!(rep.numerator, rep.closed_form.unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn unstable_rejected() {
        assert!(find_alpha_tilde(&pm(1, 1.0, 1.0, 1.0)).is_err());
    }
}
