//! Truncated-phase spectral solution of the stationary equations.
//!
//! Phases `0..=N`, arrivals blocked at `N`. The joint law solves
//!
//! ```text
//! d/dx Pi(x) R = Pi(x) Q,    Pi(x) = xi + sum_j a_j e^{s_j x} phi_j,   s_j phi_j R = phi_j Q
//! ```
//!
//! with `Pi_i(0) = 0` for every phase with `r_i > 0`. The chain is a
//! birth-death process, hence reversible, and the nonzero eigenvalues of
//! `Q R^{-1}` are the negated eigenvalues of a symmetric tridiagonal matrix
//! indexed by the `N` edges `(e, e+1)`:
//!
//! ```text
//! T[e, e]   = lambda / r_e + mu_{e+1} / r_{e+1}
//! T[e, e+1] = -sqrt(lambda mu_{e+1}) / r_{e+1}
//! ```
//!
//! Eigenvectors are recovered from those of `T` through the edge incidence
//! matrix. Only the modes with `s_j < 0` are kept; there are exactly as many
//! as there are positive-rate phases.

use crate::cfrac::{BoundarySource, BoundaryVector};
use crate::error::{FluidError, Result};
use crate::model::{self, ModelParams};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub params: ModelParams,
    pub truncation: usize,
    /// Stationary law of the truncated chain.
    pub xi: Vec<f64>,
    /// Retained eigenvalues, sorted so that `eigenvalues[0]` is the least negative.
    pub eigenvalues: Vec<f64>,
    /// Column `j` holds `phi_j / sqrt(xi)` for eigenvalue `j`.
    pub modes: DMatrix<f64>,
    pub coeffs: Vec<f64>,
    pub boundary_condition: f64,
    sqrt_xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub truncation: usize,
    pub dominant_eigenvalue: f64,
    pub boundary: Vec<f64>,
    pub boundary_condition: f64,
    pub retained_modes: usize,
}

fn truncated_xi(p: &ModelParams, n: usize) -> Vec<f64> {
    let mut lx = vec![0.0; n + 1];
    for i in 1..=n {
        lx[i] = lx[i - 1] + (p.lambda / p.down_rate(i)).ln();
    }
    let m = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = lx.iter().map(|v| (v - m).exp()).sum();
    lx.iter().map(|v| (v - m).exp() / s).collect()
}

pub fn solve_truncated(p: &ModelParams, n: usize) -> Result<SpectralSolution> {
    if n < p.c + 10 {
        return Err(FluidError::InvalidParam(format!(
            "truncation {n} must be at least c + 10 = {}",
            p.c + 10
        )));
    }
    let v = model::is_stable(p)?;
    if !v.stable {
        return Err(FluidError::UnstableFluid { drift: v.mean_drift });
    }
    let np = n + 1;
    let rr: Vec<f64> = (0..np).map(|i| p.net_rate(i)).collect();
    let xi = truncated_xi(p, n);
    let sqrt_xi: Vec<f64> = xi.iter().map(|v| v.sqrt()).collect();

    let e = n;
    let mut t = DMatrix::<f64>::zeros(e, e);
    for k in 0..e {
        t[(k, k)] = p.lambda / rr[k] + p.down_rate(k + 1) / rr[k + 1];
        if k + 1 < e {
            let off = -(p.lambda * p.down_rate(k + 1)).sqrt() / rr[k + 1];
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(t);
    let s: Vec<f64> = eig.eigenvalues.iter().map(|v| -v).collect();

    // Incidence matrix scaled by 1/sqrt|r|.
    let mut bp = DMatrix::<f64>::zeros(np, e);
    for k in 0..e {
        bp[(k, k)] = (p.lambda / rr[k].abs()).sqrt();
        bp[(k + 1, k)] = -(p.down_rate(k + 1) / rr[k + 1].abs()).sqrt();
    }
    let bu = &bp * &eig.eigenvectors;

    let mut neg: Vec<usize> = (0..e).filter(|&j| s[j] < 0.0).collect();
    neg.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let pos: Vec<usize> = (0..np).filter(|&i| rr[i] > 0.0).collect();
    if neg.len() != pos.len() {
        return Err(FluidError::Numerical(format!(
            "{} decaying modes for {} positive-rate phases",
            neg.len(),
            pos.len()
        )));
    }
    let m = neg.len();
    let mut modes = DMatrix::<f64>::zeros(np, m);
    for (col, &j) in neg.iter().enumerate() {
        for i in 0..np {
            let w = -rr[i].signum() * bu[(i, j)] / s[j];
            modes[(i, col)] = w / rr[i].abs().sqrt();
        }
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (row, &i) in pos.iter().enumerate() {
        for col in 0..m {
            a[(row, col)] = modes[(i, col)];
        }
        rhs[row] = -sqrt_xi[i];
    }
    let sv = a.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let boundary_condition = smax / smin;
    let coeffs = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FluidError::Numerical("boundary system is singular".into()))?;
    Ok(SpectralSolution {
        params: *p,
        truncation: n,
        xi,
        eigenvalues: neg.iter().map(|&j| s[j]).collect(),
        modes,
        coeffs: coeffs.iter().copied().collect(),
        boundary_condition,
        sqrt_xi,
    })
}

impl SpectralSolution {
    pub fn phases(&self) -> usize {
        self.truncation + 1
    }

    pub fn dominant(&self) -> f64 {
        self.eigenvalues[0]
    }

    fn combine(&self, weight: impl Fn(usize) -> f64) -> Vec<f64> {
        let w: Vec<f64> = (0..self.coeffs.len()).map(weight).collect();
        (0..self.phases())
            .map(|i| {
                self.sqrt_xi[i]
                    * (0..w.len()).map(|j| self.modes[(i, j)] * w[j]).sum::<f64>()
            })
            .collect()
    }

    /// `Pi_i(x) = P(X <= x, Z = i)` for all phases.
    pub fn cdf(&self, x: f64) -> Vec<f64> {
        let dev = self.combine(|j| self.coeffs[j] * (self.eigenvalues[j] * x).exp());
        self.xi.iter().zip(dev).map(|(a, b)| a + b).collect()
    }

    /// Densities `pi_i(x)` for `x > 0`.
    pub fn density(&self, x: f64) -> Vec<f64> {
        self.combine(|j| self.coeffs[j] * self.eigenvalues[j] * (self.eigenvalues[j] * x).exp())
    }

    /// `phi_i(alpha) = int e^{alpha x} pi_i(x) dx`, valid for `alpha < -s_1`.
    pub fn laplace(&self, alpha: f64) -> Vec<f64> {
        self.combine(|j| {
            let s = self.eigenvalues[j];
            self.coeffs[j] * s / (-(s + alpha))
        })
    }

    /// Contribution of the dominant mode to `pi_i(x)`.
    pub fn dominant_density(&self, i: usize, x: f64) -> f64 {
        let s = self.eigenvalues[0];
        self.sqrt_xi[i] * self.modes[(i, 0)] * self.coeffs[0] * s * (s * x).exp()
    }

    pub fn marginal_density(&self, x: f64) -> f64 {
        self.density(x).iter().sum()
    }

    /// Atoms `Pi_i(0)` for all phases.
    pub fn atoms(&self) -> Vec<f64> {
        self.cdf(0.0)
    }

    /// Eigen residual `max_i |s phi R - phi Q|_i / |phi|` for retained mode `j`.
    pub fn eigen_residual(&self, j: usize) -> f64 {
        let p = &self.params;
        let np = self.phases();
        let phi: Vec<f64> = (0..np).map(|i| self.sqrt_xi[i] * self.modes[(i, j)]).collect();
        let s = self.eigenvalues[j];
        let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut worst: f64 = 0.0;
        for i in 0..np {
            let up = if i > 0 { phi[i - 1] * p.lambda } else { 0.0 };
            let down = if i + 1 < np { phi[i + 1] * p.down_rate(i + 1) } else { 0.0 };
            let out = phi[i] * (if i < np - 1 { p.lambda } else { 0.0 } + p.down_rate(i));
            let qphi = up + down - out;
            worst = worst.max((s * phi[i] * p.net_rate(i) - qphi).abs());
        }
        worst / norm
    }

    pub fn boundary_vector(&self) -> Result<BoundaryVector> {
        let atoms = self.atoms();
        let c = self.params.c;
        for (i, &v) in atoms.iter().enumerate().take(c) {
            if v < -1e-10 {
                return Err(FluidError::NegativeMass { phase: i, value: v });
            }
        }
        let pi0: Vec<f64> = atoms[..c].iter().map(|v| v.max(0.0)).collect();
        if c >= 2 && self.params.lambda * pi0[0] - self.params.mu * pi0[1] < -1e-10 {
            return Err(FluidError::Numerical(
                "lambda Pi_0(0) - mu Pi_1(0) is negative".into(),
            ));
        }
        Ok(BoundaryVector::new(pi0, BoundarySource::SpectralOracle))
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            truncation: self.truncation,
            dominant_eigenvalue: self.dominant(),
            boundary: self.atoms()[..self.params.c].to_vec(),
            boundary_condition: self.boundary_condition,
            retained_modes: self.eigenvalues.len(),
        }
    }

    /// Window `[x_lo, 2 x_lo]` where subdominant modes are below `rel` of the dominant one at phase `i`.
    pub fn dominance_window(&self, i: usize, rel: f64) -> (f64, f64) {
        let s1 = self.dominant().abs();
        let mut x = 1.0 / s1;
        // Past this point the densities underflow.
        let cap = 300.0 / s1;
        while x < cap {
            let full = self.density(x)[i];
            let dom = self.dominant_density(i, x);
            if (full - dom).abs() < rel * dom.abs() {
                break;
            }
            x *= 1.5;
        }
        let x = x.min(cap);
        (x, 2.0 * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    pub prefactor: f64,
    pub rate_se: f64,
    pub power_se: f64,
    pub prefactor_se: f64,
}

/// Regresses `log pi_i(x) = log C + p log x - rate x` over `[x_lo, x_hi]`.
pub fn fit_decay(sol: &SpectralSolution, i: usize, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > 1.2 * lo) {
        return Err(FluidError::IllConditioned(format!("window [{lo}, {hi}] too narrow")));
    }
    let n = 64;
    let xs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| sol.density(x)[i])
        .map(|v| v.abs().ln())
        .collect();
    regress(&xs, &ys)
}

pub(crate) fn regress(xs: &[f64], ys: &[f64]) -> Result<DecayFit> {
    let n = xs.len();
    // Center the regressors for conditioning.
    let xm = xs.iter().sum::<f64>() / n as f64;
    let lm = xs.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
    let mut a = DMatrix::<f64>::zeros(n, 3);
    for (k, &x) in xs.iter().enumerate() {
        a[(k, 0)] = 1.0;
        a[(k, 1)] = x.ln() - lm;
        a[(k, 2)] = -(x - xm);
    }
    let y = DVector::from_column_slice(ys);
    let ata = a.transpose() * &a;
    let inv = ata
        .clone()
        .try_inverse()
        .ok_or_else(|| FluidError::IllConditioned("normal equations singular".into()))?;
    let beta = &inv * a.transpose() * &y;
    let resid = &y - &a * &beta;
    let sigma2 = resid.norm_squared() / (n as f64 - 3.0);
    let (c0, pw, rate) = (beta[0], beta[1], beta[2]);
    // Undo centering: log C = c0 - p lm + rate xm.
    let log_c = c0 - pw * lm + rate * xm;
    let se = |k: usize| (sigma2 * inv[(k, k)]).max(0.0).sqrt();
    let prefactor = log_c.exp();
    Ok(DecayFit {
        rate,
        power: pw,
        prefactor,
        rate_se: se(2),
        power_se: se(1),
        prefactor_se: prefactor * (se(0) + lm * se(1) + xm * se(2)),
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
    fn single_server_exact_solution() {
        // For c = 1 the untruncated atom is Pi_0(0) = xi_0 - (first moment identity) and
        // the dominant rate equals alpha~ = 0.5 exactly once N is large.
        let p = pm(1, 1.0, 3.0, 1.0);
        let sol = solve_truncated(&p, 400).unwrap();
        assert_relative_eq!(sol.dominant(), -0.5, max_relative = 1e-9);
        let atoms = sol.atoms();
        assert!(atoms[0] > 0.0);
        assert!(atoms[1..].iter().all(|v| v.abs() < 1e-12));
        let tot: f64 = sol.cdf(50.0 / 0.5).iter().sum();
        assert!((tot - 1.0).abs() < 1e-8);
    }

    #[test]
    fn residuals_small() {
        let sol = solve_truncated(&pm(3, 20.0, 30.0, 10.0), 200).unwrap();
        for j in [0, 5, 50, sol.eigenvalues.len() - 1] {
            assert!(sol.eigen_residual(j) < 1e-10, "mode {j}: {}", sol.eigen_residual(j));
        }
        assert_eq!(sol.eigenvalues.len(), 200 - 3 + 1);
    }

    #[test]
    fn ode_residual() {
        // Check d/dx Pi R = Pi Q through pi_i(x) r_i = (Pi Q)_i.
        let p = pm(2, 1.0, 1.0, 1.0);
        let sol = solve_truncated(&p, 120).unwrap();
        for &x in &[0.5, 3.0, 20.0] {
            let cdf = sol.cdf(x);
            let dens = sol.density(x);
            for i in 0..100 {
                let up = if i > 0 { cdf[i - 1] * p.lambda } else { 0.0 };
                let down = cdf[i + 1] * p.down_rate(i + 1);
                let out = cdf[i] * (p.lambda + p.down_rate(i));
                assert!((dens[i] * p.net_rate(i) - (up + down - out)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn boundary_vector_constraints() {
        let sol = solve_truncated(&pm(2, 1.0, 1.0, 1.0), 200).unwrap();
        let b = sol.boundary_vector().unwrap();
        assert!(b.pi0.iter().all(|v| *v >= 0.0));
        assert!(b.pi0.iter().sum::<f64>() < 1.0);
        assert!(b.pi0[1] * 1.0 - b.pi0[0] * 1.0 <= 0.0);
        assert_eq!(b.source, BoundarySource::SpectralOracle);
    }

    #[test]
    fn fit_recovers_single_mode() {
        let p = pm(1, 1.0, 3.0, 1.0);
        let sol = solve_truncated(&p, 400).unwrap();
        let w = sol.dominance_window(0, 1e-3);
        let fit = fit_decay(&sol, 0, w).unwrap();
        assert_relative_eq!(fit.rate, 0.5, max_relative = 1e-4);
        assert!(fit.power.abs() < 1e-2);
        assert!(fit_decay(&sol, 0, (10.0, 11.0)).is_err());
    }

    #[test]
    fn short_truncation_rejected() {
        assert!(solve_truncated(&pm(3, 1.0, 1.0, 1.0), 12).is_err());
    }
}
