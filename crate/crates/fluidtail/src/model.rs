//! Model parameters, the background M/M/c chain and its stationary law.
//!
//! The fluid level `X` grows at rate `r_i` while the M/M/c queue length is `i`:
//!
//! ```text
//! r_i = i - c   (0 <= i <= c-1)
//! r_i = r       (i >= c)
//!
//! xi_i = xi_0 rho^i / i!                (i <= c)
//! xi_i = xi_0 rho^i / (c! c^(i-c))      (i >= c),   rho = lambda / mu
//! ```
//!
//! The level is stable iff the mean drift `sum_i xi_i r_i` is negative,
//! which is equivalent to
//!
//! ```text
//! (r+1) lambda < c mu + (c mu - lambda) sum_{i=0}^{c-2} (c-i) rho^(i+1-c) (c-1)! / i!
//! ```

use crate::error::{FluidError, Result};
use crate::kernel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: usize,
    pub lambda: f64,
    pub mu: f64,
    pub r: f64,
}

impl ModelParams {
    /// Checks positivity only; ergodicity and stability are separate predicates.
    pub fn new(c: usize, lambda: f64, mu: f64, r: f64) -> Result<Self> {
        if c == 0 {
            return Err(FluidError::InvalidParam("c must be at least 1".into()));
        }
        for (name, v) in [("lambda", lambda), ("mu", mu), ("r", r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FluidError::InvalidParam(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { c, lambda, mu, r })
    }

    /// Like `new`, but also requires an ergodic chain and a stable level.
    pub fn new_stable(c: usize, lambda: f64, mu: f64, r: f64) -> Result<Self> {
        let p = Self::new(c, lambda, mu, r)?;
        let v = is_stable(&p)?;
        if !v.stable {
            return Err(FluidError::UnstableFluid { drift: v.mean_drift });
        }
        Ok(p)
    }

    pub fn cf(&self) -> f64 {
        self.c as f64
    }

    pub fn cmu(&self) -> f64 {
        self.cf() * self.mu
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    pub fn is_ergodic(&self) -> bool {
        self.lambda < self.cmu()
    }

    /// Service rate out of phase `i`.
    pub fn down_rate(&self, i: usize) -> f64 {
        i.min(self.c) as f64 * self.mu
    }

    pub fn net_rates(&self) -> NetInputRates {
        NetInputRates {
            c: self.c,
            r: self.r,
        }
    }

    pub fn net_rate(&self, i: usize) -> f64 {
        self.net_rates().rate(i)
    }

    fn require_ergodic(&self) -> Result<()> {
        if self.is_ergodic() {
            Ok(())
        } else {
            Err(FluidError::UnstableChain {
                lambda: self.lambda,
                cmu: self.cmu(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetInputRates {
    pub c: usize,
    pub r: f64,
}

impl NetInputRates {
    pub fn rate(&self, i: usize) -> f64 {
        if i < self.c {
            i as f64 - self.c as f64
        } else {
            self.r
        }
    }

    pub fn sup_abs(&self) -> f64 {
        (self.c as f64).max(self.r)
    }
}

/// Stationary law of the M/M/c queue length. Phases `0..=c` are stored; the
/// tail beyond `c` is geometric with ratio `lambda / (c mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub head: Vec<f64>,
    pub ratio: f64,
    pub rho: f64,
}

impl PhaseDistribution {
    pub fn xi(&self, i: usize) -> f64 {
        let c = self.head.len() - 1;
        if i <= c {
            self.head[i]
        } else {
            self.head[c] * self.ratio.powi((i - c) as i32)
        }
    }

    /// `sum_{i >= c} xi_i`, in closed form.
    pub fn tail_mass(&self) -> f64 {
        self.head[self.head.len() - 1] / (1.0 - self.ratio)
    }

    pub fn total(&self) -> f64 {
        let c = self.head.len() - 1;
        self.head[..c].iter().sum::<f64>() + self.tail_mass()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn phase_stationary(p: &ModelParams) -> Result<PhaseDistribution> {
    p.require_ergodic()?;
    let c = p.c;
    let lr = p.rho().ln();
    // log of rho^i / i! for i < c, and the closed-form tail rho^c / ((c-1)! (c - rho)).
    let mut terms: Vec<f64> = (0..c).map(|i| i as f64 * lr - ln_factorial(i)).collect();
    terms.push(c as f64 * lr - ln_factorial(c - 1) - (p.cf() - p.rho()).ln());
    let ln_norm = log_sum_exp(&terms);
    let head = (0..=c)
        .map(|i| (i as f64 * lr - ln_factorial(i) - ln_norm).exp())
        .collect();
    Ok(PhaseDistribution {
        head,
        ratio: p.lambda / p.cmu(),
        rho: p.rho(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub mean_drift: f64,
}

pub fn is_stable(p: &ModelParams) -> Result<StabilityVerdict> {
    let xi = phase_stationary(p)?;
    let c = p.c;
    let lr = p.rho().ln();
    let lcf = ln_factorial(c - 1);
    let sum: f64 = (0..c.saturating_sub(1))
        .map(|i| {
            ((c - i) as f64).ln() + (i as f64 + 1.0 - c as f64) * lr + lcf - ln_factorial(i)
        })
        .map(f64::exp)
        .sum();
    let lhs = (p.r + 1.0) * p.lambda;
    let rhs = p.cmu() + (p.cmu() - p.lambda) * sum;
    let mean_drift = (0..c).map(|i| xi.xi(i) * p.net_rate(i)).sum::<f64>() + p.r * xi.tail_mass();
    Ok(StabilityVerdict {
        stable: lhs < rhs,
        lhs,
        rhs,
        mean_drift,
    })
}

/// Certificate for `A V <= -s V + b 1_{L0}` with `V(x, i) = e^{alpha x} w_i`.
///
/// `w_i = z^i` for `i >= c`. When `product_form` is set, `w_i = z^i` for
/// every phase; otherwise the lower weights come from a backward recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCertificate {
    pub alpha: f64,
    pub z: f64,
    pub s: f64,
    pub product_form: bool,
    /// Weights for phases `0..=c`.
    pub weights: Vec<f64>,
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

/// Open interval where `lambda z^2 - q z + p < 0`, or `None`.
fn quad_neg_interval(lambda: f64, q: f64, p: f64) -> Option<(f64, f64)> {
    let d = q * q - 4.0 * lambda * p;
    if d <= 0.0 {
        return None;
    }
    let sd = d.sqrt();
    let hi = (q + sd) / (2.0 * lambda);
    let lo = if q > 0.0 {
        2.0 * p / (q + sd)
    } else {
        (q - sd) / (2.0 * lambda)
    };
    Some((lo, hi))
}

/// Drift of row `i` divided by `w_i` under weights `w`, returned as the slack `s_i`.
fn row_slack(p: &ModelParams, alpha: f64, z: f64, w: &[f64], i: usize) -> f64 {
    let c = p.c;
    let wi = |k: usize| if k <= c { w[k] } else { w[c] * z.powi((k - c) as i32) };
    let up = p.lambda * wi(i + 1);
    let down = if i == 0 { 0.0 } else { p.down_rate(i) * wi(i - 1) };
    let out = (p.lambda + p.down_rate(i)) * wi(i);
    let gen = alpha * p.net_rate(i) * wi(i) + up + down - out;
    -gen / wi(i)
}

/// Minimum over all phases of the slack `s` achieved by a certificate.
/// Phases `i > c` share one slack since the weights are geometric there.
pub fn certificate_slack(p: &ModelParams, cert: &DriftCertificate) -> f64 {
    (0..=p.c + 1)
        .map(|i| row_slack(p, cert.alpha, cert.z, &cert.weights, i))
        .fold(f64::INFINITY, f64::min)
}

fn product_certificate(p: &ModelParams, alpha: f64) -> Option<(f64, f64)> {
    let c = p.c;
    let (l, m) = (p.lambda, p.mu);
    let b1 = quad_neg_interval(l, l + p.cmu() - alpha * p.r, p.cmu())?;
    let mut iv = intersect(b1, (1.0, f64::INFINITY));
    for i in 0..c {
        let q = (c - i) as f64 * alpha + l + i as f64 * m;
        let bi = if i == 0 {
            (0.0, q / l)
        } else {
            quad_neg_interval(l, q, i as f64 * m)?
        };
        iv = intersect(iv, bi);
    }
    if iv.0 >= iv.1 {
        return None;
    }
    let z = 0.5 * (iv.0 + iv.1);
    let mut s = l + p.cmu() - alpha * p.r - l * z - p.cmu() / z;
    for i in 0..c {
        let fi = i as f64;
        s = s.min((c - i) as f64 * alpha + l + fi * m - l * z - fi * m / z);
    }
    (s > 0.0).then_some((z, s))
}

fn shoot_weights(p: &ModelParams, alpha: f64, z: f64, s: f64) -> Option<Vec<f64>> {
    let c = p.c;
    let mut w = vec![0.0; c + 1];
    w[c] = z.powi(c as i32);
    // Largest weight allowed by row c; larger weights only loosen the rows below.
    w[c - 1] = (p.lambda + p.cmu() - alpha * p.r - s - p.lambda * z) * w[c] / p.cmu();
    if !(w[c - 1] > 0.0) {
        return None;
    }
    for i in (1..c).rev() {
        let fi = i as f64;
        let v = ((p.lambda + fi * p.mu + (c - i) as f64 * alpha - s) * w[i] - p.lambda * w[i + 1])
            / (fi * p.mu);
        if !(v > 0.0) {
            return None;
        }
        w[i - 1] = v;
    }
    (p.lambda * w[1] <= (p.lambda + p.cf() * alpha - s) * w[0]).then_some(w)
}

fn weighted_certificate(p: &ModelParams, alpha: f64, z: f64) -> Option<(f64, Vec<f64>)> {
    let f = p.lambda + p.cmu() - alpha * p.r - p.lambda * z - p.cmu() / z;
    if f <= 0.0 {
        return None;
    }
    shoot_weights(p, alpha, z, f * 1e-12)?;
    let (mut lo, mut hi) = (f * 1e-12, f);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot_weights(p, alpha, z, mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shoot_weights(p, alpha, z, lo).map(|w| (lo, w))
}

/// Grid on (0, 1) dense near both ends.
fn unit_grid(n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|k| 10f64.powf(-7.0 + 7.0 * k as f64 / n as f64))
        .filter(|&t| t < 0.5)
        .collect();
    let tail: Vec<f64> = g.iter().map(|t| 1.0 - t).collect();
    g.extend((1..n).map(|k| k as f64 / n as f64));
    g.extend(tail);
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Searches `alpha` in `(0, alpha_1)` for a drift certificate, maximizing `s`.
pub fn drift_certificate(p: &ModelParams) -> Result<DriftCertificate> {
    let v = is_stable(p)?;
    if !v.stable {
        return Err(FluidError::UnstableFluid { drift: v.mean_drift });
    }
    let a1 = kernel::branch_points(p).alpha1;
    let grid = unit_grid(48);
    let mut best: Option<DriftCertificate> = None;
    for &t in &grid {
        let alpha = a1 * t;
        if let Some((z, s)) = product_certificate(p, alpha) {
            if best.as_ref().is_none_or(|b| s > b.s) {
                let weights = (0..=p.c).map(|i| z.powi(i as i32)).collect();
                best = Some(DriftCertificate {
                    alpha,
                    z,
                    s,
                    product_form: true,
                    weights,
                });
            }
        }
    }
    if best.is_some() {
        return finish(p, best);
    }
    for &t in &grid {
        let alpha = a1 * t;
        let (z0, z1) = (kernel::z0_real(p, alpha), kernel::z1_real(p, alpha));
        let (lo, hi) = (z0.max(1.0), z1);
        if lo >= hi {
            continue;
        }
        for &u in &grid {
            let z = lo + (hi - lo) * u;
            if let Some((s, weights)) = weighted_certificate(p, alpha, z) {
                if best.as_ref().is_none_or(|b| s > b.s) {
                    best = Some(DriftCertificate {
                        alpha,
                        z,
                        s,
                        product_form: false,
                        weights,
                    });
                }
            }
        }
    }
    finish(p, best)
}

fn finish(p: &ModelParams, best: Option<DriftCertificate>) -> Result<DriftCertificate> {
    let mut cert = best.ok_or(FluidError::CertificateNotFound)?;
    // Report the slack actually achieved, row by row.
    cert.s = certificate_slack(p, &cert);
    if cert.s > 0.0 {
        Ok(cert)
    } else {
        Err(FluidError::CertificateNotFound)
    }
}
