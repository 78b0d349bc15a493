//! Event-driven Monte Carlo of the fluid queue.
//!
//! Between jumps of the M/M/c queue the level moves linearly,
//!
//! ```text
//! X(t + u) = max(0, X(t) + r_Z u)
//! ```
//!
//! which is exact because `r_Z` is constant on the interval and the level only
//! sticks at zero when `r_Z < 0`. The level is sampled on a deterministic time
//! grid after warmup, so histogram frequencies estimate the time-stationary law.

use crate::error::{FluidError, Result};
use crate::model::{self, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Simulated time per replication.
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub sample_stride: f64,
    pub replications: usize,
    pub bin_width: f64,
    /// Phases `0..tracked_phases` get their own survival curve.
    pub tracked_phases: usize,
    /// Time blocks per replication used by the bootstrap.
    pub blocks: usize,
}

impl SimConfig {
    pub fn new(params: ModelParams, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            horizon,
            warmup: horizon * 0.01,
            seed,
            sample_stride: 0.1,
            replications: 1,
            bin_width: 0.05,
            tracked_phases: params.c + 3,
            blocks: 32,
        }
    }

    /// Horizon chosen so that about `events` jumps happen in total.
    pub fn with_events(params: ModelParams, events: f64, seed: u64) -> Self {
        // In steady state up and down jumps balance, so the jump rate is 2 lambda.
        Self::new(params, events / (2.0 * params.lambda), seed)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > self.warmup && self.warmup >= 0.0) {
            return Err(FluidError::InvalidParam("need horizon > warmup >= 0".into()));
        }
        if !(self.sample_stride > 0.0 && self.bin_width > 0.0) {
            return Err(FluidError::InvalidParam("stride and bin width must be positive".into()));
        }
        if self.replications == 0 || self.blocks == 0 {
            return Err(FluidError::InvalidParam("need at least one replication and block".into()));
        }
        Ok(())
    }
}

/// Level histograms and phase occupation from one or more replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub bin_width: f64,
    /// Grid `x_k = k * bin_width`.
    pub grid: Vec<f64>,
    /// `P(X > x_k)`.
    pub survival: Vec<f64>,
    /// `P(Z = i, X > x_k)` for tracked phases.
    pub per_phase: Vec<Vec<f64>>,
    pub samples: u64,
    pub zero_fraction: f64,
    /// Fraction of sampled phases equal to `i`.
    pub phase_freq: Vec<f64>,
    /// Time spent in phase `i` divided by total time.
    pub sojourn: Vec<f64>,
    pub events: u64,
    /// Per-block level histograms (counts of samples with `X` in bin `k`, `X > 0`).
    pub block_counts: Vec<Vec<u64>>,
    pub block_samples: Vec<u64>,
    pub seed: u64,
}

#[derive(Default, Clone)]
struct Acc {
    hist: Vec<Vec<u64>>, // [phase][bin], last row = untracked phases
    zeros: u64,
    samples: u64,
    phase_counts: Vec<u64>,
    sojourn: Vec<f64>,
    events: u64,
    block_counts: Vec<Vec<u64>>,
    block_samples: Vec<u64>,
}

fn bump(v: &mut Vec<u64>, k: usize) {
    if v.len() <= k {
        v.resize(k + 1, 0);
    }
    v[k] += 1;
}

fn run_one(cfg: &SimConfig, rep: usize) -> Acc {
    let p = &cfg.params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let tp = cfg.tracked_phases;
    let mut acc = Acc {
        hist: vec![Vec::new(); tp + 1],
        block_counts: vec![Vec::new(); cfg.blocks],
        block_samples: vec![0; cfg.blocks],
        ..Default::default()
    };
    let block_len = (cfg.horizon - cfg.warmup) / cfg.blocks as f64;
    let (mut t, mut x, mut z) = (0.0f64, 0.0f64, 0usize);
    let mut next_sample = cfg.warmup;
    while t < cfg.horizon {
        let up = p.lambda;
        let down = p.down_rate(z);
        let rate = up + down;
        let dt = Exp::new(rate).expect("positive rate").sample(&mut rng);
        let end = (t + dt).min(cfg.horizon);
        let r = p.net_rate(z);
        while next_sample < end {
            let xs = (x + r * (next_sample - t)).max(0.0);
            let blk = (((next_sample - cfg.warmup) / block_len) as usize).min(cfg.blocks - 1);
            acc.samples += 1;
            acc.block_samples[blk] += 1;
            bump(&mut acc.phase_counts, z);
            if xs == 0.0 {
                acc.zeros += 1;
            } else {
                let k = (xs / cfg.bin_width) as usize;
                bump(&mut acc.hist[z.min(tp)], k);
                bump(&mut acc.block_counts[blk], k);
            }
            next_sample += cfg.sample_stride;
        }
        if end > cfg.warmup {
            let from = t.max(cfg.warmup);
            if acc.sojourn.len() <= z {
                acc.sojourn.resize(z + 1, 0.0);
            }
            acc.sojourn[z] += end - from;
        }
        x = (x + r * (end - t)).max(0.0);
        t = end;
        if t >= cfg.horizon {
            break;
        }
        acc.events += 1;
        if rng.random::<f64>() * rate < up {
            z += 1;
        } else {
            z -= 1;
        }
    }
    acc
}

fn add_into(a: &mut Vec<u64>, b: &[u64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn merge(mut a: Acc, b: Acc) -> Acc {
    if a.hist.is_empty() {
        return b;
    }
    for (x, y) in a.hist.iter_mut().zip(&b.hist) {
        add_into(x, y);
    }
    a.zeros += b.zeros;
    a.samples += b.samples;
    add_into(&mut a.phase_counts, &b.phase_counts);
    if a.sojourn.len() < b.sojourn.len() {
        a.sojourn.resize(b.sojourn.len(), 0.0);
    }
    for (x, y) in a.sojourn.iter_mut().zip(&b.sojourn) {
        *x += y;
    }
    a.events += b.events;
    a.block_counts.extend(b.block_counts);
    a.block_samples.extend(b.block_samples);
    a
}

/// Survival from per-bin counts: `S(x_k) = #{X >= x_k, X > 0} / n`.
fn survival_from(counts: &[u64], n: u64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut tail = 0u64;
    for k in (0..len).rev() {
        tail += counts.get(k).copied().unwrap_or(0);
        out[k] = tail as f64 / n as f64;
    }
    out
}

pub fn simulate(cfg: &SimConfig) -> Result<SurvivalEstimate> {
    cfg.validate()?;
    let v = model::is_stable(&cfg.params)?;
    if !v.stable {
        return Err(FluidError::UnstableFluid { drift: v.mean_drift });
    }
    let acc = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_one(cfg, rep))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Acc::default(), merge);
    let n = acc.samples.max(1);
    let len = acc.hist.iter().map(|h| h.len()).max().unwrap_or(0) + 1;
    let mut total = vec![0u64; len];
    for h in &acc.hist {
        add_into(&mut total, h);
    }
    let survival = survival_from(&total, n, len);
    let per_phase = acc.hist[..cfg.tracked_phases]
        .iter()
        .map(|h| survival_from(h, n, len))
        .collect();
    let time: f64 = acc.sojourn.iter().sum();
    Ok(SurvivalEstimate {
        bin_width: cfg.bin_width,
        grid: (0..len).map(|k| k as f64 * cfg.bin_width).collect(),
        survival,
        per_phase,
        samples: acc.samples,
        zero_fraction: acc.zeros as f64 / n as f64,
        phase_freq: acc.phase_counts.iter().map(|&c| c as f64 / n as f64).collect(),
        sojourn: acc.sojourn.iter().map(|s| s / time).collect(),
        events: acc.events,
        block_counts: acc.block_counts,
        block_samples: acc.block_samples,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples_in_window: u64,
    pub power: f64,
}

/// Weighted least-squares slope of `log S(x) - power log x` on the grid points in `[lo, hi]`.
/// Weights are `S(x)`, proportional to the inverse variance of `log S`.
fn slope(grid: &[f64], surv: &[f64], lo: f64, hi: f64, power: f64) -> Option<f64> {
    let pts: Vec<(f64, f64, f64)> = grid
        .iter()
        .zip(surv)
        .filter(|(x, s)| **x >= lo && **x <= hi && **s > 0.0)
        .map(|(x, s)| (*x, s.ln() - power * x.ln(), *s))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let w: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn fit_tail(est: &SurvivalEstimate, window: (f64, f64)) -> Result<TailFit> {
    fit_tail_with_power(est, window, 0.0)
}

/// Fits `S(x) ~ K x^power e^{-rate x}` on the window, with a block-bootstrap 95% interval.
pub fn fit_tail_with_power(est: &SurvivalEstimate, window: (f64, f64), power: f64) -> Result<TailFit> {
    let (lo, hi) = window;
    let k_lo = (lo / est.bin_width).ceil() as usize;
    let in_window = (est.survival.get(k_lo).copied().unwrap_or(0.0) * est.samples as f64).round() as u64;
    const NEED: usize = 10_000;
    if (in_window as usize) < NEED {
        return Err(FluidError::InsufficientSamples {
            have: in_window as usize,
            need: NEED,
        });
    }
    let s = slope(&est.grid, &est.survival, lo, hi, power)
        .ok_or_else(|| FluidError::IllConditioned("fewer than three grid points".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(est.seed ^ 0x9e37_79b9_7f4a_7c15);
    let nb = est.block_counts.len();
    let len = est.grid.len();
    let mut rates = Vec::with_capacity(200);
    for _ in 0..200 {
        let mut counts = vec![0u64; len];
        let mut n = 0u64;
        for _ in 0..nb {
            let b = rng.random_range(0..nb);
            add_into(&mut counts, &est.block_counts[b]);
            n += est.block_samples[b];
        }
        let surv = survival_from(&counts, n.max(1), len);
        if let Some(v) = slope(&est.grid, &surv, lo, hi, power) {
            rates.push(-v);
        }
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |f: f64| rates[((rates.len() - 1) as f64 * f).round() as usize];
    Ok(TailFit {
        rate: -s,
        ci_low: q(0.025),
        ci_high: q(0.975),
        samples_in_window: in_window,
        power,
    })
}
