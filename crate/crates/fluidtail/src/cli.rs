//! Command-line front end: `analyze`, `solve`, `simulate`, `validate`.
//!
//! Every report is JSON with a top-level `schema: 1`. Numbers that come out
//! of a computation are wrapped as `{value, source, error}` where `source` is
//! one of `analytic`, `spectral`, `simulation`.

use crate::asymptotics::{self, CaseTag, TailReport};
use crate::error::{FluidError, Result};
use crate::model::{self, ModelParams};
use crate::roots;
use crate::simulate::{self, SimConfig, SurvivalEstimate};
use crate::spectral::{self, SpectralSolution};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fluidtail", version, about = "Tail asymptotics of an M/M/c-driven fluid queue")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay rate, regime and prefactors.
    Analyze(CommonArgs),
    /// Truncated-phase spectral solution.
    Solve(CommonArgs),
    /// Monte Carlo estimate of the level survival function.
    Simulate(CommonArgs),
    /// Compare analytic, spectral and Monte Carlo results.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub c: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub r: f64,
    /// Highest phase kept by the spectral solver.
    #[arg(long = "truncation", default_value_t = 400)]
    pub truncation: usize,
    /// Number of Monte Carlo jump events.
    #[arg(long, default_value_t = 1e7)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Relative tolerance for the spectral decay rate; defaults to 1e-3 in Case I and 2e-2 otherwise.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Relative tolerance for the Monte Carlo decay rate.
    #[arg(long, default_value_t = 0.1)]
    pub mc_tolerance: f64,
    /// Relative tolerance for the Case I prefactor against the spectral fit.
    #[arg(long, default_value_t = 0.02)]
    pub prefactor_tolerance: f64,
    /// Phases written by `solve --format csv`.
    #[arg(long, default_value_t = 6)]
    pub phases: usize,
    /// Points on the x grid written by `solve --format csv`.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

impl CommonArgs {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.c, self.lambda, self.mu, self.r)
    }

    pub fn stable_params(&self) -> Result<ModelParams> {
        ModelParams::new_stable(self.c, self.lambda, self.mu, self.r)
    }
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Analyze(a) | Command::Solve(a) | Command::Simulate(a) | Command::Validate(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sourced {
    pub value: f64,
    pub source: &'static str,
    pub error: f64,
}

fn analytic(value: f64, error: f64) -> Sourced {
    Sourced { value, source: "analytic", error }
}

/// Result of a subcommand: a JSON document plus optional CSV, and a pass flag.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    pub passed: bool,
}

impl Outcome {
    pub fn emit(&self, cli: &Cli) -> std::io::Result<()> {
        let args = cli.command.args();
        let text = match (args.format, &self.csv) {
            (Format::Csv, Some(csv)) => csv.clone(),
            _ => serde_json::to_string_pretty(&self.json).expect("serializable") + "\n",
        };
        match &args.out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}

pub fn error_kind(e: &FluidError) -> &'static str {
    match e {
        FluidError::InvalidParam(_) => "invalid-param",
        FluidError::UnstableChain { .. } | FluidError::UnstableFluid { .. } => "unstable",
        FluidError::AssumptionViolated(_) => "assumption-violated",
        _ => "numerical",
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let a = cli.command.args();
    match &cli.command {
        Command::Analyze(_) => cmd_analyze(a),
        Command::Solve(_) => cmd_solve(a),
        Command::Simulate(_) => cmd_simulate(a),
        Command::Validate(_) => cmd_validate(a),
    }
}

fn spectral_rate_tol(a: &CommonArgs, case: CaseTag) -> f64 {
    a.tolerance.unwrap_or(match case {
        CaseTag::I => 1e-3,
        _ => 2e-2,
    })
}

fn report_json(p: &ModelParams, rep: &TailReport, sol: &SpectralSolution) -> Value {
    let bt = asymptotics::boundary_tail(p, &rep.boundary).ok();
    json!({
        "case": rep.case_tag.to_string(),
        "k": rep.k,
        "zero_method": rep.zero.method,
        "alpha_tilde": rep.zero.alpha_tilde,
        "rationalized_roots": rep.zero.all_roots.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "power": rep.power,
        "values": {
            "alpha_star": analytic(rep.alpha_star, 1e-12 * rep.alpha_star),
            "alpha1": analytic(rep.alpha1, 1e-14 * rep.alpha1),
            "alpha2": analytic(rep.alpha2, 1e-14 * rep.alpha2),
            "z_star": analytic(rep.z_star, 1e-12 * rep.z_star),
            "z_tilde": analytic(rep.z_tilde, 0.0),
            "phase_ratio": analytic(rep.phase_ratio, 1e-12 * rep.phase_ratio),
            "c_const": analytic(rep.c_const, rep.c_const_err),
            "C_const": analytic(rep.big_c, rep.c_const_err * (rep.big_c / rep.c_const).abs()),
            "C_tilde": analytic(rep.c_tilde, rep.c_const_err * (rep.c_tilde / rep.c_const).abs()),
            "d_ztilde": analytic(rep.d_ztilde, 0.0),
            "alpha_at_z_tilde": bt.map(|b| analytic(b.alpha_at_z_tilde, 0.0)),
        },
        "boundary": {
            "pi0": rep.boundary.pi0,
            "source": "spectral",
            "truncation": sol.truncation,
        },
    })
}

fn analyze_inner(a: &CommonArgs) -> Result<(ModelParams, TailReport, SpectralSolution)> {
    let p = a.stable_params()?;
    let zero = roots::find_alpha_tilde(&p)?;
    let sol = spectral::solve_truncated(&p, a.truncation)?;
    let b = sol.boundary_vector()?;
    let rep = asymptotics::analyze_with_boundary(&p, &b, &zero)?;
    Ok((p, rep, sol))
}

pub fn cmd_analyze(a: &CommonArgs) -> Result<Outcome> {
    let (p, rep, sol) = analyze_inner(a)?;
    let mut j = json!({"schema": 1, "command": "analyze", "params": p});
    j.as_object_mut()
        .unwrap()
        .extend(report_json(&p, &rep, &sol).as_object().unwrap().clone());
    Ok(Outcome { json: j, csv: None, passed: true })
}

pub fn cmd_solve(a: &CommonArgs) -> Result<Outcome> {
    let p = a.stable_params()?;
    let sol = spectral::solve_truncated(&p, a.truncation)?;
    let rate = -sol.dominant();
    let x_max = 20.0 / rate;
    let phases = a.phases.min(sol.phases());
    let n = a.points.max(2);
    let mut csv = String::from("x,phase,Pi,pi\n");
    for k in 0..n {
        let x = x_max * k as f64 / (n - 1) as f64;
        let cdf = sol.cdf(x);
        let dens = sol.density(x);
        for i in 0..phases {
            csv.push_str(&format!("{x},{i},{},{}\n", cdf[i], dens[i]));
        }
    }
    let j = json!({
        "schema": 1,
        "command": "solve",
        "params": p,
        "summary": sol.summary(),
        "values": {
            "dominant_rate": Sourced { value: rate, source: "spectral", error: 0.0 },
        },
    });
    Ok(Outcome { json: j, csv: Some(csv), passed: true })
}

/// Window for the Monte Carlo slope: at least 1e4 samples beyond `x_lo`,
/// and `x_hi` where 2000 samples remain.
pub fn auto_window(est: &SurvivalEstimate) -> Option<(f64, f64)> {
    let n = est.samples as f64;
    let count = |k: usize| est.survival[k] * n;
    let k_hi = (0..est.grid.len()).rev().find(|&k| count(k) >= 500.0)?;
    let k_lo = (0..=k_hi / 2).rev().find(|&k| count(k) >= 2e4)?.max(1);
    (k_hi > k_lo + 3).then(|| (est.grid[k_lo], est.grid[k_hi]))
}

/// Simulation settings used by `simulate` and `validate` for a budget of `events`.
pub fn mc_config(p: ModelParams, events: f64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::with_events(p, events, seed);
    cfg.replications = rayon::current_num_threads().clamp(1, 8);
    cfg.horizon /= cfg.replications as f64;
    cfg.warmup = cfg.horizon * 0.01;
    cfg.sample_stride = 1.0 / (4.0 * p.lambda);
    cfg
}

fn simulate_inner(a: &CommonArgs, p: ModelParams, power: f64) -> Result<(SurvivalEstimate, Option<simulate::TailFit>)> {
    let est = simulate::simulate(&mc_config(p, a.horizon, a.seed))?;
    let fit = match auto_window(&est) {
        Some(w) => Some(simulate::fit_tail_with_power(&est, w, power)?),
        None => None,
    };
    Ok((est, fit))
}

pub fn cmd_simulate(a: &CommonArgs) -> Result<Outcome> {
    let p = a.stable_params()?;
    let (est, fit) = simulate_inner(a, p, 0.0)?;
    let xi = model::phase_stationary(&p)?;
    let mut csv = String::from("x,survival");
    for i in 0..est.per_phase.len() {
        csv.push_str(&format!(",phase_{i}"));
    }
    csv.push('\n');
    for k in 0..est.grid.len() {
        csv.push_str(&format!("{},{}", est.grid[k], est.survival[k]));
        for ph in &est.per_phase {
            csv.push_str(&format!(",{}", ph[k]));
        }
        csv.push('\n');
    }
    let j = json!({
        "schema": 1,
        "command": "simulate",
        "params": p,
        "samples": est.samples,
        "events": est.events,
        "zero_fraction": Sourced { value: est.zero_fraction, source: "simulation", error: (est.zero_fraction * (1.0 - est.zero_fraction) / est.samples as f64).sqrt() },
        "fitted_rate": fit.map(|f| json!({
            "value": f.rate, "source": "simulation", "error": 0.5 * (f.ci_high - f.ci_low),
            "ci": [f.ci_low, f.ci_high], "samples_in_window": f.samples_in_window,
        })),
        "phase_freq": est.phase_freq.iter().take(est.per_phase.len()).enumerate()
            .map(|(i, &v)| json!({"phase": i, "simulation": v, "analytic": xi.xi(i)})).collect::<Vec<_>>(),
    });
    Ok(Outcome { json: j, csv: Some(csv), passed: true })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub reference: Sourced,
    pub estimate: Sourced,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn compare(quantity: &str, reference: Sourced, estimate: Sourced, tolerance: f64) -> Comparison {
    let rel_error = ((estimate.value - reference.value) / reference.value).abs();
    Comparison {
        quantity: quantity.into(),
        reference,
        estimate,
        rel_error,
        tolerance,
        pass: rel_error <= tolerance,
    }
}

pub fn cmd_validate(a: &CommonArgs) -> Result<Outcome> {
    let (p, rep, sol) = analyze_inner(a)?;
    let mut rows = Vec::new();
    let spec_rate = -sol.dominant();
    rows.push(compare(
        "alpha_star vs dominant eigenvalue",
        analytic(rep.alpha_star, 1e-12 * rep.alpha_star),
        Sourced { value: spec_rate, source: "spectral", error: 0.0 },
        spectral_rate_tol(a, rep.case_tag),
    ));
    let (est, fit) = simulate_inner(a, p, rep.power)?;
    match fit {
        Some(f) => rows.push(compare(
            "alpha_star vs Monte Carlo slope",
            analytic(rep.alpha_star, 1e-12 * rep.alpha_star),
            Sourced { value: f.rate, source: "simulation", error: 0.5 * (f.ci_high - f.ci_low) },
            a.mc_tolerance,
        )),
        None => rows.push(Comparison {
            quantity: "alpha_star vs Monte Carlo slope".into(),
            reference: analytic(rep.alpha_star, 0.0),
            estimate: Sourced { value: f64::NAN, source: "simulation", error: f64::NAN },
            rel_error: f64::NAN,
            tolerance: a.mc_tolerance,
            pass: false,
        }),
    }
    if rep.case_tag == CaseTag::I {
        let i = p.c - 1;
        let w = sol.dominance_window(i, 1e-3);
        let fit = spectral::fit_decay(&sol, i, w)?;
        rows.push(compare(
            "C_const vs spectral prefactor",
            analytic(rep.big_c, rep.c_const_err),
            Sourced { value: fit.prefactor, source: "spectral", error: fit.prefactor_se },
            a.prefactor_tolerance,
        ));
    }
    let bt = asymptotics::boundary_tail(&p, &rep.boundary)?;
    let boundary_ok = bt.alpha_at_z_tilde.abs() < 1e-10 && bt.d_ztilde > 0.0;
    let atoms_ok = rep.boundary.pi0.iter().all(|v| *v >= 0.0);
    let passed = rows.iter().all(|r| r.pass) && boundary_ok && atoms_ok;
    let j = json!({
        "schema": 1,
        "command": "validate",
        "params": p,
        "case": rep.case_tag.to_string(),
        "comparisons": rows,
        "boundary_tail": {
            "alpha_at_z_tilde": analytic(bt.alpha_at_z_tilde, 0.0),
            "d_ztilde": analytic(bt.d_ztilde, 0.0),
            "ratio": analytic(bt.ratio, 0.0),
            "pass": boundary_ok,
        },
        "boundary_nonnegative": atoms_ok,
        "samples": est.samples,
        "passed": passed,
    });
    Ok(Outcome { json: j, csv: None, passed })
}
