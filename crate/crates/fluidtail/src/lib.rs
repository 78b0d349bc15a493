//! Stationary tail asymptotics of a fluid queue whose net input rate is
//! modulated by the queue length of an M/M/c system.
//!
//! The analytic pipeline (`kernel`, `cfrac`, `roots`, `asymptotics`) produces
//! the decay rate, regime and prefactors of the level distribution. Two
//! independent checks are included: a truncated-phase spectral solver
//! (`spectral`) and a Monte Carlo simulator (`simulate`).
//!
//! ```
//! use fluidtail::{asymptotics, model::ModelParams};
//!
//! let p = ModelParams::new_stable(1, 1.0, 3.0, 1.0).unwrap();
//! let report = asymptotics::analyze(&p, 200).unwrap();
//! assert_eq!(report.case_tag, asymptotics::CaseTag::I);
//! assert!((report.alpha_star - 0.5).abs() < 1e-12);
//! ```

pub mod asymptotics;
pub mod cfrac;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod model;
pub mod numdiff;
pub mod poly;
pub mod roots;
pub mod simulate;
pub mod spectral;

pub use error::{FluidError, Result};
pub use model::ModelParams;
