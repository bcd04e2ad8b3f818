//! Fluid models and discrete-event simulation for earliest-deadline-first queueing networks.
//!
//! * [`measure_paths`] — gridded measure-valued paths and their distances.
//! * [`skorokhod`] — reflection maps and the soft-EDF fluid solver.
//! * [`model`] — network primitives (rates, lead times, capacities, services).
//! * [`fluid_hard`] — hard-EDF fluid solvers (single node, square induction, direct stepper).
//! * [`sim`] — event-driven simulator of the stochastic networks.
//! * [`lab`] — convergence, martingale and tightness experiments.
//! * [`scenario`], [`cli`] — configuration files and the command-line surface.

pub mod error;
pub mod measure_paths;
pub mod skorokhod;
pub mod model;
pub mod fluid_hard;
pub mod sim;
pub mod scenario;
pub mod lab;
pub mod cli;

pub use error::{Error, Result};

use serde::Serialize;

/// Outcome of a numerical check: pass/fail with the worst violation and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub worst: f64,
    pub location: Option<String>,
}

impl Verdict {
    pub fn pass() -> Self {
        Self { pass: true, worst: 0.0, location: None }
    }

    /// Folds in one violation magnitude (`<= 0` means satisfied).
    pub fn record(&mut self, violation: f64, tol: f64, at: impl FnOnce() -> String) {
        if violation > self.worst {
            self.worst = violation;
            if violation > tol {
                self.pass = false;
                self.location = Some(at());
            }
        }
    }

    pub fn merge(&mut self, other: Verdict) {
        if other.worst > self.worst {
            self.worst = other.worst;
        }
        if !other.pass {
            self.pass = false;
            if self.location.is_none() {
                self.location = other.location;
            }
        }
    }
}
