//! Experiments on the scaling limit: sup-CDF convergence of the simulator to the fluid
//! model, second moments of the routing errors, the pathwise reneging-tightness chain,
//! degenerate cases, and agreement of the two hard fluid schemes.
//!
//! Replications are indexed `0..reps`; replication `r` at scale `N` uses the random
//! substreams of `(master seed, r)`, so every report is reproducible from the scenario and
//! the seed. Work is spread over `(N, r)` with rayon and reduced in replication order.

pub mod agreement;
pub mod convergence;
pub mod degeneracy;
pub mod martingale;
pub mod tightness;

use serde::Serialize;

use crate::model::LeadDist;
use crate::scenario::Scenario;
use crate::sim::{Policy, SimConfig};

pub use agreement::{run_scheme_agreement, AgreementReport};
pub use convergence::{run_convergence, ConvergenceReport};
pub use degeneracy::{run_hard_soft_degeneracy, run_soft_fisfo_equivalence, tiny_leads, unexpirable_leads, DegeneracyReport, FisfoVerdict};
pub use martingale::{run_martingale_check, MartingaleStats};
pub use tightness::{run_tightness_surrogate, TightnessTable};

/// Sample mean with a normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub sd: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn of(xs: &[f64], z: f64) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, half_width: z * sd / (n.max(1) as f64).sqrt(), n }
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }
}

/// A named pass/fail outcome with a human-readable detail line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` unless all values are positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub(crate) fn sim_config(s: &Scenario, n: u64, policy: Policy, rep: u64, record_events: bool) -> SimConfig {
    SimConfig { n, policy, seed: s.seed, replication: rep, services: s.services.clone(), record_events }
}

pub(crate) fn with_leads(s: &Scenario, lead: LeadDist) -> Scenario {
    let mut out = s.clone();
    for a in &mut out.spec.arrivals {
        a.lead = lead;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_ci_basics() {
        let c = MeanCi::of(&[1.0, 2.0, 3.0], 2.0);
        assert_eq!(c.mean, 2.0);
        assert_eq!(c.sd, 1.0);
        assert!((c.half_width - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(MeanCi::of(&[5.0], 1.96).half_width, 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&x, &[1.0, 0.0, 1.0]), None);
    }
}
