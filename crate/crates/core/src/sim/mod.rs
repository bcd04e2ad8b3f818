//! Event-driven simulation of the `N`-th stochastic EDF network.
//!
//! Jobs arrive at each station as a Poisson stream of rate `N λ(t)` with i.i.d. lead times;
//! each server works at rate `N m(t)` on unit-mean service requirements, non-preemptively,
//! picking the queued job with the smallest deadline (ties: earlier system arrival, then
//! smaller id). Under the hard policy queued jobs renege at their deadline and routed jobs
//! have their deadline postponed by `ε`. A first-in-system-first-out policy is included
//! for comparisons.
//!
//! Counts are sampled on the grid at `t_k` after all events at times `<= t_k`.

pub mod checks;
pub mod engine;
pub mod rng;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure_paths::{Grid, GriddedMeasurePath, VecPath};
use crate::model::ServiceDist;
use crate::skorokhod::RoutingMatrix;

pub use checks::{capacity_error, capacity_error_identity, replay_check, routing_error_field, ReplayReport};
pub use engine::{min_scale_hard, simulate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// EDF without reneging.
    Soft,
    /// EDF with reneging at the deadline and `ε`-postponement on routing.
    Hard,
    /// First in system, first out.
    Fisfo,
}

impl Policy {
    pub fn is_hard(self) -> bool {
        self == Policy::Hard
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// The scale `N`.
    pub n: u64,
    pub policy: Policy,
    pub seed: u64,
    pub replication: u64,
    /// One unit-mean service distribution per station.
    pub services: Vec<ServiceDist>,
    pub record_events: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Start,
    Departure,
    Route,
    Renege,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventExtra {
    /// Queue length at `node` after the event.
    pub queue_len: usize,
    /// Origin station of a routed job.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub from: Option<usize>,
    /// Destination of a departing job; absent when it leaves the network.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub to: Option<usize>,
    /// Service requirement drawn at a start.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub service: Option<f64>,
    /// Deadline label carried by a departure (postponed under the hard policy).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<f64>,
    /// System arrival time of the job.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub arrived: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub job: u64,
    pub node: usize,
    pub deadline: f64,
    pub extra: EventExtra,
}

/// Unscaled counts sampled on the grid. Deadline fields are cumulative in `x`; deadlines
/// beyond `X` fall in the top cell.
#[derive(Debug, Clone)]
pub struct SampledCounts {
    pub alpha: GriddedMeasurePath,
    pub xi: GriddedMeasurePath,
    /// Service starts, `β^s` (all transfers to the server under the soft policies).
    pub beta_s: GriddedMeasurePath,
    pub beta_r: GriddedMeasurePath,
    pub beta: GriddedMeasurePath,
    /// Departures from each server by deadline label.
    pub gamma: GriddedMeasurePath,
    /// Per origin `i`: component 0 counts exits, component `j + 1` jobs routed to `j`.
    pub gamma_to: Vec<GriddedMeasurePath>,
    /// Busyness `B_t[0,x]`.
    pub busy: GriddedMeasurePath,
    pub rho: VecPath,
    /// Lost effort `ι^N = N μ − T^N`.
    pub iota: VecPath,
    /// Effort `T^N`.
    pub effort: VecPath,
    pub departures: VecPath,
    /// `N μ(t)`.
    pub mu: VecPath,
    /// `min(deadline) − t` over queued jobs (`+inf` for an empty queue).
    pub min_queued_slack: VecPath,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub events: u64,
    pub arrivals: u64,
    pub starts: u64,
    pub departures: u64,
    pub reneges: u64,
    pub max_queue: usize,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub n: u64,
    pub policy: Policy,
    pub eps: f64,
    /// `ε / dx` under the hard policy, 0 otherwise.
    pub label_shift: usize,
    pub routing: RoutingMatrix,
    pub events: Vec<EventRecord>,
    pub counts: SampledCounts,
    /// Service requirements per server in the order they were drawn.
    pub requirements: Vec<Vec<f64>>,
    pub stats: SimStats,
}

impl SimTrace {
    pub fn grid(&self) -> &Grid {
        self.counts.alpha.grid()
    }

    pub fn k(&self) -> usize {
        self.routing.k()
    }

    /// A count field divided by `N`.
    pub fn scaled(&self, f: &GriddedMeasurePath) -> GriddedMeasurePath {
        let mut out = f.clone();
        let n = self.n as f64;
        out.map_inplace(|v| v / n);
        out
    }

    pub fn scaled_vec(&self, f: &VecPath) -> VecPath {
        let n = self.n as f64;
        VecPath::from_fn(*f.grid(), f.comps(), |i, k| f.get(i, k) / n)
    }

    /// Writes the event log as newline-delimited JSON.
    pub fn write_ndjson(&self, out: &mut impl Write) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut *out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_ndjson(input: impl std::io::BufRead) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| crate::Error::Parse(format!("event log line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::model::{ArrivalSpec, LeadDist, NetworkSpec, PiecewiseConstant};

    pub fn network(p: Vec<Vec<f64>>, rates: &[f64], caps: &[f64], lead: LeadDist, eps: f64) -> NetworkSpec {
        NetworkSpec {
            routing: RoutingMatrix::new(&p).unwrap(),
            eps,
            arrivals: rates.iter().map(|&r| ArrivalSpec { rate: PiecewiseConstant::constant(r), lead }).collect(),
            capacity: caps.iter().map(|&c| PiecewiseConstant::constant(c)).collect(),
            initial: vec![vec![]; rates.len()],
        }
    }

    pub fn feedback3() -> NetworkSpec {
        network(
            vec![vec![0.0, 0.6, 0.2], vec![0.0, 0.0, 0.5], vec![0.3, 0.0, 0.0]],
            &[0.9, 0.3, 0.2],
            &[1.2, 1.0, 0.9],
            LeadDist::Uniform { lo: 0.2, hi: 1.5 },
            0.1,
        )
    }

    pub fn config(n: u64, policy: Policy, k: usize, seed: u64) -> SimConfig {
        SimConfig {
            n,
            policy,
            seed,
            replication: 0,
            services: vec![ServiceDist::Uniform { c: 0.5 }; k],
            record_events: true,
        }
    }
}
