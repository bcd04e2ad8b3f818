//! Network solver by induction over squares `[0, nε)²` of the time–deadline plane.
//!
//! Routed mass carries its deadline plus `ε`, and mass with deadline below `nε` can only be
//! served before time `nε`. So once the departures of square `n − 1` are known, the routed
//! input to every node is known on deadlines `[0, nε)`, and each node can be solved there as
//! a single node. Node solves are non-anticipating in the deadline, so consecutive squares
//! must agree on their common part; that agreement is logged and enforced.

use rayon::prelude::*;
use serde::Serialize;

use super::single_node::solve_node;
use super::{assemble, shift_field, truncate_levels, HardFluidData, HardFluidSolution, NodeSolution};
use crate::error::{Error, Result};
use crate::measure_paths::GriddedMeasurePath;

#[derive(Debug, Clone, Serialize)]
pub struct SquareRecord {
    pub n: usize,
    /// Largest difference to square `n − 1` on `[0, (n−1)ε)²`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareInductionState {
    pub n: usize,
    pub n_max: usize,
    pub eps: f64,
    pub consistency_log: Vec<SquareRecord>,
}

/// Tolerance on the square-consistency check, relative to the solution scale.
pub const CONSISTENCY_TOL: f64 = 1e-8;

pub fn hard_network_square_induction(data: &HardFluidData) -> Result<(HardFluidSolution, SquareInductionState)> {
    let hg = data.hard_grid()?;
    let g = *data.grid();
    let kk = data.k();
    let m = hg.m.max(1);
    // one square past the deadline horizon so the last pass is a pure consistency check
    let n_max = g.n_x.div_ceil(m) + 1;
    let scale = data.alpha.max_abs().max(1.0);

    let mut gamma = GriddedMeasurePath::zeros(g, kk);
    let mut prev: Option<Vec<NodeSolution>> = None;
    let mut log = Vec::with_capacity(n_max);
    let mut input = GriddedMeasurePath::zeros(g, kk);
    for n in 1..=n_max {
        let cut = n * m;
        build_input(data, &gamma, cut, &mut input);
        let nodes: Vec<NodeSolution> =
            (0..kk).into_par_iter().map(|i| solve_node(&input, i, data.mu.series(i), hg.r)).collect();

        let discrepancy = match &prev {
            Some(p) => square_discrepancy(p, &nodes, (n - 1) * m, hg.r),
            None => (0.0, String::new()),
        };
        log.push(SquareRecord { n, discrepancy: discrepancy.0 });
        if discrepancy.0 > CONSISTENCY_TOL * scale {
            return Err(Error::SchemeInconsistency { square: n, discrepancy: discrepancy.0, location: discrepancy.1 });
        }
        let beta_s = GriddedMeasurePath::stack(&nodes.iter().map(|s| s.beta_s.clone()).collect::<Vec<_>>())?;
        gamma = shift_field(&beta_s, hg.m);
        prev = Some(nodes);
    }
    let sol = assemble(prev.expect("at least one square"), hg.m)?;
    log::debug!("square induction: {n_max} squares, eps = {}", data.eps);
    Ok((sol, SquareInductionState { n: n_max, n_max, eps: data.eps, consistency_log: log }))
}

/// `α^i(· ∩ [0, nε)) + Σ_j P_ji γ^j(· ∩ [0, nε))`.
fn build_input(data: &HardFluidData, gamma: &GriddedMeasurePath, cut: usize, out: &mut GriddedMeasurePath) {
    let g = *data.grid();
    let kk = data.k();
    let mut tmp = vec![0.0; g.n_x + 1];
    for i in 0..kk {
        for k in 0..=g.n_t {
            truncate_levels(data.alpha.row(i, k), cut, &mut tmp);
            let row = out.row_mut(i, k);
            row.copy_from_slice(&tmp);
            for j in 0..kk {
                let p = data.routing.p(j, i);
                if p == 0.0 {
                    continue;
                }
                truncate_levels(gamma.row(j, k), cut, &mut tmp);
                for (o, v) in row.iter_mut().zip(&tmp) {
                    *o += p * v;
                }
            }
        }
    }
}

/// Largest difference between two squares on deadline levels `j <= c` (all times), and on
/// the reneged total while it only involves those levels.
fn square_discrepancy(a: &[NodeSolution], b: &[NodeSolution], c: usize, r: usize) -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    for (i, (p, q)) in a.iter().zip(b).enumerate() {
        let g = *p.xi.grid();
        for k in 0..=g.n_t {
            for j in 0..=c.min(g.n_x) {
                for (name, f1, f2) in [("xi", &p.xi, &q.xi), ("beta_s", &p.beta_s, &q.beta_s), ("beta_r", &p.beta_r, &q.beta_r)] {
                    let d = (f1.get(0, k, j) - f2.get(0, k, j)).abs();
                    if d > worst.0 {
                        worst = (d, format!("{name}, node {i}, t index {k}, x index {j}"));
                    }
                }
            }
            if k * r > c {
                continue;
            }
            let d = (p.rho[k] - q.rho[k]).abs();
            if d > worst.0 {
                worst = (d, format!("rho, node {i}, t index {k}"));
            }
        }
    }
    worst
}
