//! Soft-EDF network fluid solver: one oblique reflection per deadline level.
//!
//! For every level `x_j`, `(ξ[0,x_j], β(x_j,∞) + ι) = Γ(α[0,x_j] − Rμ)`. The top level
//! stands in for `x → ∞`, so `ι` is read off there and `β[0,x_j] = μ − Γ₂(·)`.

use rayon::prelude::*;
use serde::Serialize;

use super::reflection::{complementarity_sum, complementarity_tolerance, ormt, DEFAULT_TOL};
use super::routing::RoutingMatrix;
use crate::error::{Error, Result};
use crate::measure_paths::{GriddedMeasurePath, VecPath};

#[derive(Debug, Clone, Default, Serialize)]
pub struct VmvsmDiagnostics {
    pub max_iterations: usize,
    pub total_iterations: usize,
    pub max_complementarity: f64,
    /// Worst complementarity sum relative to its tolerance `tol_comp`.
    pub max_complementarity_ratio: f64,
    pub max_balance_residual: f64,
    pub inexact_levels: usize,
}

#[derive(Debug, Clone)]
pub struct VmvsmSolution {
    pub xi: GriddedMeasurePath,
    /// Cumulative departures from the queue, `β_t[0, x_j]`.
    pub beta: GriddedMeasurePath,
    /// The reflection regulator per level, `β_t(x_j, ∞) + ι(t)`.
    pub regulator: GriddedMeasurePath,
    pub iota: VecPath,
    pub diagnostics: VmvsmDiagnostics,
}

impl VmvsmSolution {
    /// `β_t(x_j, ∞)`.
    pub fn beta_tail(&self, i: usize, k: usize, j: usize) -> f64 {
        self.regulator.get(i, k, j) - self.iota.get(i, k)
    }
}

pub fn vmvsm_solve(alpha: &GriddedMeasurePath, mu: &VecPath, rm: &RoutingMatrix) -> Result<VmvsmSolution> {
    let grid = *alpha.grid();
    let kk = rm.k();
    if alpha.comps() != kk || mu.comps() != kk || mu.grid() != alpha.grid() {
        return Err(Error::Shape("alpha, mu and routing disagree in shape".into()));
    }
    for i in 0..kk {
        if mu.get(i, 0) != 0.0 {
            return Err(Error::Precondition(format!("mu^{i}(0) must be 0, got {}", mu.get(i, 0))));
        }
    }
    let scale = alpha.max_abs().max(1.0);
    let tv = alpha.t_monotonicity_violation();
    if tv > 1e-12 * scale {
        return Err(Error::Precondition(format!("alpha is not increasing in time (drop {tv:e})")));
    }
    if alpha.negativity() > 0.0 {
        return Err(Error::Precondition("alpha has negative mass".into()));
    }

    let nt = grid.n_t + 1;
    let r_mu: Vec<Vec<f64>> = (0..kk)
        .map(|i| {
            (0..nt)
                .map(|k| {
                    let col: Vec<f64> = (0..kk).map(|l| mu.get(l, k)).collect();
                    rm.r_apply(&col, i)
                })
                .collect()
        })
        .collect();

    let levels: Vec<_> = (0..=grid.n_x)
        .into_par_iter()
        .map(|j| {
            let u: Vec<Vec<f64>> = (0..kk).map(|i| (0..nt).map(|k| alpha.get(i, k, j) - r_mu[i][k]).collect()).collect();
            ormt(&u, rm, DEFAULT_TOL, None).map(|r| (u, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut xi = GriddedMeasurePath::zeros(grid, kk);
    let mut beta = GriddedMeasurePath::zeros(grid, kk);
    let mut regulator = GriddedMeasurePath::zeros(grid, kk);
    let mut iota = VecPath::zeros(grid, kk);
    let mut diag = VmvsmDiagnostics {
        max_iterations: 0,
        total_iterations: 0,
        max_complementarity: 0.0,
        max_complementarity_ratio: 0.0,
        max_balance_residual: 0.0,
        inexact_levels: 0,
    };
    for (j, (u, r)) in levels.iter().enumerate() {
        diag.max_iterations = diag.max_iterations.max(r.iterations);
        diag.total_iterations += r.iterations;
        diag.max_complementarity = diag.max_complementarity.max(r.residual);
        diag.max_complementarity_ratio = diag.max_complementarity_ratio.max(r.residual / complementarity_tolerance(u));
        diag.max_balance_residual = diag.max_balance_residual.max(r.balance_residual);
        if !r.exact_fixed_point {
            diag.inexact_levels += 1;
        }
        for i in 0..kk {
            for k in 0..nt {
                xi.set(i, k, j, r.z[i][k]);
                regulator.set(i, k, j, r.y[i][k]);
                beta.set(i, k, j, mu.get(i, k) - r.y[i][k]);
            }
        }
    }
    let top = &levels[grid.n_x].1;
    for i in 0..kk {
        for k in 0..nt {
            iota.set(i, k, top.y[i][k]);
        }
    }
    log::debug!("vmvsm: {} levels, max {} iterations", grid.n_x + 1, diag.max_iterations);
    Ok(VmvsmSolution { xi, beta, regulator, iota, diagnostics: diag })
}

/// Residuals of the four defining conditions, each relative to the problem scale.
#[derive(Debug, Clone, Serialize)]
pub struct VmvspResiduals {
    /// `max |ξ[0,x] − α[0,x] + Rβ[0,x]|`.
    pub balance: f64,
    /// Worst `Σ_k ξ_{t_k}[0,x] Δβ_{t_k}(x,∞)` over levels and components.
    pub edf: f64,
    /// Worst `Σ_k ξ_{t_k}[0,x] Δι(t_k)`.
    pub work_conservation: f64,
    /// `max |β[0,∞) + ι − μ|`.
    pub capacity: f64,
    /// Normalising scale `max(1, ‖α‖, ‖μ‖)`.
    pub scale: f64,
    /// Count of nodes where `ξ[0,x]` decreases in `x`.
    pub xi_monotone_violations: usize,
    /// Count of nodes where `β(x,∞)` increases in `x`.
    pub tail_monotone_violations: usize,
}

impl VmvspResiduals {
    pub fn max_relative(&self) -> f64 {
        [self.balance, self.edf, self.work_conservation, self.capacity]
            .iter()
            .fold(0.0f64, |w, v| w.max(*v))
            / self.scale
    }
}

/// Evaluates the defining conditions on a solution. Monotonicity violations are counted
/// beyond a slack of `1e-12 · scale` (rounding of the level-by-level solves).
pub fn vmvsp_residuals(sol: &VmvsmSolution, alpha: &GriddedMeasurePath, mu: &VecPath, rm: &RoutingMatrix) -> VmvspResiduals {
    let g = *alpha.grid();
    let kk = rm.k();
    let scale = alpha.max_abs().max(mu.max_abs()).max(1.0);
    let slack = 1e-12 * scale;
    let mut res = VmvspResiduals {
        balance: 0.0,
        edf: 0.0,
        work_conservation: 0.0,
        capacity: 0.0,
        scale,
        xi_monotone_violations: 0,
        tail_monotone_violations: 0,
    };
    let mut col = vec![0.0; kk];
    for k in 0..=g.n_t {
        for j in 0..=g.n_x {
            for l in 0..kk {
                col[l] = sol.beta.get(l, k, j);
            }
            for i in 0..kk {
                let b = (sol.xi.get(i, k, j) - alpha.get(i, k, j) + rm.r_apply(&col, i)).abs();
                res.balance = res.balance.max(b);
                if j > 0 {
                    if sol.xi.get(i, k, j) < sol.xi.get(i, k, j - 1) - slack {
                        res.xi_monotone_violations += 1;
                    }
                    if sol.beta_tail(i, k, j) > sol.beta_tail(i, k, j - 1) + slack {
                        res.tail_monotone_violations += 1;
                    }
                }
            }
        }
        for i in 0..kk {
            let c = (sol.beta.total(i, k) + sol.iota.get(i, k) - mu.get(i, k)).abs();
            res.capacity = res.capacity.max(c);
        }
    }
    for i in 0..kk {
        let iota = sol.iota.series(i).to_vec();
        for j in 0..=g.n_x {
            let xi = sol.xi.level(i, j);
            let tail: Vec<f64> = (0..=g.n_t).map(|k| sol.beta_tail(i, k, j)).collect();
            res.edf = res.edf.max(complementarity_sum(&xi, &tail));
            res.work_conservation = res.work_conservation.max(complementarity_sum(&xi, &iota));
        }
    }
    res
}
