//! Sup-CDF distance of the scaled simulator fields to the fluid solution, over a range of
//! scales `N`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{log_log_slope, sim_config, Check, MeanCi};
use crate::error::{Error, Result};
use crate::fluid_hard::{hard_network_square_induction, HardFluidData};
use crate::measure_paths::{sup_cdf_distance, Grid, GriddedMeasurePath, VecPath};
use crate::scenario::Scenario;
use crate::sim::{simulate, Policy};
use crate::skorokhod::vmvsm_solve;

/// Fluid fields the simulator is compared against.
#[derive(Debug, Clone)]
pub struct FluidReference {
    pub xi: GriddedMeasurePath,
    pub beta: GriddedMeasurePath,
    pub iota: VecPath,
    /// Hard policy only.
    pub rho: Option<VecPath>,
}

/// Solves the fluid model matching `policy` on `grid`.
pub fn fluid_reference(s: &Scenario, policy: Policy, grid: &Grid) -> Result<FluidReference> {
    match policy {
        Policy::Soft => {
            let alpha = s.spec.alpha_field(grid)?;
            let sol = vmvsm_solve(&alpha, &s.spec.mu_path(grid), &s.spec.routing)?;
            Ok(FluidReference { xi: sol.xi, beta: sol.beta, iota: sol.iota, rho: None })
        }
        Policy::Hard => {
            let data = HardFluidData::from_spec(&s.spec, grid)?;
            let (sol, _) = hard_network_square_induction(&data)?;
            Ok(FluidReference { xi: sol.xi, beta: sol.beta, iota: sol.iota, rho: Some(sol.rho) })
        }
        Policy::Fisfo => Err(Error::Precondition("there is no fluid reference for the FISFO policy".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepErrors {
    pub rep: u64,
    pub errors: BTreeMap<String, f64>,
    pub events: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLevel {
    pub n: u64,
    pub stats: BTreeMap<String, MeanCi>,
    pub per_rep: Vec<RepErrors>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub policy: Policy,
    pub master_seed: u64,
    pub grid: Grid,
    /// Finest grid used for the bias estimate (both steps quartered).
    pub bias_grid: Grid,
    pub n_list: Vec<u64>,
    pub reps: usize,
    pub levels: Vec<ConvergenceLevel>,
    /// Sup distances `d_1` (grid vs. one halving) and `d_2` (one vs. two halvings) between
    /// fluid solutions, all read as piecewise-constant right-continuous functions.
    pub grid_gaps: BTreeMap<String, (f64, f64)>,
    /// Bias bound of the fluid reference: the geometric tail `d_1 / (1 − q)`, `q = d_2 / d_1`,
    /// of the refinement gaps; `d_1` itself when they do not contract.
    pub grid_bias: BTreeMap<String, f64>,
    /// Fitted slope of log mean error against log N (informational).
    pub slopes: BTreeMap<String, Option<f64>>,
    pub checks: Vec<Check>,
    /// Quantities whose grid bias is not below a third of the smallest mean error.
    pub grid_limited: Vec<String>,
    pub pass: bool,
    pub fluid_seconds: f64,
    pub total_seconds: f64,
}

/// Largest gap between a coarse field and its 2× refinement on the fine nodes.
pub fn field_bias(coarse: &GriddedMeasurePath, fine: &GriddedMeasurePath) -> f64 {
    let g = *fine.grid();
    let mut worst = 0.0f64;
    for i in 0..fine.comps() {
        for k in 0..=g.n_t {
            let (a, b) = (fine.row(i, k), coarse.row(i, k / 2));
            for (j, v) in a.iter().enumerate() {
                worst = worst.max((v - b[j / 2]).abs());
            }
        }
    }
    worst
}

/// Geometric tail bound `d1 / (1 − d2/d1)` on the distance to the grid limit.
pub fn tail_bound(d1: f64, d2: f64) -> f64 {
    if d1 == 0.0 {
        return 0.0;
    }
    let q = d2 / d1;
    if q < 1.0 {
        d1 / (1.0 - q)
    } else {
        d1
    }
}

pub fn series_bias(coarse: &VecPath, fine: &VecPath) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..fine.comps() {
        for (k, v) in fine.series(i).iter().enumerate() {
            worst = worst.max((v - coarse.get(i, k / 2)).abs());
        }
    }
    worst
}

fn max_over_nodes(a: &GriddedMeasurePath, b: &GriddedMeasurePath) -> Result<f64> {
    let mut w = 0.0f64;
    for i in 0..a.comps() {
        w = w.max(sup_cdf_distance(a, b, i, a.grid().t_max)?);
    }
    Ok(w)
}

fn rep_errors(s: &Scenario, policy: Policy, n: u64, rep: u64, fluid: &FluidReference) -> Result<RepErrors> {
    let trace = simulate(&s.spec, &sim_config(s, n, policy, rep, false), &s.grid)?;
    let c = &trace.counts;
    let mut errors = BTreeMap::new();
    errors.insert("xi".to_string(), max_over_nodes(&trace.scaled(&c.xi), &fluid.xi)?);
    errors.insert("beta".to_string(), max_over_nodes(&trace.scaled(&c.beta), &fluid.beta)?);
    errors.insert("iota".to_string(), trace.scaled_vec(&c.iota).sup_diff(&fluid.iota)?);
    if let Some(rho) = &fluid.rho {
        errors.insert("rho".to_string(), trace.scaled_vec(&c.rho).sup_diff(rho)?);
    }
    Ok(RepErrors { rep, errors, events: trace.stats.events })
}

/// Runs `reps` replications at every scale in `n_list` and judges the decay of the errors.
///
/// A quantity passes when its mean errors at consecutive scales are separated beyond their
/// confidence intervals, and the mean error at the largest scale is at most
/// `bias_factor` times the grid bias of the fluid reference.
pub fn run_convergence(s: &Scenario, policy: Policy, n_list: &[u64], reps: usize) -> Result<ConvergenceReport> {
    if n_list.is_empty() || reps == 0 {
        return Err(Error::Config("need at least one scale and one replication".into()));
    }
    let start = Instant::now();
    let fluid = fluid_reference(s, policy, &s.grid)?;
    let half = fluid_reference(s, policy, &s.grid.refined(1))?;
    let quarter_grid = s.grid.refined(2);
    let quarter = fluid_reference(s, policy, &quarter_grid)?;
    let gaps = |a: &FluidReference, b: &FluidReference| {
        let mut m = BTreeMap::new();
        m.insert("xi".to_string(), field_bias(&a.xi, &b.xi));
        m.insert("beta".to_string(), field_bias(&a.beta, &b.beta));
        m.insert("iota".to_string(), series_bias(&a.iota, &b.iota));
        if let (Some(x), Some(y)) = (&a.rho, &b.rho) {
            m.insert("rho".to_string(), series_bias(x, y));
        }
        m
    };
    let (d1, d2) = (gaps(&fluid, &half), gaps(&half, &quarter));
    let grid_gaps: BTreeMap<String, (f64, f64)> = d1.iter().map(|(q, v)| (q.clone(), (*v, d2[q]))).collect();
    let grid_bias: BTreeMap<String, f64> = grid_gaps.iter().map(|(q, (a, b))| (q.clone(), tail_bound(*a, *b))).collect();
    let fluid_seconds = start.elapsed().as_secs_f64();
    let z = s.tol("z_score");

    let mut levels = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let t0 = Instant::now();
        let per_rep: Vec<RepErrors> =
            (0..reps as u64).into_par_iter().map(|r| rep_errors(s, policy, n, r, &fluid)).collect::<Result<_>>()?;
        let mut stats = BTreeMap::new();
        for q in grid_bias.keys() {
            let xs: Vec<f64> = per_rep.iter().map(|r| r.errors[q]).collect();
            stats.insert(q.clone(), MeanCi::of(&xs, z));
        }
        log::info!("N = {n}: mean xi error {:.4e}", stats["xi"].mean);
        levels.push(ConvergenceLevel { n, stats, per_rep, seconds: t0.elapsed().as_secs_f64() });
    }

    let ns: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let slopes = grid_bias
        .keys()
        .map(|q| (q.clone(), log_log_slope(&ns, &levels.iter().map(|l| l.stats[q].mean).collect::<Vec<_>>())))
        .collect();

    let judged: &[&str] = if policy == Policy::Hard { &["xi", "rho"] } else { &["xi"] };
    let factor = s.tol("bias_factor");
    let mut checks = Vec::new();
    let mut grid_limited = Vec::new();
    for &q in judged {
        let mut dec = true;
        let mut detail = String::new();
        for w in levels.windows(2) {
            let (a, b) = (&w[0].stats[q], &w[1].stats[q]);
            let ok = a.lower() > b.upper();
            dec &= ok;
            let _ = write!(detail, "N={}: {:.3e}±{:.1e} vs N={}: {:.3e}±{:.1e}; ", w[0].n, a.mean, a.half_width, w[1].n, b.mean, b.half_width);
        }
        checks.push(Check::new(format!("{q} decreasing beyond CI"), dec, detail.trim_end_matches("; ")));
        let last = levels.last().expect("nonempty").stats[q].mean;
        let bias = grid_bias[q];
        checks.push(Check::new(
            format!("{q} at largest N within {factor}x grid bias"),
            last <= factor * bias,
            format!("mean error {last:.4e} vs bound {:.4e} (bias {bias:.4e})", factor * bias),
        ));
        let smallest = levels.iter().map(|l| l.stats[q].mean).fold(f64::INFINITY, f64::min);
        if bias >= smallest / 3.0 {
            grid_limited.push(q.to_string());
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ConvergenceReport {
        scenario: s.name.clone(),
        policy,
        master_seed: s.seed,
        grid: s.grid,
        bias_grid: quarter_grid,
        n_list: n_list.to_vec(),
        reps,
        levels,
        grid_gaps,
        grid_bias,
        slopes,
        checks,
        grid_limited,
        pass,
        fluid_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

impl ConvergenceReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Convergence: {} ({:?} policy)\n", self.scenario, self.policy);
        let _ = writeln!(
            s,
            "master seed {}, {} replications per scale, grid T = {} X = {} n_t = {} n_x = {}\n",
            self.master_seed, self.reps, self.grid.t_max, self.grid.x_max, self.grid.n_t, self.grid.n_x
        );
        let qs: Vec<&String> = self.grid_bias.keys().collect();
        let _ = write!(s, "| N |");
        for q in &qs {
            let _ = write!(s, " {q} (mean ± CI) |");
        }
        let _ = writeln!(s, " seconds |");
        let _ = writeln!(s, "|---|{}---|", "---|".repeat(qs.len()));
        for l in &self.levels {
            let _ = write!(s, "| {} |", l.n);
            for q in &qs {
                let m = &l.stats[*q];
                let _ = write!(s, " {:.4e} ± {:.2e} |", m.mean, m.half_width);
            }
            let _ = writeln!(s, " {:.2} |", l.seconds);
        }
        let _ = writeln!(s);
        for q in &qs {
            let slope = self.slopes[*q].map_or("n/a".to_string(), |v| format!("{v:.3}"));
            let (d1, d2) = self.grid_gaps[*q];
            let _ = writeln!(s, "- {q}: grid bias {:.4e} (refinement gaps {d1:.3e}, {d2:.3e}), log-log slope {slope}", self.grid_bias[*q]);
        }
        if !self.grid_limited.is_empty() {
            let _ = writeln!(s, "- grid-limited: {}", self.grid_limited.join(", "));
        }
        let _ = writeln!(s);
        for c in &self.checks {
            let _ = writeln!(s, "- [{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(s, "\nverdict: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }

    /// One row per (quantity, N, replication).
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "quantity,n,rep,error")?;
        for l in &self.levels {
            for r in &l.per_rep {
                for (q, e) in &r.errors {
                    writeln!(out, "{q},{},{},{e:e}", l.n, r.rep)?;
                }
            }
        }
        Ok(())
    }
}
