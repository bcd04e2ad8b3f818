//! Degenerate cases where two models must coincide: hard EDF whose deadlines cannot expire
//! before `T` against soft EDF (fluid level), and soft EDF with lead times ≈ 0 against
//! first-in-system-first-out (simulator level).

use serde::Serialize;

use super::{sim_config, with_leads};
use crate::error::{Error, Result};
use crate::fluid_hard::hard_network_square_induction;
use crate::measure_paths::Grid;
use crate::model::LeadDist;
use crate::scenario::Scenario;
use crate::sim::{simulate, EventKind, Policy};
use crate::skorokhod::vmvsm_solve;

/// Lead times `U[0, 1e-12]`: deadlines equal arrival times up to an atomless perturbation.
/// Initial queues (present at time 0) get deadlines in `[0, 1e-12]` likewise.
pub fn tiny_leads(s: &Scenario) -> Scenario {
    let mut out = with_leads(s, LeadDist::Uniform { lo: 0.0, hi: 1e-12 });
    for seg in out.spec.initial.iter_mut().flatten() {
        seg.lo = 0.0;
        seg.hi = 1e-12;
    }
    out
}

/// Lead times of at least `T`, so nothing can expire on `[0, T]`. The deadline horizon is
/// widened by a whole multiple (keeping `dx`) to hold them; initial queues are dropped.
pub fn unexpirable_leads(s: &Scenario) -> Scenario {
    let g = s.grid;
    let mult = (2.5 * g.t_max / g.x_max).ceil().max(1.0) as usize;
    let x_max = g.x_max * mult as f64;
    let mut out = with_leads(s, LeadDist::Uniform { lo: g.t_max, hi: x_max - g.t_max });
    out.grid = Grid { x_max, n_x: g.n_x * mult, ..g };
    out.spec.initial = vec![vec![]; s.spec.k()];
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub scenario: String,
    /// Whether whole fields were compared (single node or no routing); otherwise only totals,
    /// because soft routing does not postpone deadlines.
    pub full_fields: bool,
    pub xi_gap: f64,
    pub beta_gap: f64,
    pub iota_gap: f64,
    /// Largest fluid reneging under the hard policy.
    pub rho_max: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Compares the hard fluid (square induction) with the soft fluid on `s` as given; use
/// [`unexpirable_leads`] to build the degenerate input.
pub fn run_hard_soft_degeneracy(s: &Scenario, tol: f64) -> Result<DegeneracyReport> {
    let data = s.hard_data()?;
    let (hard, _) = hard_network_square_induction(&data)?;
    let soft = vmvsm_solve(&data.alpha, &data.mu, &data.routing)?;
    let g = s.grid;
    let kk = s.spec.k();
    let full = kk == 1 || s.spec.routing.is_zero();
    let (mut xi, mut beta) = (0.0f64, 0.0f64);
    for i in 0..kk {
        for k in 0..=g.n_t {
            if full {
                for j in 0..=g.n_x {
                    xi = xi.max((hard.xi.get(i, k, j) - soft.xi.get(i, k, j)).abs());
                    beta = beta.max((hard.beta.get(i, k, j) - soft.beta.get(i, k, j)).abs());
                }
            } else {
                xi = xi.max((hard.xi.total(i, k) - soft.xi.total(i, k)).abs());
                beta = beta.max((hard.beta.total(i, k) - soft.beta.total(i, k)).abs());
            }
        }
    }
    let iota = hard.iota.sup_diff(&soft.iota)?;
    let rho_max = hard.rho.max_abs();
    let scale = data.alpha.max_abs().max(1.0);
    let pass = xi.max(beta).max(iota).max(rho_max) <= tol * scale;
    Ok(DegeneracyReport { scenario: s.name.clone(), full_fields: full, xi_gap: xi, beta_gap: beta, iota_gap: iota, rho_max, tol, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct FisfoVerdict {
    pub scenario: String,
    pub n: u64,
    pub seed: u64,
    /// Service starts per node.
    pub starts: Vec<usize>,
    pub identical: bool,
    /// First `(node, position)` where the start orders differ.
    pub first_mismatch: Option<(usize, usize)>,
}

/// Runs soft EDF and FISFO on identical primitives and compares the per-node order of
/// service starts. The lead times are used as given; see [`tiny_leads`].
pub fn run_soft_fisfo_equivalence(s: &Scenario, n: u64, seed: u64) -> Result<FisfoVerdict> {
    let kk = s.spec.k();
    let order = |policy: Policy| -> Result<Vec<Vec<u64>>> {
        let mut cfg = sim_config(s, n, policy, 0, true);
        cfg.seed = seed;
        let tr = simulate(&s.spec, &cfg, &s.grid)?;
        let mut out = vec![Vec::new(); kk];
        for e in tr.events.iter().filter(|e| e.kind == EventKind::Start) {
            out[e.node].push(e.job);
        }
        Ok(out)
    };
    let edf = order(Policy::Soft)?;
    let fifo = order(Policy::Fisfo)?;
    if edf.iter().all(|v| v.is_empty()) {
        return Err(Error::Precondition("no service starts: the comparison is vacuous".into()));
    }
    let mut first = None;
    for i in 0..kk {
        let pos = edf[i].iter().zip(&fifo[i]).position(|(a, b)| a != b);
        let pos = pos.or((edf[i].len() != fifo[i].len()).then(|| edf[i].len().min(fifo[i].len())));
        if let Some(p) = pos {
            first = Some((i, p));
            break;
        }
    }
    Ok(FisfoVerdict {
        scenario: s.name.clone(),
        n,
        seed,
        starts: edf.iter().map(Vec::len).collect(),
        identical: first.is_none(),
        first_mismatch: first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn fisfo_single_node_and_negative_control() {
        let s = builtin("supercritical-single").unwrap();
        let v = run_soft_fisfo_equivalence(&tiny_leads(&s), 40, 3).unwrap();
        assert!(v.identical && v.starts[0] > 50);
        // spread deadlines on a congested station: EDF overtakes
        let w = run_soft_fisfo_equivalence(&s, 40, 3).unwrap();
        assert!(!w.identical);
    }

    #[test]
    fn fisfo_feedback_network() {
        let s = builtin("feedback3").unwrap();
        let v = run_soft_fisfo_equivalence(&tiny_leads(&s), 50, 9).unwrap();
        assert!(v.identical, "{:?}", v.first_mismatch);
        assert!(v.starts.iter().all(|&c| c > 10));
    }

    #[test]
    fn unexpirable_hard_matches_soft() {
        let s = unexpirable_leads(&builtin("supercritical-single").unwrap());
        assert_eq!(s.grid.dx(), builtin("supercritical-single").unwrap().grid.dx());
        let r = run_hard_soft_degeneracy(&s, 1e-9).unwrap();
        assert!(r.full_fields && r.pass, "{r:?}");
        assert_eq!(r.rho_max, 0.0);
        // with expiring deadlines the models part ways
        let e = run_hard_soft_degeneracy(&builtin("supercritical-single").unwrap(), 1e-9).unwrap();
        assert!(!e.pass && e.rho_max > 0.1);
    }
}
