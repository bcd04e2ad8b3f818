//! Full-grid scans of the hard fluid model equations on a computed solution.

use serde::Serialize;

use super::{eps_cells, hard_network_square_induction, truncate_levels, HardFluidData, HardFluidSolution};
use crate::error::{Error, Result};
use crate::skorokhod::complementarity_sum;
use crate::Verdict;

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    /// `γ_t[0,x] = β^s_t[0, x − ε]`.
    pub gamma_shift: Verdict,
    /// `β = β^s + β^r`.
    pub beta_split: Verdict,
    /// `ι = μ − β^s[0,∞)`.
    pub iota_identity: Verdict,
    /// `ξ_t[0,t] = 0`.
    pub hardness: Verdict,
    /// `β^r_t(t,∞) = 0`.
    pub renege_after_deadline: Verdict,
    /// `β^r_t[0,x] = ρ(t ∧ x)`: exact on time-aligned levels, bracketed in between.
    pub beta_r_rho: Verdict,
    /// `ξ + β = α + Σ_j P_ji γ^j` at every grid node.
    pub balance: Verdict,
    /// Nonnegativity and monotonicity of the fields.
    pub shape: Verdict,
    /// `Σ ξ_t[0,∞) dι(t)`.
    pub work_conservation: Verdict,
    /// `Σ ξ_t[0,x] dβ_t(x,∞)` over all levels.
    pub edf_condition: Verdict,
    /// `ρ` increases in a step only if the queue's left edge (or fresh input) reaches the
    /// step's deadline boundary.
    pub reneging_at_edge: Verdict,
}

impl InvariantReport {
    /// The model equations proper. The complementarity conditions are included only when
    /// asked: the direct stepper satisfies them up to its one-step routing lag.
    pub fn all_pass(&self, with_complementarity: bool) -> bool {
        let core = [
            &self.gamma_shift,
            &self.beta_split,
            &self.iota_identity,
            &self.hardness,
            &self.renege_after_deadline,
            &self.beta_r_rho,
            &self.balance,
            &self.shape,
            &self.reneging_at_edge,
        ]
        .iter()
        .all(|v| v.pass);
        core && (!with_complementarity || (self.work_conservation.pass && self.edf_condition.pass))
    }

    pub fn entries(&self) -> Vec<(&'static str, &Verdict)> {
        vec![
            ("gamma_shift", &self.gamma_shift),
            ("beta_split", &self.beta_split),
            ("iota_identity", &self.iota_identity),
            ("hardness", &self.hardness),
            ("renege_after_deadline", &self.renege_after_deadline),
            ("beta_r_rho", &self.beta_r_rho),
            ("balance", &self.balance),
            ("shape", &self.shape),
            ("work_conservation", &self.work_conservation),
            ("edf_condition", &self.edf_condition),
            ("reneging_at_edge", &self.reneging_at_edge),
        ]
    }
}

/// Total input `α^i + Σ_j P_ji γ^j` at `(k, j)`.
fn input_at(data: &HardFluidData, sol: &HardFluidSolution, i: usize, k: usize, j: usize) -> f64 {
    let mut v = data.alpha.get(i, k, j);
    for l in 0..data.k() {
        let p = data.routing.p(l, i);
        if p != 0.0 {
            v += p * sol.gamma.get(l, k, j);
        }
    }
    v
}

pub fn check_solution_invariants(sol: &HardFluidSolution, data: &HardFluidData, tol: f64) -> Result<InvariantReport> {
    let hg = data.hard_grid()?;
    let g = *data.grid();
    let (r, m) = (hg.r, hg.m);
    let kk = data.k();
    if sol.xi.grid() != &g || sol.xi.comps() != kk {
        return Err(Error::Shape("solution and data disagree in shape".into()));
    }
    let mut rep = InvariantReport {
        gamma_shift: Verdict::pass(),
        beta_split: Verdict::pass(),
        iota_identity: Verdict::pass(),
        hardness: Verdict::pass(),
        renege_after_deadline: Verdict::pass(),
        beta_r_rho: Verdict::pass(),
        balance: Verdict::pass(),
        shape: Verdict::pass(),
        work_conservation: Verdict::pass(),
        edf_condition: Verdict::pass(),
        reneging_at_edge: Verdict::pass(),
    };
    let at = |name: &'static str, i: usize, k: usize, j: usize| move || format!("{name}: node {i}, t index {k}, x index {j}");

    for i in 0..kk {
        for k in 0..=g.n_t {
            let bs_top = sol.beta_s.total(i, k);
            let br_top = sol.beta_r.total(i, k);
            rep.iota_identity.record((sol.iota.get(i, k) - (data.mu.get(i, k) - bs_top)).abs(), tol, at("iota", i, k, g.n_x));
            let jt = k * r;
            rep.hardness.record(sol.xi.get(i, k, jt), tol, at("xi[0,t]", i, k, jt));
            rep.renege_after_deadline.record(br_top - sol.beta_r.get(i, k, jt), tol, at("beta_r(t,inf)", i, k, jt));
            for j in 0..=g.n_x {
                let want = if j == g.n_x { bs_top } else if j >= m { sol.beta_s.get(i, k, j - m) } else { 0.0 };
                rep.gamma_shift.record((sol.gamma.get(i, k, j) - want).abs(), tol, at("gamma", i, k, j));
                let split = sol.beta.get(i, k, j) - sol.beta_s.get(i, k, j) - sol.beta_r.get(i, k, j);
                rep.beta_split.record(split.abs(), tol, at("beta", i, k, j));
                let bal = sol.xi.get(i, k, j) + sol.beta.get(i, k, j) - input_at(data, sol, i, k, j);
                rep.balance.record(bal.abs(), tol, at("balance", i, k, j));

                // β^r_t[0,x_j] against ρ(t ∧ x_j)
                let br = sol.beta_r.get(i, k, j);
                let (lo_k, hi_k) = (j / r, j.div_ceil(r));
                let lo = sol.rho.get(i, lo_k.min(k));
                let hi = sol.rho.get(i, hi_k.min(k));
                let dev = if lo_k == hi_k { (br - lo).abs() } else { (lo - br).max(br - hi).max(0.0) };
                rep.beta_r_rho.record(dev, tol, at("beta_r vs rho", i, k, j));

                let mut s = -sol.xi.get(i, k, j).min(0.0);
                s = s.max(-sol.beta_s.get(i, k, j).min(0.0)).max(-sol.beta_r.get(i, k, j).min(0.0));
                if j > 0 {
                    s = s.max(sol.xi.get(i, k, j - 1) - sol.xi.get(i, k, j));
                    s = s.max(sol.beta_s.get(i, k, j - 1) - sol.beta_s.get(i, k, j));
                }
                if k > 0 {
                    s = s.max(sol.beta_s.get(i, k - 1, j) - sol.beta_s.get(i, k, j));
                    s = s.max(sol.beta_r.get(i, k - 1, j) - sol.beta_r.get(i, k, j));
                }
                rep.shape.record(s, tol, at("shape", i, k, j));
            }
        }

        let xi_tot: Vec<f64> = (0..=g.n_t).map(|k| sol.xi.total(i, k)).collect();
        rep.work_conservation.record(complementarity_sum(&xi_tot, sol.iota.series(i)), tol, || format!("work conservation: node {i}"));
        for j in 0..=g.n_x {
            let z = sol.xi.level(i, j);
            let tail: Vec<f64> = (0..=g.n_t).map(|k| sol.beta.total(i, k) - sol.beta.get(i, k, j)).collect();
            rep.edf_condition.record(complementarity_sum(&z, &tail), tol, || format!("EDF condition: node {i}, x index {j}"));
        }

        for k in 0..g.n_t {
            let d_rho = sol.rho.get(i, k + 1) - sol.rho.get(i, k);
            if d_rho <= tol {
                continue;
            }
            let edge = g.t(k + 1) + g.dx();
            let jr = (k + 1) * r;
            let fresh = input_at(data, sol, i, k + 1, jr) - input_at(data, sol, i, k, jr);
            let ok = sol.sigma.get(i, k) <= edge + 1e-12 || fresh > tol;
            rep.reneging_at_edge.record(if ok { 0.0 } else { d_rho }, tol, || format!("reneging away from the edge: node {i}, t index {k}"));
        }
    }
    Ok(rep)
}

/// Departures never carry a (postponed) deadline below `t + ε` once past `t`: for grid
/// `t < t₀`, `γ_{t₀}[0, t+ε] − γ_t[0, t+ε] <= tol`.
pub fn check_gamma_edge_property(sol: &HardFluidSolution, eps: f64, tol: f64) -> Result<Verdict> {
    let g = *sol.gamma.grid();
    let r = g
        .steps_per_dt()
        .ok_or_else(|| Error::Config("gamma edge check needs dt / dx to be an integer".into()))?;
    let m = eps_cells(eps, &g)?;
    let mut v = Verdict::pass();
    for i in 0..sol.gamma.comps() {
        for k in 0..g.n_t {
            let j = k * r + m;
            if j >= g.n_x {
                // the top cell stands for [0, ∞)
                break;
            }
            let base = sol.gamma.get(i, k, j);
            for k0 in k + 1..=g.n_t {
                let d = sol.gamma.get(i, k0, j) - base;
                v.record(d, tol, || format!("node {i}: gamma gains {d:e} below t + eps = {} between t index {k} and {k0}", g.x(j)));
            }
        }
    }
    Ok(v)
}

/// Solves with `α` and with `α` restricted to deadlines in `[0, τ]`; the two solutions must
/// agree on `[0, τ]²` (`ρ`, `β^r`, `β^s`, `ξ`).
pub fn check_truncation_nonanticipation(data: &HardFluidData, tau: f64, tol: f64) -> Result<Verdict> {
    let g = *data.grid();
    let kt = (tau / g.dt()).round();
    let jt = (tau / g.dx()).round();
    if tau < 0.0 || (kt * g.dt() - tau).abs() > 1e-9 * g.dt() || (jt * g.dx() - tau).abs() > 1e-9 * g.dx() {
        return Err(Error::Precondition(format!("tau = {tau} is not aligned with the grid")));
    }
    if tau > g.t_max.min(g.x_max) + 1e-12 {
        return Err(Error::Precondition(format!("tau = {tau} exceeds min(T, X)")));
    }
    let (kt, jt) = (kt as usize, jt as usize);
    if kt == 0 {
        return Ok(Verdict::pass());
    }
    let mut cut = data.clone();
    let mut tmp = vec![0.0; g.n_x + 1];
    for i in 0..data.k() {
        for k in 0..=g.n_t {
            truncate_levels(data.alpha.row(i, k), jt, &mut tmp);
            cut.alpha.row_mut(i, k).copy_from_slice(&tmp);
        }
    }
    let (a, _) = hard_network_square_induction(data)?;
    let (b, _) = hard_network_square_induction(&cut)?;
    let mut v = Verdict::pass();
    for i in 0..data.k() {
        for k in 0..=kt {
            v.record((a.rho.get(i, k) - b.rho.get(i, k)).abs(), tol, || format!("rho: node {i}, t index {k}"));
            for j in 0..=jt {
                for (name, f1, f2) in [("xi", &a.xi, &b.xi), ("beta_s", &a.beta_s, &b.beta_s), ("beta_r", &a.beta_r, &b.beta_r)] {
                    let d = (f1.get(i, k, j) - f2.get(i, k, j)).abs();
                    v.record(d, tol, || format!("{name}: node {i}, t index {k}, x index {j}"));
                }
            }
        }
    }
    Ok(v)
}
