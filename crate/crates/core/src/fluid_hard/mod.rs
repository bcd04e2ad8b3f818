//! Hard-EDF fluid solvers.
//!
//! All solvers share one per-node time step on cumulative deadline levels
//! (`q[j] = ξ[0, x_j]`): deposit the input increment, serve EDF with the step's capacity,
//! then renege every level whose deadline has passed. Without reneging this is exactly the
//! Lindley recursion per level, i.e. the discrete half-line Skorokhod map.
//!
//! The grid must satisfy `dt = r·dx` for an integer `r` (so `t_k` is the deadline node
//! `x_{k r}`), `X >= T`, and `ε = m·dx` for an integer `m`.

pub mod checks;
pub mod direct;
pub mod single_node;
pub mod square_induction;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure_paths::{Grid, GriddedMeasurePath, VecPath};
use crate::model::NetworkSpec;
use crate::skorokhod::RoutingMatrix;

pub use checks::{check_gamma_edge_property, check_solution_invariants, check_truncation_nonanticipation, InvariantReport};
pub use direct::hard_network_direct;
pub use single_node::hard_single_node;
pub use square_induction::{hard_network_square_induction, SquareInductionState};

/// Primitives of the hard fluid model on a grid.
#[derive(Debug, Clone)]
pub struct HardFluidData {
    /// Exogenous arrivals, initial condition included at `t = 0`.
    pub alpha: GriddedMeasurePath,
    pub mu: VecPath,
    pub routing: RoutingMatrix,
    pub eps: f64,
}

/// Integer grid relations required by the hard solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HardGrid {
    /// `dt / dx`.
    pub r: usize,
    /// `ε / dx`.
    pub m: usize,
}

impl HardFluidData {
    pub fn from_spec(spec: &NetworkSpec, grid: &Grid) -> Result<Self> {
        Ok(Self { alpha: spec.alpha_field(grid)?, mu: spec.mu_path(grid), routing: spec.routing.clone(), eps: spec.eps })
    }

    pub fn k(&self) -> usize {
        self.routing.k()
    }

    pub fn grid(&self) -> &Grid {
        self.alpha.grid()
    }

    /// Checks grid alignment and the data assumptions that the scheme relies on.
    pub fn hard_grid(&self) -> Result<HardGrid> {
        let g = self.grid();
        if self.alpha.comps() != self.k() || self.mu.comps() != self.k() || self.mu.grid() != g {
            return Err(Error::Shape("alpha, mu and routing disagree in shape".into()));
        }
        let r = g.steps_per_dt().ok_or_else(|| {
            Error::Config(format!("hard solvers need dt / dx to be a positive integer (dt = {}, dx = {})", g.dt(), g.dx()))
        })?;
        if g.n_t * r > g.n_x {
            return Err(Error::Config(format!(
                "hard solvers need the deadline horizon X = {} to cover the time horizon T = {}",
                g.x_max, g.t_max
            )));
        }
        let m = eps_cells(self.eps, g)?;
        if m == 0 && !self.routing.is_zero() {
            return Err(Error::Config("routing requires a positive postponement eps".into()));
        }
        for i in 0..self.k() {
            if self.mu.get(i, 0) != 0.0 {
                return Err(Error::Precondition(format!("mu^{i}(0) must be 0")));
            }
            for k in 0..g.n_t {
                if self.mu.get(i, k + 1) < self.mu.get(i, k) {
                    return Err(Error::Precondition(format!("mu^{i} decreases at node {k}")));
                }
                // no exogenous mass may arrive with an already expired deadline
                let j = k * r;
                let late = self.alpha.get(i, k + 1, j) - self.alpha.get(i, k, j);
                if late > 1e-12 * self.alpha.max_abs().max(1.0) {
                    return Err(Error::Precondition(format!(
                        "node {i}: mass {late:e} arrives in step {k} with deadline <= t_k (arrivals must be supported on [t, inf))"
                    )));
                }
            }
        }
        let tv = self.alpha.t_monotonicity_violation();
        if tv > 0.0 || self.alpha.negativity() > 0.0 || self.alpha.x_monotonicity_violation() > 0.0 {
            return Err(Error::Precondition("alpha must be a nonnegative increasing measure path".into()));
        }
        Ok(HardGrid { r, m })
    }
}

/// `ε / dx` when `ε` is a grid multiple; otherwise an error suggesting the nearest aligned value.
pub fn eps_cells(eps: f64, g: &Grid) -> Result<usize> {
    let q = eps / g.dx();
    let n = q.round();
    if (q - n).abs() > 1e-9 * n.max(1.0) || eps < 0.0 {
        let lo = (q.floor() * g.dx()).max(0.0);
        let hi = q.ceil() * g.dx();
        let near = if (eps - lo).abs() <= (hi - eps).abs() && lo > 0.0 { lo } else { hi };
        // drop the rounding noise of `n · dx` from the suggestion
        let near = (near * 1e12).round() / 1e12;
        return Err(Error::Config(format!(
            "eps = {eps} is not a multiple of dx = {}; nearest grid-aligned eps is {near}",
            g.dx()
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone)]
pub struct HardFluidSolution {
    pub xi: GriddedMeasurePath,
    pub beta: GriddedMeasurePath,
    pub beta_s: GriddedMeasurePath,
    pub beta_r: GriddedMeasurePath,
    /// Departures labelled with their postponed deadline: `γ_t[0,x] = β^s_t[0, x − ε]`.
    pub gamma: GriddedMeasurePath,
    pub rho: VecPath,
    pub iota: VecPath,
    /// Left edge of the queue's support, `+inf` when empty.
    pub sigma: VecPath,
}

/// Output of one node solve.
#[derive(Debug, Clone)]
pub(crate) struct NodeSolution {
    pub xi: GriddedMeasurePath,
    pub beta_s: GriddedMeasurePath,
    pub beta_r: GriddedMeasurePath,
    pub rho: Vec<f64>,
    pub iota: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Level state of one node.
#[derive(Debug, Clone)]
pub(crate) struct NodeState {
    pub q: Vec<f64>,
    pub bs: Vec<f64>,
    pub br: Vec<f64>,
    pub rho: f64,
    pub iota: f64,
}

/// Mass below this counts as absent when locating the support edge.
pub const SIGMA_TOL: f64 = 1e-12;

impl NodeState {
    pub fn new(initial: &[f64]) -> Self {
        let n = initial.len();
        Self { q: initial.to_vec(), bs: vec![0.0; n], br: vec![0.0; n], rho: 0.0, iota: 0.0 }
    }

    /// Deposits `inc` and serves EDF with capacity `cap`. Returns the served increments per
    /// level through `served`.
    pub fn serve(&mut self, inc: &[f64], cap: f64, served: &mut [f64]) {
        for j in 0..self.q.len() {
            let avail = self.q[j] + inc[j];
            let s = avail.min(cap);
            served[j] = s;
            self.q[j] = avail - s;
            self.bs[j] += s;
        }
        let top = *served.last().expect("at least one level");
        self.iota += cap - top;
    }

    /// Adds mass without service (routed arrivals at the end of a step).
    pub fn deposit(&mut self, inc: &[f64]) {
        for (q, d) in self.q.iter_mut().zip(inc) {
            *q += d;
        }
    }

    /// Reneges all mass with deadline at or below the level `jr`.
    pub fn renege(&mut self, jr: usize) {
        let jr = jr.min(self.q.len() - 1);
        let gone = self.q[jr];
        self.rho += gone;
        for j in 0..self.q.len() {
            if j <= jr {
                self.br[j] += self.q[j];
                self.q[j] = 0.0;
            } else {
                self.br[j] += gone;
                self.q[j] = (self.q[j] - gone).max(0.0);
            }
        }
    }

    pub fn sigma(&self, g: &Grid) -> f64 {
        match self.q.iter().position(|&v| v > SIGMA_TOL) {
            Some(j) => g.x(j),
            None => f64::INFINITY,
        }
    }
}

/// `γ[j] = β^s[j − m]`, zero below `m`; the top cell keeps everything (it stands for `[0, ∞)`).
pub(crate) fn shift_levels(src: &[f64], m: usize, out: &mut [f64]) {
    let n = src.len();
    for j in 0..n {
        out[j] = if j + 1 == n { src[j] } else if j >= m { src[j - m] } else { 0.0 };
    }
}

pub(crate) fn shift_field(src: &GriddedMeasurePath, m: usize) -> GriddedMeasurePath {
    let g = *src.grid();
    let mut out = GriddedMeasurePath::zeros(g, src.comps());
    for i in 0..src.comps() {
        for k in 0..=g.n_t {
            let row = src.row(i, k).to_vec();
            shift_levels(&row, m, out.row_mut(i, k));
        }
    }
    out
}

/// Stacks per-node results into a network solution.
pub(crate) fn assemble(nodes: Vec<NodeSolution>, m: usize) -> Result<HardFluidSolution> {
    let g = *nodes[0].xi.grid();
    let kk = nodes.len();
    let xi = GriddedMeasurePath::stack(&nodes.iter().map(|n| n.xi.clone()).collect::<Vec<_>>())?;
    let beta_s = GriddedMeasurePath::stack(&nodes.iter().map(|n| n.beta_s.clone()).collect::<Vec<_>>())?;
    let beta_r = GriddedMeasurePath::stack(&nodes.iter().map(|n| n.beta_r.clone()).collect::<Vec<_>>())?;
    let mut beta = beta_s.clone();
    for i in 0..kk {
        for k in 0..=g.n_t {
            let r = beta_r.row(i, k).to_vec();
            for (b, v) in beta.row_mut(i, k).iter_mut().zip(r) {
                *b += v;
            }
        }
    }
    let gamma = shift_field(&beta_s, m);
    let rho = VecPath::from_fn(g, kk, |i, k| nodes[i].rho[k]);
    let iota = VecPath::from_fn(g, kk, |i, k| nodes[i].iota[k]);
    let sigma = VecPath::from_fn(g, kk, |i, k| nodes[i].sigma[k]);
    Ok(HardFluidSolution { xi, beta, beta_s, beta_r, gamma, rho, iota, sigma })
}

/// `F[min(j, c)]`: restriction of a cumulative field to deadlines in the first `c` cells.
pub(crate) fn truncate_levels(row: &[f64], c: usize, out: &mut [f64]) {
    for j in 0..row.len() {
        out[j] = row[j.min(c)];
    }
}
