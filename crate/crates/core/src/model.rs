//! Network primitives: piecewise-constant rates and capacities, lead-time and service
//! distributions, initial queue profiles, and the exact gridded `α`/`μ` they induce.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure_paths::{Grid, GriddedMeasurePath, VecPath};
use crate::skorokhod::RoutingMatrix;

/// Right-continuous step function given as `(start, value)` rows; the first row starts at 0
/// and the last value extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PiecewiseConstant {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<Vec<[f64; 2]>> for PiecewiseConstant {
    type Error = Error;
    fn try_from(rows: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(rows.iter().map(|r| (r[0], r[1])).collect())
    }
}

impl From<PiecewiseConstant> for Vec<[f64; 2]> {
    fn from(p: PiecewiseConstant) -> Self {
        p.starts.iter().zip(&p.values).map(|(s, v)| [*s, *v]).collect()
    }
}

impl PiecewiseConstant {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("piecewise-constant table is empty".into()));
        }
        if rows[0].0 != 0.0 {
            return Err(Error::Config(format!("table must start at t = 0, starts at {}", rows[0].0)));
        }
        for w in rows.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config(format!("table breakpoints must increase ({} then {})", w[0].0, w[1].0)));
            }
        }
        if rows.iter().any(|r| !r.1.is_finite() || !r.0.is_finite()) {
            return Err(Error::Config("table entries must be finite".into()));
        }
        Ok(Self { starts: rows.iter().map(|r| r.0).collect(), values: rows.iter().map(|r| r.1).collect() })
    }

    pub fn constant(v: f64) -> Self {
        Self { starts: vec![0.0], values: vec![v] }
    }

    pub fn value(&self, t: f64) -> f64 {
        let p = self.starts.partition_point(|&s| s <= t);
        self.values[p.saturating_sub(1)]
    }

    /// Pieces `(s0, s1, v)` covering `[0, horizon]`.
    pub fn pieces(&self, horizon: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for r in 0..self.starts.len() {
            let s0 = self.starts[r];
            if s0 >= horizon {
                break;
            }
            let s1 = self.starts.get(r + 1).copied().unwrap_or(f64::INFINITY).min(horizon);
            out.push((s0, s1, self.values[r]));
        }
        out
    }

    /// `∫_0^t f`.
    pub fn integral(&self, t: f64) -> f64 {
        self.pieces(t).iter().map(|(a, b, v)| v * (b - a)).sum()
    }

    pub fn min_on(&self, horizon: f64) -> f64 {
        self.pieces(horizon).iter().map(|p| p.2).fold(f64::INFINITY, f64::min)
    }

    pub fn max_on(&self, horizon: f64) -> f64 {
        self.pieces(horizon).iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `s >= t0` with `∫_{t0}^s f = amount` for a nonnegative `f`; infinite if the
    /// integral never gets there.
    pub fn advance(&self, t0: f64, amount: f64) -> f64 {
        let mut left = amount;
        let mut t = t0;
        let mut r = self.starts.partition_point(|&s| s <= t0).saturating_sub(1);
        loop {
            let v = self.values[r];
            let end = self.starts.get(r + 1).copied().unwrap_or(f64::INFINITY);
            if v > 0.0 {
                let cap = v * (end - t);
                if cap >= left {
                    return t + left / v;
                }
                left -= cap;
            } else if end == f64::INFINITY {
                return f64::INFINITY;
            }
            t = end;
            r += 1;
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// Atomless lead-time (deadline minus arrival time) distributions with closed-form CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeadDist {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
}

impl LeadDist {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Config(format!(
                "lead-time support [{lo}, {hi}] must satisfy 0 <= lo < hi < inf (atomless, nonnegative)"
            )));
        }
        if let LeadDist::Triangular { mode, .. } = *self {
            if !(mode >= lo && mode <= hi) {
                return Err(Error::Config(format!("triangular mode {mode} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            LeadDist::Uniform { lo, hi } => (lo, hi),
            LeadDist::Triangular { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match *self {
            LeadDist::Uniform { lo, hi } => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
            LeadDist::Triangular { lo: a, mode: c, hi: b } => {
                if v <= a {
                    0.0
                } else if v >= b {
                    1.0
                } else if v <= c {
                    (v - a) * (v - a) / ((b - a) * (c - a))
                } else {
                    1.0 - (b - v) * (b - v) / ((b - a) * (b - c))
                }
            }
        }
    }

    /// `H(v) = ∫_{-∞}^v G(s) ds` with `G` the CDF.
    pub fn cdf_integral(&self, v: f64) -> f64 {
        match *self {
            LeadDist::Uniform { lo: a, hi: b } => {
                if v <= a {
                    0.0
                } else if v < b {
                    (v - a) * (v - a) / (2.0 * (b - a))
                } else {
                    (b - a) / 2.0 + (v - b)
                }
            }
            LeadDist::Triangular { lo: a, mode: c, hi: b } => {
                let h_c = if c > a { (c - a) * (c - a) / (3.0 * (b - a)) } else { 0.0 };
                if v <= a {
                    0.0
                } else if v <= c {
                    (v - a).powi(3) / (3.0 * (b - a) * (c - a))
                } else if v < b {
                    h_c + (v - c) - ((b - c).powi(3) - (b - v).powi(3)) / (3.0 * (b - a) * (b - c))
                } else {
                    (2.0 * b - a - c) / 3.0 + (v - b)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            LeadDist::Uniform { lo, hi } => lo + p * (hi - lo),
            LeadDist::Triangular { lo: a, mode: c, hi: b } => {
                let fc = (c - a) / (b - a);
                if p < fc {
                    a + (p * (b - a) * (c - a)).sqrt()
                } else {
                    b - ((1.0 - p) * (b - a) * (b - c)).sqrt()
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // open interval keeps the support atomless at the endpoints
        let u: f64 = rng.random::<f64>();
        self.quantile(u)
    }
}

/// Unit-mean service requirement distributions with bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceDist {
    /// Uniform on `[1 - c, 1 + c]`, `0 <= c <= 1`.
    Uniform { c: f64 },
    Deterministic,
    /// `X (a + b) / a` with `X ~ Beta(a, b)`.
    ScaledBeta { a: f64, b: f64 },
}

impl ServiceDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ServiceDist::Uniform { c } if !(0.0..=1.0).contains(&c) => {
                Err(Error::Config(format!("uniform service spread c = {c} must lie in [0, 1]")))
            }
            ServiceDist::ScaledBeta { a, b } if !(a > 0.0 && b > 0.0) => {
                Err(Error::Config(format!("beta service parameters must be positive (a = {a}, b = {b})")))
            }
            _ => Ok(()),
        }
    }

    /// Upper end of the support.
    pub fn bound(&self) -> f64 {
        match *self {
            ServiceDist::Uniform { c } => 1.0 + c,
            ServiceDist::Deterministic => 1.0,
            ServiceDist::ScaledBeta { a, b } => (a + b) / a,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ServiceDist::Uniform { c } => 1.0 - c + 2.0 * c * rng.random::<f64>(),
            ServiceDist::Deterministic => 1.0,
            ServiceDist::ScaledBeta { a, b } => {
                let x: f64 = Beta::new(a, b).expect("validated beta parameters").sample(rng);
                x * (a + b) / a
            }
        }
    }
}

/// Mass spread uniformly over deadlines in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSegment {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

impl InitialSegment {
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass * ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub rate: PiecewiseConstant,
    pub lead: LeadDist,
}

/// The primitives of a `K`-station network.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub routing: RoutingMatrix,
    /// Deadline postponement per migration (hard policy).
    pub eps: f64,
    pub arrivals: Vec<ArrivalSpec>,
    pub capacity: Vec<PiecewiseConstant>,
    pub initial: Vec<Vec<InitialSegment>>,
}

impl NetworkSpec {
    pub fn k(&self) -> usize {
        self.routing.k()
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        let k = self.k();
        if self.arrivals.len() != k || self.capacity.len() != k || self.initial.len() != k {
            return Err(Error::Config(format!(
                "expected {k} arrival, capacity and initial-condition entries, got {}, {}, {}",
                self.arrivals.len(),
                self.capacity.len(),
                self.initial.len()
            )));
        }
        for (i, a) in self.arrivals.iter().enumerate() {
            a.lead.validate().map_err(|e| Error::Config(format!("node {i}: {e}")))?;
            if !a.rate.is_nonnegative() {
                return Err(Error::Config(format!("node {i}: arrival rates must be nonnegative")));
            }
        }
        for (i, m) in self.capacity.iter().enumerate() {
            if !(m.min_on(horizon) > 0.0) {
                return Err(Error::Config(format!(
                    "node {i}: data assumption violated: m must be strictly positive (min {} on [0, {horizon}])",
                    m.min_on(horizon)
                )));
            }
        }
        for (i, segs) in self.initial.iter().enumerate() {
            for s in segs {
                if !(s.lo >= 0.0 && s.hi > s.lo && s.mass >= 0.0) {
                    return Err(Error::Config(format!(
                        "node {i}: initial segment [{}, {}] with mass {} must be atomless with lo >= 0",
                        s.lo, s.hi, s.mass
                    )));
                }
            }
        }
        if !(self.eps >= 0.0) {
            return Err(Error::Config(format!("eps = {} must be nonnegative", self.eps)));
        }
        Ok(())
    }

    /// `α^i_t[0, x]`: initial profile plus `∫_0^t λ(s) G(x − s) ds`, exact for
    /// piecewise-constant rates.
    pub fn alpha_at(&self, i: usize, t: f64, x: f64) -> f64 {
        let init: f64 = self.initial[i].iter().map(|s| s.cdf(x)).sum();
        let a = &self.arrivals[i];
        let mut acc = 0.0;
        for (s0, s1, r) in a.rate.pieces(t) {
            if r != 0.0 {
                acc += r * (a.lead.cdf_integral(x - s0) - a.lead.cdf_integral(x - s1));
            }
        }
        init + acc
    }

    /// Total exogenous mass by time `t` (all deadlines).
    pub fn alpha_total(&self, i: usize, t: f64) -> f64 {
        self.initial[i].iter().map(|s| s.mass).sum::<f64>() + self.arrivals[i].rate.integral(t)
    }

    /// Gridded `α`, monotone in both arguments. Errors if mass with deadline beyond the
    /// deadline horizon arrives by `T`.
    pub fn alpha_field(&self, grid: &Grid) -> Result<GriddedMeasurePath> {
        let k = self.k();
        let mut f = GriddedMeasurePath::zeros(*grid, k);
        for i in 0..k {
            for kt in 0..=grid.n_t {
                let t = grid.t(kt);
                let row = f.row_mut(i, kt);
                let mut run = 0.0f64;
                for (j, v) in row.iter_mut().enumerate() {
                    // rounding can make the closed form dip by an ulp; keep the CDF monotone
                    run = run.max(self.alpha_at(i, t, grid.x(j)).max(0.0));
                    *v = run;
                }
            }
            for kt in 1..=grid.n_t {
                for j in 0..=grid.n_x {
                    let prev = f.get(i, kt - 1, j);
                    if f.get(i, kt, j) < prev {
                        f.set(i, kt, j, prev);
                    }
                }
            }
            let total = self.alpha_total(i, grid.t_max);
            let inside = f.total(i, grid.n_t);
            if total - inside > 1e-9 * total.max(1.0) {
                return Err(Error::DomainTruncation(format!(
                    "node {i}: mass {:.6e} arrives by T = {} with deadline beyond X = {}; raise X to at least {}",
                    total - inside,
                    grid.t_max,
                    grid.x_max,
                    self.max_deadline(i, grid.t_max)
                )));
            }
        }
        Ok(f)
    }

    /// Latest deadline any mass arriving by `t` can carry.
    pub fn max_deadline(&self, i: usize, t: f64) -> f64 {
        let init = self.initial[i].iter().filter(|s| s.mass > 0.0).map(|s| s.hi).fold(0.0, f64::max);
        let a = &self.arrivals[i];
        let last_arrival = a.rate.pieces(t).iter().filter(|p| p.2 > 0.0).map(|p| p.1).fold(0.0, f64::max);
        init.max(last_arrival + a.lead.support().1)
    }

    /// `μ^i(t_k) = ∫_0^{t_k} m^i`.
    pub fn mu_path(&self, grid: &Grid) -> VecPath {
        VecPath::from_fn(*grid, self.k(), |i, k| self.capacity[i].integral(grid.t(k)))
    }

    /// Diagnostics for the data assumptions that are not hard errors: edge mass near the
    /// diagonal, per-cell atoms and the `δ₀` condition. Returns warnings.
    pub fn data_warnings(&self, grid: &Grid, cell_mass_cap: Option<f64>) -> Vec<String> {
        let mut out = Vec::new();
        let dx = grid.dx();
        for i in 0..self.k() {
            let a = &self.arrivals[i];
            for kt in 0..grid.n_t {
                let s = grid.t(kt);
                let rate = a.rate.value(s);
                // density of a_s on [s, s + 2dx] versus capacity
                let edge = rate * a.lead.cdf(2.0 * dx);
                let m = self.capacity[i].value(s);
                if edge >= m {
                    out.push(format!(
                        "node {i}: edge condition a_s[s, s + 2dx] = {edge:.4} >= m = {m:.4} at s = {s:.4}"
                    ));
                    break;
                }
            }
            let total = self.alpha_total(i, grid.t_max);
            let cap = cell_mass_cap.unwrap_or(total / (grid.n_x as f64).sqrt());
            for s in &self.initial[i] {
                let per_cell = s.mass * dx / (s.hi - s.lo);
                if per_cell > cap && cap > 0.0 {
                    out.push(format!("node {i}: initial segment puts {per_cell:.4} per cell, above the atom cap {cap:.4}"));
                }
            }
        }
        out
    }
}
