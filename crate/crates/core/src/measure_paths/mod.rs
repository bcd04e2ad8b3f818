//! Gridded (vector) measure-valued paths and the distances used to compare them.
//!
//! A measure path is stored through its cumulative field `F[i][k][j] = ζ^i_{t_k}[0, x_j]`,
//! piecewise constant and right-continuous between nodes. Node `j > 0` stands for the
//! deadline cell `(x_{j-1}, x_j]`, node `0` for the point `{0}`.

pub mod csv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when snapping off-grid coordinates down to a node.
const SNAP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_max: f64,
    pub x_max: f64,
    pub n_t: usize,
    pub n_x: usize,
}

impl Grid {
    pub fn new(t_max: f64, x_max: f64, n_t: usize, n_x: usize) -> Result<Self> {
        if n_t < 1 || n_x < 1 {
            return Err(Error::Config(format!(
                "grid needs n_t >= 1 and n_x >= 1 (got n_t = {n_t}, n_x = {n_x})"
            )));
        }
        if !(t_max > 0.0 && t_max.is_finite() && x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Config(format!(
                "grid horizons must be positive and finite (got T = {t_max}, X = {x_max})"
            )));
        }
        Ok(Self { t_max, x_max, n_t, n_x })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_t as f64
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_x as f64
    }

    /// Time node `t_k`, computed fresh from the index.
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.t_max / self.n_t as f64
    }

    /// Deadline node `x_j`, computed fresh from the index.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.x_max / self.n_x as f64
    }

    /// Largest `k` with `t_k <= t` (clamped to the grid).
    pub fn k_floor(&self, t: f64) -> usize {
        snap_floor(t, self.dt(), self.n_t)
    }

    /// Largest `j` with `x_j <= x` (clamped to the grid).
    pub fn j_floor(&self, x: f64) -> usize {
        snap_floor(x, self.dx(), self.n_x)
    }

    /// Deadline cell holding a point `d`: `0` for `d <= 0`, otherwise the `j` with
    /// `x_{j-1} < d <= x_j`, clamped to the top cell.
    pub fn cell_of(&self, d: f64) -> usize {
        if d <= 0.0 {
            return 0;
        }
        let r = d / self.dx();
        // a deadline sitting on a node (up to rounding) belongs to that node's cell
        let j = (r - SNAP_SLACK * r.max(1.0)).ceil().max(1.0) as usize;
        j.min(self.n_x)
    }

    /// Refined grid with both steps halved `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        Self { n_t: self.n_t * f, n_x: self.n_x * f, ..*self }
    }

    /// `dt / dx` when it is a positive integer.
    pub fn steps_per_dt(&self) -> Option<usize> {
        let r = self.dt() / self.dx();
        let n = r.round();
        if n >= 1.0 && (r - n).abs() <= 1e-9 * n {
            Some(n as usize)
        } else {
            None
        }
    }
}

fn snap_floor(v: f64, step: f64, n: usize) -> usize {
    if v <= 0.0 {
        return 0;
    }
    let r = v / step;
    let f = (r + SNAP_SLACK * r.max(1.0)).floor();
    (f as usize).min(n)
}

/// Cumulative field of a `K`-vector measure-valued path on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedMeasurePath {
    grid: Grid,
    comps: usize,
    data: Vec<f64>,
}

impl GriddedMeasurePath {
    pub fn zeros(grid: Grid, comps: usize) -> Self {
        let len = comps * (grid.n_t + 1) * (grid.n_x + 1);
        Self { grid, comps, data: vec![0.0; len] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    #[inline]
    fn idx(&self, i: usize, k: usize, j: usize) -> usize {
        (i * (self.grid.n_t + 1) + k) * (self.grid.n_x + 1) + j
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        self.data[self.idx(i, k, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, j: usize, v: f64) {
        let p = self.idx(i, k, j);
        self.data[p] = v;
    }

    /// Checked read.
    pub fn try_get(&self, i: usize, k: usize, j: usize) -> Result<f64> {
        self.check_index(i, k)?;
        if j > self.grid.n_x {
            return Err(Error::Bounds(format!("deadline index {j} > n_x = {}", self.grid.n_x)));
        }
        Ok(self.get(i, k, j))
    }

    fn check_index(&self, i: usize, k: usize) -> Result<()> {
        if i >= self.comps {
            return Err(Error::Bounds(format!("component {i} >= K = {}", self.comps)));
        }
        if k > self.grid.n_t {
            return Err(Error::Bounds(format!("time index {k} > n_t = {}", self.grid.n_t)));
        }
        Ok(())
    }

    /// The cumulative profile `x_j ↦ F[i][k][j]`.
    pub fn row(&self, i: usize, k: usize) -> &[f64] {
        let a = self.idx(i, k, 0);
        &self.data[a..a + self.grid.n_x + 1]
    }

    pub fn row_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let a = self.idx(i, k, 0);
        let n = self.grid.n_x + 1;
        &mut self.data[a..a + n]
    }

    /// Total mass `F[i][k][n_x]`.
    pub fn total(&self, i: usize, k: usize) -> f64 {
        self.get(i, k, self.grid.n_x)
    }

    /// Time series of the level `x_j`.
    pub fn level(&self, i: usize, j: usize) -> Vec<f64> {
        (0..=self.grid.n_t).map(|k| self.get(i, k, j)).collect()
    }

    /// Adds an atom of `mass` at deadline `x`, present from time `t` on.
    pub fn add_mass(&mut self, i: usize, t: f64, x: f64, mass: f64) -> Result<()> {
        if i >= self.comps {
            return Err(Error::Bounds(format!("component {i} >= K = {}", self.comps)));
        }
        if t < 0.0 || t > self.grid.t_max || x < 0.0 || x > self.grid.x_max {
            return Err(Error::Bounds(format!("point (t = {t}, x = {x}) outside the grid")));
        }
        let k0 = self.grid.k_floor(t);
        let k0 = if self.grid.t(k0) < t { k0 + 1 } else { k0 };
        let j0 = self.grid.cell_of(x);
        for k in k0..=self.grid.n_t {
            for v in &mut self.row_mut(i, k)[j0..] {
                *v += mass;
            }
        }
        Ok(())
    }

    /// Largest drop `F[j] - F[j+1]` over all rows (0 when x-monotone).
    pub fn x_monotonicity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.comps {
            for k in 0..=self.grid.n_t {
                for w in self.row(i, k).windows(2) {
                    worst = worst.max(w[0] - w[1]);
                }
            }
        }
        worst
    }

    /// Largest decrease in time at a fixed level (0 for an increasing path).
    pub fn t_monotonicity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.comps {
            for k in 0..self.grid.n_t {
                let (a, b) = (self.row(i, k), self.row(i, k + 1));
                for j in 0..=self.grid.n_x {
                    worst = worst.max(a[j] - b[j]);
                }
            }
        }
        worst
    }

    /// Most negative value (0 if all values are nonnegative).
    pub fn negativity(&self) -> f64 {
        self.data.iter().fold(0.0f64, |w, &v| w.max(-v))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |w, &v| w.max(v.abs()))
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn from_raw(grid: Grid, comps: usize, data: Vec<f64>) -> Result<Self> {
        let len = comps * (grid.n_t + 1) * (grid.n_x + 1);
        if data.len() != len {
            return Err(Error::Shape(format!("expected {len} values, got {}", data.len())));
        }
        Ok(Self { grid, comps, data })
    }

    /// One component as its own single-component path.
    pub fn component(&self, i: usize) -> Self {
        let n = (self.grid.n_t + 1) * (self.grid.n_x + 1);
        Self { grid: self.grid, comps: 1, data: self.data[i * n..(i + 1) * n].to_vec() }
    }

    /// Stacks single-component paths sharing a grid.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("nothing to stack".into()))?;
        let mut data = Vec::with_capacity(parts.len() * first.data.len());
        let mut comps = 0;
        for p in parts {
            if p.grid != first.grid {
                return Err(Error::Shape("stacked paths live on different grids".into()));
            }
            data.extend_from_slice(&p.data);
            comps += p.comps;
        }
        Ok(Self { grid: first.grid, comps, data })
    }

    /// Largest absolute nodewise difference over `k <= k_max`, `j <= j_max`, all components.
    pub fn sup_diff_on(&self, other: &Self, k_max: usize, j_max: usize) -> Result<f64> {
        same_shape(self, other)?;
        let mut worst = 0.0f64;
        for i in 0..self.comps {
            for k in 0..=k_max.min(self.grid.n_t) {
                let (a, b) = (self.row(i, k), other.row(i, k));
                for j in 0..=j_max.min(self.grid.n_x) {
                    worst = worst.max((a[j] - b[j]).abs());
                }
            }
        }
        Ok(worst)
    }
}

fn same_shape(a: &GriddedMeasurePath, b: &GriddedMeasurePath) -> Result<()> {
    if a.grid != b.grid || a.comps != b.comps {
        return Err(Error::Shape(format!(
            "paths differ in shape: {:?} x {} vs {:?} x {}",
            a.grid, a.comps, b.grid, b.comps
        )));
    }
    Ok(())
}

/// A `K`-vector real path on the time grid (`μ`, `ι`, `ρ`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct VecPath {
    grid: Grid,
    comps: usize,
    data: Vec<f64>,
}

impl VecPath {
    pub fn zeros(grid: Grid, comps: usize) -> Self {
        Self { grid, comps, data: vec![0.0; comps * (grid.n_t + 1)] }
    }

    pub fn from_fn(grid: Grid, comps: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut p = Self::zeros(grid, comps);
        for i in 0..comps {
            for k in 0..=grid.n_t {
                p.set(i, k, f(i, k));
            }
        }
        p
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * (self.grid.n_t + 1) + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        let n = self.grid.n_t + 1;
        self.data[i * n + k] = v;
    }

    pub fn series(&self, i: usize) -> &[f64] {
        let n = self.grid.n_t + 1;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn series_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.grid.n_t + 1;
        &mut self.data[i * n..(i + 1) * n]
    }

    /// Smallest value over all components and times (`+inf` when empty).
    pub fn series_min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid || self.comps != other.comps {
            return Err(Error::Shape("vector paths differ in shape".into()));
        }
        Ok(self.data.iter().zip(&other.data).fold(0.0f64, |w, (a, b)| w.max((a - b).abs())))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |w, &v| w.max(v.abs()))
    }
}

/// Mass of `[x_lo, x_hi]` at `(i, t_k)`.
///
/// Off-grid endpoints snap down to the grid. The left endpoint is treated as atomless
/// (`F[j_hi] - F[j_lo]`) except at `x_lo = 0`, where the atom at the origin is included.
/// Returns 0 when `x_lo > x_hi`.
pub fn interval_mass(path: &GriddedMeasurePath, i: usize, k: usize, x_lo: f64, x_hi: f64) -> Result<f64> {
    path.check_index(i, k)?;
    if x_lo > x_hi {
        return Ok(0.0);
    }
    let g = path.grid();
    let (jl, jh) = (g.j_floor(x_lo), g.j_floor(x_hi));
    let row = path.row(i, k);
    Ok(if jl == 0 && x_lo <= 0.0 { row[jh] } else { row[jh] - row[jl] })
}

/// Mass of the half-open cell range `(x_a, x_b]` on grid indices.
pub fn cell_range_mass(path: &GriddedMeasurePath, i: usize, k: usize, ja: usize, jb: usize) -> f64 {
    if ja >= jb {
        return 0.0;
    }
    let row = path.row(i, k);
    row[jb] - row[ja]
}

/// `max_{k <= T'/dt, j} |F1[i][k][j] - F2[i][k][j]|`.
pub fn sup_cdf_distance(p1: &GriddedMeasurePath, p2: &GriddedMeasurePath, i: usize, up_to: f64) -> Result<f64> {
    same_shape(p1, p2)?;
    if i >= p1.comps {
        return Err(Error::Bounds(format!("component {i} >= K = {}", p1.comps)));
    }
    let km = p1.grid.k_floor(up_to);
    let mut worst = 0.0f64;
    for k in 0..=km {
        for (a, b) in p1.row(i, k).iter().zip(p2.row(i, k)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyDistanceResult {
    pub d: f64,
    pub sup_cdf: f64,
}

/// Lévy distance between two cumulative profiles on the same deadline grid.
///
/// Profiles are read as right-continuous step functions `F(x) = m[floor(x/dx)]`
/// (0 left of the origin, total mass right of `x_max`). For a shift `h` with
/// `q = floor(h/dx)` the worst case of `F1(x-h) - F2(x)` is `max_n m1[n-q] - m2[n]`,
/// so the infimum over `h` is an exact finite scan over `q`.
pub fn levy_distance(m1: &[f64], m2: &[f64], dx: f64) -> Result<LevyDistanceResult> {
    if m1.len() != m2.len() || m1.is_empty() {
        return Err(Error::Shape(format!("slices have lengths {} and {}", m1.len(), m2.len())));
    }
    let sup_cdf = m1.iter().zip(m2).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
    let n = m1.len();
    let mut d = sup_cdf;
    for q in 0..=n {
        let qdx = q as f64 * dx;
        if qdx >= d {
            break;
        }
        let g = shifted_gap(m1, m2, q).max(shifted_gap(m2, m1, q));
        let h = g.max(qdx);
        if h < (q + 1) as f64 * dx {
            d = d.min(h);
        }
    }
    Ok(LevyDistanceResult { d, sup_cdf })
}

/// `max_n a[n-q] - b[n]` with clamped indexing, over all integers `n`.
fn shifted_gap(a: &[f64], b: &[f64], q: usize) -> f64 {
    let n = a.len();
    let last_a = a[n - 1];
    let last_b = b[n - 1];
    let mut worst = 0.0f64;
    for m in q..n + q {
        let av = if m - q < n { a[m - q] } else { last_a };
        let bv = if m < n { b[m] } else { last_b };
        worst = worst.max(av - bv);
    }
    worst
}

/// `max |F[i][k][n_x] - F[i][l][n_x]|` over `|t_k - t_l| <= window`, `k, l <= T'/dt`.
pub fn modulus_of_continuity(path: &GriddedMeasurePath, i: usize, window: f64, up_to: f64) -> Result<f64> {
    modulus_at_level(path, i, path.grid.n_x, window, up_to)
}

/// Same as [`modulus_of_continuity`] for the level `x_j`.
pub fn modulus_at_level(path: &GriddedMeasurePath, i: usize, j: usize, window: f64, up_to: f64) -> Result<f64> {
    path.check_index(i, 0)?;
    if window < path.grid.dt() * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "window {window} is below the time step {}",
            path.grid.dt()
        )));
    }
    if j > path.grid.n_x {
        return Err(Error::Bounds(format!("deadline index {j} > n_x")));
    }
    let series = path.level(i, j);
    let km = path.grid.k_floor(up_to);
    let span = path.grid.k_floor(window);
    Ok(series_modulus(&series[..=km], span))
}

/// `max |s[k] - s[l]|` over `|k - l| <= span`.
pub fn series_modulus(s: &[f64], span: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..s.len() {
        for l in k + 1..=(k + span).min(s.len() - 1) {
            worst = worst.max((s[k] - s[l]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid() -> Grid {
        Grid::new(1.0, 1.0, 4, 4).unwrap()
    }

    #[test]
    fn zero_path_has_expected_shape() {
        let p = GriddedMeasurePath::zeros(unit_grid(), 2);
        assert_eq!(p.raw().len(), 2 * 5 * 5);
        assert_eq!(p.get(0, 4, 4), 0.0);
        assert!(p.raw().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_grid_rejected() {
        assert!(matches!(Grid::new(1.0, 1.0, 0, 4), Err(Error::Config(_))));
        assert!(matches!(Grid::new(-1.0, 1.0, 4, 4), Err(Error::Config(_))));
    }

    #[test]
    fn nodes_are_computed_fresh() {
        let g = Grid::new(3.0, 7.0, 30, 70).unwrap();
        assert_eq!(g.t(30), 3.0);
        assert_eq!(g.x(70), 7.0);
        assert_eq!(g.t(10), 1.0);
    }

    #[test]
    fn atom_has_cumulative_semantics() {
        let mut p = GriddedMeasurePath::zeros(unit_grid(), 2);
        p.add_mass(0, 0.0, 0.5, 1.0).unwrap();
        for k in 0..=4 {
            for j in 0..=4 {
                let want = if unit_grid().x(j) >= 0.5 { 1.0 } else { 0.0 };
                assert_eq!(p.get(0, k, j), want);
            }
        }
        assert_eq!(p.x_monotonicity_violation(), 0.0);
    }

    fn linear_cdf(n: usize) -> GriddedMeasurePath {
        let g = Grid::new(1.0, 1.0, 1, n).unwrap();
        let mut p = GriddedMeasurePath::zeros(g, 1);
        for k in 0..=1 {
            for j in 0..=n {
                p.set(0, k, j, g.x(j));
            }
        }
        p
    }

    #[test]
    fn interval_mass_examples() {
        let z = GriddedMeasurePath::zeros(unit_grid(), 1);
        assert_eq!(interval_mass(&z, 0, 2, 0.0, 1.0).unwrap(), 0.0);
        let p = linear_cdf(4);
        assert_eq!(interval_mass(&p, 0, 1, 0.25, 0.75).unwrap(), 0.5);
        assert_eq!(interval_mass(&p, 0, 1, 0.8, 0.2).unwrap(), 0.0);
        assert!(matches!(interval_mass(&p, 1, 0, 0.0, 1.0), Err(Error::Bounds(_))));
        assert!(matches!(interval_mass(&p, 0, 9, 0.0, 1.0), Err(Error::Bounds(_))));
    }

    #[test]
    fn interval_mass_snaps_down() {
        let p = linear_cdf(4);
        // 0.3 -> 0.25, 0.8 -> 0.75
        assert_eq!(interval_mass(&p, 0, 0, 0.3, 0.8).unwrap(), 0.5);
    }

    #[test]
    fn interval_mass_is_additive_on_dyadic_data() {
        let p = linear_cdf(8);
        let g = *p.grid();
        for a in 0..=8 {
            for b in a..=8 {
                for c in b..=8 {
                    let left = interval_mass(&p, 0, 0, g.x(a), g.x(b)).unwrap();
                    let right = cell_range_mass(&p, 0, 0, b, c);
                    let whole = interval_mass(&p, 0, 0, g.x(a), g.x(c)).unwrap();
                    assert_eq!(left + right, whole);
                }
            }
        }
    }

    #[test]
    fn sup_cdf_examples() {
        let p = linear_cdf(4);
        assert_eq!(sup_cdf_distance(&p, &p, 0, 1.0).unwrap(), 0.0);
        let mut q = p.clone();
        q.map_inplace(|v| v + 0.3);
        assert!((sup_cdf_distance(&p, &q, 0, 1.0).unwrap() - 0.3).abs() < 1e-15);
        let other = GriddedMeasurePath::zeros(Grid::new(1.0, 2.0, 4, 4).unwrap(), 1);
        assert!(matches!(sup_cdf_distance(&p, &other, 0, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn sup_cdf_between_two_uniforms() {
        // Uniform[0,1] vs Uniform[0,2], both with unit mass, on [0,2].
        let n = 2000;
        let g = Grid::new(1.0, 2.0, 1, n).unwrap();
        let mut a = GriddedMeasurePath::zeros(g, 1);
        let mut b = GriddedMeasurePath::zeros(g, 1);
        for k in 0..=1 {
            for j in 0..=n {
                let x = g.x(j);
                a.set(0, k, j, x.min(1.0));
                b.set(0, k, j, x / 2.0);
            }
        }
        // independent oracle: dense scan of the closed forms
        let oracle = (0..=200_000)
            .map(|s| {
                let x = 2.0 * s as f64 / 200_000.0;
                (x.min(1.0) - x / 2.0).abs()
            })
            .fold(0.0f64, f64::max);
        let d = sup_cdf_distance(&a, &b, 0, 1.0).unwrap();
        assert!((d - oracle).abs() < 1e-9);
        assert!((d - 0.5).abs() < 1e-12);
    }

    /// Brute-force Lévy distance: scan candidate shifts and test the defining inequalities
    /// at a dense set of points.
    fn levy_brute(m1: &[f64], m2: &[f64], dx: f64, h_step: f64) -> f64 {
        let f = |m: &[f64], x: f64| -> f64 {
            if x < 0.0 {
                0.0
            } else {
                let j = (x / dx).floor() as usize;
                m[j.min(m.len() - 1)]
            }
        };
        let n = m1.len() as i64;
        let holds = |h: f64| {
            // both sides are step functions whose pieces start at x_j, x_j + h or x_j - h
            for j in -2..=n + 2 {
                let base = j as f64 * dx;
                for p in [base, base + h, base - h] {
                    for xx in [p, p + 1e-10] {
                        let (a, b) = (f(m1, xx), f(m2, xx));
                        if f(m1, xx - h) - h > b + 1e-12 || b > f(m1, xx + h) + h + 1e-12 {
                            return false;
                        }
                        if f(m2, xx - h) - h > a + 1e-12 || a > f(m2, xx + h) + h + 1e-12 {
                            return false;
                        }
                    }
                }
            }
            true
        };
        let mut h = 0.0;
        while !holds(h) {
            h += h_step;
        }
        h
    }

    #[test]
    fn levy_identical_is_zero() {
        let m = [0.0, 0.2, 0.5, 0.9, 1.0];
        let r = levy_distance(&m, &m, 0.25).unwrap();
        assert_eq!(r.d, 0.0);
        assert_eq!(r.sup_cdf, 0.0);
    }

    #[test]
    fn levy_point_masses() {
        let dx = 0.05;
        for shift in 1..8 {
            let n = 20;
            let m1: Vec<f64> = vec![1.0; n + 1];
            let m2: Vec<f64> = (0..=n).map(|j| if j >= shift { 1.0 } else { 0.0 }).collect();
            let r = levy_distance(&m1, &m2, dx).unwrap();
            let brute = levy_brute(&m1, &m2, dx, 1e-4);
            assert!((r.d - brute).abs() <= 1.1e-4, "shift {shift}: {} vs {brute}", r.d);
            assert!((r.d - (shift as f64 * dx).min(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn levy_vertical_inflation() {
        let m1 = [0.0, 0.3, 0.6, 1.0];
        let m2: Vec<f64> = m1.iter().map(|v| v * 1.2).collect();
        let r = levy_distance(&m1, &m2, 0.1).unwrap();
        assert!(r.d <= 0.2 + 1e-15);
        assert!(r.d <= r.sup_cdf);
    }

    #[test]
    fn levy_shape_mismatch() {
        assert!(matches!(levy_distance(&[0.0, 1.0], &[0.0], 0.1), Err(Error::Shape(_))));
    }

    #[test]
    fn modulus_examples() {
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        let mut p = GriddedMeasurePath::zeros(g, 1);
        assert_eq!(modulus_of_continuity(&p, 0, 0.25, 1.0).unwrap(), 0.0);
        for k in 0..=4 {
            p.set(0, k, 2, g.t(k));
        }
        assert_eq!(modulus_of_continuity(&p, 0, 0.25, 1.0).unwrap(), 0.25);
        let mut s = GriddedMeasurePath::zeros(g, 1);
        for k in 2..=4 {
            s.set(0, k, 2, 1.0);
        }
        for w in [0.25, 0.5, 1.0] {
            assert_eq!(modulus_of_continuity(&s, 0, w, 1.0).unwrap(), 1.0);
        }
        assert!(matches!(modulus_of_continuity(&s, 0, 0.1, 1.0), Err(Error::Precondition(_))));
    }

    fn profile() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..0.3, 12).prop_map(|inc| {
            let mut acc = 0.0;
            inc.into_iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn levy_symmetric_and_dominated(a in profile(), b in profile()) {
            let r1 = levy_distance(&a, &b, 0.1).unwrap();
            let r2 = levy_distance(&b, &a, 0.1).unwrap();
            prop_assert_eq!(r1.d, r2.d);
            prop_assert!(r1.d <= r1.sup_cdf);
            prop_assert!(r1.d >= 0.0);
        }

        #[test]
        fn levy_triangle(a in profile(), b in profile(), c in profile()) {
            let dx = 0.1;
            let ab = levy_distance(&a, &b, dx).unwrap().d;
            let bc = levy_distance(&b, &c, dx).unwrap().d;
            let ac = levy_distance(&a, &c, dx).unwrap().d;
            prop_assert!(ac <= ab + bc + dx + 1e-12);
        }

        #[test]
        fn levy_matches_brute_force(a in profile(), b in profile()) {
            let dx = 0.1;
            let r = levy_distance(&a, &b, dx).unwrap();
            let brute = levy_brute(&a, &b, dx, 1e-3);
            prop_assert!((r.d - brute).abs() <= 1.1e-3, "{} vs {}", r.d, brute);
        }

        #[test]
        fn interval_mass_additive(a in profile(), s in 0usize..12, e in 0usize..12) {
            let g = Grid::new(1.0, 1.1, 1, 11).unwrap();
            let mut p = GriddedMeasurePath::zeros(g, 1);
            p.row_mut(0, 0).copy_from_slice(&a);
            let (b, c) = (s.min(e), s.max(e));
            let left = interval_mass(&p, 0, 0, 0.0, g.x(b)).unwrap();
            let right = cell_range_mass(&p, 0, 0, b, c);
            let whole = interval_mass(&p, 0, 0, 0.0, g.x(c)).unwrap();
            prop_assert!((left + right - whole).abs() <= 4.0 * f64::EPSILON * whole.max(1.0));
        }
    }
}
