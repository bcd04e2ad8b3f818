use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for row sums and sign checks on user-supplied routing probabilities.
const PROB_SLACK: f64 = 1e-12;

/// Substochastic, convergent routing matrix with its reflection matrix `R = I - Pᵀ`.
#[derive(Debug, Clone, Serialize)]
pub struct RoutingMatrix {
    k: usize,
    /// Row-major `P[i][j]`: probability that a job leaving `i` joins `j`.
    p: Vec<f64>,
    /// Certified upper bound on the spectral radius of `Pᵀ`.
    pub spectral_radius_bound: f64,
    /// Row sums of `(I - Pᵀ)⁻¹`.
    inv_row_sums: Vec<f64>,
    /// `‖R‖_∞`.
    r_norm: f64,
}

impl RoutingMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Config("routing matrix needs at least one station".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::Config(format!("routing row {i} has {} entries, expected {k}", r.len())));
            }
            for (j, &v) in r.iter().enumerate() {
                if !(v >= -PROB_SLACK) || !v.is_finite() {
                    return Err(Error::Config(format!("routing entry P[{i}][{j}] = {v} is negative")));
                }
            }
            let s: f64 = r.iter().sum();
            if s > 1.0 + PROB_SLACK {
                return Err(Error::Config(format!("substochastic violated: row {i} of P sums to {s}")));
            }
        }
        let p: Vec<f64> = rows.iter().flat_map(|r| r.iter().map(|v| v.max(0.0))).collect();
        let pt = DMatrix::from_fn(k, k, |a, b| p[b * k + a]);

        let rho = certify_spectral_bound(&pt).ok_or_else(|| {
            Error::Config("routing matrix is not certifiably convergent (spectral radius >= 1)".into())
        })?;

        let r = DMatrix::<f64>::identity(k, k) - &pt;
        let inv = r
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("I - Pᵀ is singular".into()))?;
        if inv.iter().any(|v| *v < -1e-9 || !v.is_finite()) {
            return Err(Error::Config("(I - Pᵀ)⁻¹ is not nonnegative; P is not convergent".into()));
        }
        let inv_row_sums = (0..k).map(|a| (0..k).map(|b| inv[(a, b)].max(0.0)).sum()).collect();
        let r_norm = (0..k).map(|a| (0..k).map(|b| r[(a, b)].abs()).sum::<f64>()).fold(0.0, f64::max);
        Ok(Self { k, p, spectral_radius_bound: rho, inv_row_sums, r_norm })
    }

    /// `K` stations without routing.
    pub fn zero(k: usize) -> Self {
        Self::new(&vec![vec![0.0; k]; k]).expect("zero routing is convergent")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.k + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.k).map(|c| c.to_vec()).collect()
    }

    /// Exit probability `1 - Σ_j P_ij`.
    pub fn exit_prob(&self, i: usize) -> f64 {
        (1.0 - (0..self.k).map(|j| self.p(i, j)).sum::<f64>()).max(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.p.iter().all(|&v| v == 0.0)
    }

    /// `R = I - Pᵀ` entry.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        (if i == j { 1.0 } else { 0.0 }) - self.p(j, i)
    }

    /// `(Pᵀ v)_i = Σ_j P_ji v_j`.
    #[inline]
    pub fn pt_apply(&self, v: &[f64], i: usize) -> f64 {
        let mut s = 0.0;
        for j in 0..self.k {
            s += self.p[j * self.k + i] * v[j];
        }
        s
    }

    /// `(R v)_i`.
    pub fn r_apply(&self, v: &[f64], i: usize) -> f64 {
        v[i] - self.pt_apply(v, i)
    }

    pub fn r_norm(&self) -> f64 {
        self.r_norm
    }

    pub fn inv_row_sums(&self) -> &[f64] {
        &self.inv_row_sums
    }

    /// Lipschitz bound of the reflection map in the sup norm:
    /// `‖Δy‖ ≤ ‖(I-Pᵀ)⁻¹‖_∞ ‖Δu‖` and `‖Δz‖ ≤ ‖Δu‖ + ‖R‖_∞ ‖Δy‖`.
    pub fn lipschitz_bound(&self) -> f64 {
        let inv = self.inv_row_sums.iter().cloned().fold(0.0, f64::max);
        (1.0 + self.r_norm * inv).max(inv)
    }

    /// Iteration budget `10 ⌈log tol / log ρ̂⌉`, with `ρ̂` floored so nilpotent routing still
    /// gets a finite count, plus `K + 10` sweeps of slack.
    pub fn iteration_budget(&self, tol: f64) -> usize {
        let rho = self.spectral_radius_bound.clamp(0.01, 1.0 - 1e-12);
        let n = (tol.ln() / rho.ln()).ceil().max(1.0) as usize;
        10 * n + self.k + 10
    }
}

/// Upper bound on ρ(A) from Gelfand's formula: `ρ(A) ≤ ‖Aⁿ‖^{1/n}` for every `n`.
/// Tries small powers, then repeated squaring. Returns `None` if no bound below 1 is found.
fn certify_spectral_bound(a: &DMatrix<f64>) -> Option<f64> {
    let norm = |m: &DMatrix<f64>| -> f64 {
        (0..m.nrows()).map(|r| m.row(r).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    };
    let mut best = f64::INFINITY;
    let mut pw = a.clone();
    for n in 1..=16u32 {
        let nm = norm(&pw);
        if nm == 0.0 {
            return Some(0.0);
        }
        best = best.min(nm.powf(1.0 / n as f64));
        pw = &pw * a;
    }
    if best < 1.0 - 1e-9 {
        return Some(best);
    }
    let mut sq = a.clone();
    let mut e = 1.0f64;
    for _ in 0..40 {
        sq = &sq * &sq;
        e *= 2.0;
        let nm = norm(&sq);
        if nm == 0.0 {
            return Some(0.0);
        }
        let b = nm.powf(1.0 / e);
        best = best.min(b);
        if best < 1.0 - 1e-9 {
            return Some(best);
        }
        if !nm.is_finite() {
            break;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_superstochastic_rows() {
        let e = RoutingMatrix::new(&[vec![0.6, 0.6], vec![0.0, 0.0]]).unwrap_err();
        assert!(e.to_string().contains("substochastic violated"));
    }

    #[test]
    fn rejects_stochastic_closed_loop() {
        let e = RoutingMatrix::new(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(RoutingMatrix::new(&[vec![-0.1]]).is_err());
    }

    #[test]
    fn zero_matrix_bounds() {
        let r = RoutingMatrix::zero(3);
        assert_eq!(r.spectral_radius_bound, 0.0);
        assert_eq!(r.lipschitz_bound(), 2.0);
        assert!(r.is_zero());
    }

    #[test]
    fn spectral_bound_dominates_true_radius() {
        // symmetric 2x2 with eigenvalues ±0.9 exactly
        let r = RoutingMatrix::new(&[vec![0.0, 0.9], vec![0.9, 0.0]]).unwrap();
        assert!(r.spectral_radius_bound >= 0.9 - 1e-12);
        assert!(r.spectral_radius_bound < 1.0);
        // (I - Pᵀ)⁻¹ row sums = 1/(1-0.9) = 10
        for s in r.inv_row_sums() {
            assert!((s - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tandem_is_nilpotent() {
        let r = RoutingMatrix::new(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(r.spectral_radius_bound, 0.0);
        assert_eq!(r.r(1, 0), -1.0);
        assert_eq!(r.pt_apply(&[2.0, 5.0], 1), 2.0);
        assert_eq!(r.exit_prob(0), 0.0);
        assert_eq!(r.exit_prob(1), 1.0);
    }
}
