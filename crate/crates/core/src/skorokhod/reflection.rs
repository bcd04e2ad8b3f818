//! The Skorokhod map on the half line and oblique reflection in the orthant.
//!
//! Paths are sampled on a time grid and stored per component: `u[i][k] = u^i(t_k)`.

use serde::Serialize;

use super::routing::RoutingMatrix;
use crate::error::{Error, Result};
use crate::Verdict;

/// Default sup-norm tolerance of the fixed-point iteration.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Half-line Skorokhod map: `y_k = max_{l≤k} max(0, -u_l)`, `z = u + y`.
pub fn sm1d(u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    match u.first() {
        None => return Err(Error::Precondition("empty path".into())),
        Some(&u0) if u0 < 0.0 => {
            return Err(Error::Precondition(format!("sm1d needs u(0) >= 0, got {u0}")));
        }
        _ => {}
    }
    let mut y = Vec::with_capacity(u.len());
    let mut z = Vec::with_capacity(u.len());
    let mut run = 0.0f64;
    for &v in u {
        run = run.max(-v);
        y.push(run);
        // v + run computed as run - (-v) so a touch of the boundary is exactly zero
        z.push(run - (-v));
    }
    Ok((z, y))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthantReflection {
    pub z: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// Largest complementarity sum `Σ_k z^i(t_k) Δy^i(t_k)` over components.
    pub residual: f64,
    /// Per-component complementarity sums.
    pub complementarity: Vec<f64>,
    /// `max |z - u - R y|`.
    pub balance_residual: f64,
    pub iterations: usize,
    /// Whether the iteration stopped at an exact floating-point fixed point.
    pub exact_fixed_point: bool,
}

/// `tol_comp = 1e-8 · max(1, Σ_i ‖u^i‖_∞)`.
pub fn complementarity_tolerance(u: &[Vec<f64>]) -> f64 {
    1e-8 * u.iter().map(|s| sup_norm(s)).sum::<f64>().max(1.0)
}

fn sup_norm(s: &[f64]) -> f64 {
    s.iter().fold(0.0f64, |w, v| w.max(v.abs()))
}

fn check_input(u: &[Vec<f64>], rm: &RoutingMatrix) -> Result<usize> {
    if u.len() != rm.k() {
        return Err(Error::Shape(format!("input has {} components, routing has {}", u.len(), rm.k())));
    }
    let n = u[0].len();
    if n == 0 || u.iter().any(|s| s.len() != n) {
        return Err(Error::Shape("components have different or zero lengths".into()));
    }
    for (i, s) in u.iter().enumerate() {
        if s[0] < 0.0 {
            return Err(Error::Precondition(format!("reflection needs u^{i}(0) >= 0, got {}", s[0])));
        }
    }
    Ok(n)
}

/// Oblique reflection `Γ(u) = (z, y)` with `z = u + R y`, `R = I - Pᵀ`.
///
/// Picard iteration `y ↦ runmax(max(0, Pᵀy - u))` from `y ≡ 0`. The iterates are
/// nondecreasing, also in floating point (every operation is monotone), so the loop runs
/// until an exact fixed point; if the budget runs out first the last sup-change must be
/// below `tol · max(1, ‖u‖)`.
pub fn ormt(u: &[Vec<f64>], rm: &RoutingMatrix, tol: f64, max_iter: Option<usize>) -> Result<OrthantReflection> {
    let n = check_input(u, rm)?;
    let k = rm.k();
    let budget = max_iter.unwrap_or_else(|| rm.iteration_budget(tol));
    let scale = u.iter().map(|s| sup_norm(s)).fold(1.0, f64::max);

    let mut y = vec![vec![0.0f64; n]; k];
    let mut next = y.clone();
    let mut col = vec![0.0f64; k];
    let mut iterations = 0;
    let mut exact = false;
    let mut change = f64::INFINITY;
    while iterations < budget {
        iterations += 1;
        let mut run = vec![0.0f64; k];
        for t in 0..n {
            for j in 0..k {
                col[j] = y[j][t];
            }
            for i in 0..k {
                let w = rm.pt_apply(&col, i) - u[i][t];
                run[i] = run[i].max(w);
                next[i][t] = run[i];
            }
        }
        change = 0.0;
        for i in 0..k {
            for t in 0..n {
                change = change.max(next[i][t] - y[i][t]);
            }
        }
        std::mem::swap(&mut y, &mut next);
        if change == 0.0 {
            exact = true;
            break;
        }
    }
    if !exact && change > tol * scale {
        return Err(Error::NonConvergence { iterations, residual: change });
    }

    // z = y - (Pᵀy - u): same expression as the iteration, so z >= 0 at a fixed point and
    // z = 0 exactly wherever y was pushed.
    let mut z = vec![vec![0.0f64; n]; k];
    let mut balance = 0.0f64;
    for t in 0..n {
        for j in 0..k {
            col[j] = y[j][t];
        }
        for i in 0..k {
            let w = rm.pt_apply(&col, i) - u[i][t];
            z[i][t] = y[i][t] - w;
            let direct = u[i][t] + rm.r_apply(&col, i);
            balance = balance.max((z[i][t] - direct).abs());
        }
    }
    let complementarity: Vec<f64> = (0..k).map(|i| complementarity_sum(&z[i], &y[i])).collect();
    let residual = complementarity.iter().cloned().fold(0.0, f64::max);
    Ok(OrthantReflection { z, y, residual, complementarity, balance_residual: balance, iterations, exact_fixed_point: exact })
}

/// `Σ_k z(t_k) Δy(t_k)` with `Δy(t_0) = y(t_0)`.
pub fn complementarity_sum(z: &[f64], y: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut s = 0.0;
    for (zv, yv) in z.iter().zip(y) {
        s += zv.abs() * (yv - prev).abs();
        prev = *yv;
    }
    s
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// `max(‖Γ₁u₁ − Γ₁u₂‖, ‖Γ₂u₁ − Γ₂u₂‖) / ‖u₁ − u₂‖`.
pub fn ormt_lipschitz_check(u1: &[Vec<f64>], u2: &[Vec<f64>], rm: &RoutingMatrix) -> Result<f64> {
    let du = sup_diff(u1, u2);
    if du == 0.0 {
        return Err(Error::Undefined("Lipschitz ratio of identical inputs".into()));
    }
    let a = ormt(u1, rm, DEFAULT_TOL, None)?;
    let b = ormt(u2, rm, DEFAULT_TOL, None)?;
    Ok(sup_diff(&a.z, &b.z).max(sup_diff(&a.y, &b.y)) / du)
}

/// For `u₂ − u₁` nonnegative and nondecreasing: `z₂ ≥ z₁` and `y₁ − y₂` nondecreasing.
pub fn ormt_monotonicity_check(u1: &[Vec<f64>], u2: &[Vec<f64>], rm: &RoutingMatrix) -> Result<Verdict> {
    let scale = u1.iter().chain(u2).map(|s| sup_norm(s)).fold(1.0, f64::max);
    let slack = 1e-12 * scale;
    for (i, (a, b)) in u1.iter().zip(u2).enumerate() {
        let mut prev = 0.0;
        for (t, (p, q)) in a.iter().zip(b).enumerate() {
            let d = q - p;
            if d < prev - slack || d < -slack {
                return Err(Error::Precondition(format!(
                    "u2 - u1 is not nonnegative nondecreasing (component {i}, node {t})"
                )));
            }
            prev = prev.max(d);
        }
    }
    let a = ormt(u1, rm, DEFAULT_TOL, None)?;
    let b = ormt(u2, rm, DEFAULT_TOL, None)?;
    let tol = 1e-9 * scale;
    let mut v = Verdict::pass();
    for i in 0..rm.k() {
        let mut prev = 0.0;
        for t in 0..a.z[i].len() {
            v.record(a.z[i][t] - b.z[i][t], tol, || format!("z order, component {i}, node {t}"));
            let d = a.y[i][t] - b.y[i][t];
            if t > 0 {
                v.record(prev - d, tol, || format!("y1 - y2 decrease, component {i}, node {t}"));
            }
            prev = d;
        }
    }
    Ok(v)
}

/// For `u₁ = u₂` on the first `n_agree` nodes, the outputs agree there.
pub fn ormt_nonanticipation_check(u1: &[Vec<f64>], u2: &[Vec<f64>], rm: &RoutingMatrix, n_agree: usize) -> Result<Verdict> {
    for (i, (a, b)) in u1.iter().zip(u2).enumerate() {
        if a.len() < n_agree || b.len() < n_agree || a[..n_agree] != b[..n_agree] {
            return Err(Error::Precondition(format!("inputs differ on the agreement prefix (component {i})")));
        }
    }
    if n_agree == 0 {
        return Ok(Verdict::pass());
    }
    let a = ormt(u1, rm, DEFAULT_TOL, None)?;
    let b = ormt(u2, rm, DEFAULT_TOL, None)?;
    let scale = u1.iter().chain(u2).map(|s| sup_norm(s)).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut v = Verdict::pass();
    for i in 0..rm.k() {
        for t in 0..n_agree {
            v.record((a.z[i][t] - b.z[i][t]).abs(), tol, || format!("z, component {i}, node {t}"));
            v.record((a.y[i][t] - b.y[i][t]).abs(), tol, || format!("y, component {i}, node {t}"));
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=n).map(|k| f(k as f64 / n as f64)).collect()
    }

    #[test]
    fn sm1d_examples() {
        let n = 1000;
        let (z, y) = sm1d(&ramp(n, |t| t)).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        assert_eq!(z, ramp(n, |t| t));

        let (z, y) = sm1d(&ramp(n, |t| -t)).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert_eq!(y, ramp(n, |t| t));

        let (z, y) = sm1d(&ramp(n, |t| 1.0 - 2.0 * t)).unwrap();
        for k in 0..=n {
            let t = k as f64 / n as f64;
            assert!((y[k] - (2.0 * t - 1.0).max(0.0)).abs() < 1e-12);
            assert!((z[k] - (1.0 - 2.0 * t).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sm1d_rejects_negative_start() {
        assert!(matches!(sm1d(&[-1.0, 0.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn ormt_zero_input() {
        let rm = RoutingMatrix::new(&[vec![0.0, 0.3], vec![0.2, 0.0]]).unwrap();
        let u = vec![vec![0.0; 11]; 2];
        let r = ormt(&u, &rm, DEFAULT_TOL, None).unwrap();
        assert!(r.z.iter().flatten().all(|&v| v == 0.0));
        assert!(r.y.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn ormt_decouples_without_routing() {
        let rm = RoutingMatrix::zero(2);
        let u = vec![ramp(100, |t| (6.0 * t).sin() * 0.5 + 0.1), ramp(100, |t| 0.2 - t)];
        let r = ormt(&u, &rm, DEFAULT_TOL, None).unwrap();
        for i in 0..2 {
            let (z, y) = sm1d(&u[i]).unwrap();
            assert_eq!(r.z[i], z);
            assert_eq!(r.y[i], y);
        }
    }

    #[test]
    fn ormt_feedback_example_against_hand_composition() {
        // P12 = 0.5: node 1 is pushed by y1(t) = t, and R = I - Pᵀ feeds -0.5·y1 into node 2.
        let rm = RoutingMatrix::new(&[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap();
        let n = 2000;
        let u = vec![ramp(n, |t| -t), ramp(n, |t| t)];
        let r = ormt(&u, &rm, DEFAULT_TOL, None).unwrap();
        // hand composition: y1 = runmax(-u1) = t; u2 - 0.5 y1 = 0.5 t >= 0 so y2 = 0
        let (z1, y1) = sm1d(&u[0]).unwrap();
        let v2: Vec<f64> = (0..=n).map(|k| u[1][k] - 0.5 * y1[k]).collect();
        let (z2, y2) = sm1d(&v2).unwrap();
        for k in 0..=n {
            assert!((r.z[0][k] - z1[k]).abs() < 1e-14);
            assert!((r.y[0][k] - y1[k]).abs() < 1e-14);
            assert!((r.z[1][k] - z2[k]).abs() < 1e-14);
            assert!((r.y[1][k] - y2[k]).abs() < 1e-14);
            let t = k as f64 / n as f64;
            assert!((r.z[1][k] - 0.5 * t).abs() < 1e-14);
        }
    }

    #[test]
    fn lipschitz_rejects_identical_inputs() {
        let rm = RoutingMatrix::zero(1);
        let u = vec![ramp(10, |t| t)];
        assert!(matches!(ormt_lipschitz_check(&u, &u, &rm), Err(Error::Undefined(_))));
    }

    #[test]
    fn lipschitz_constant_shift() {
        let rm = RoutingMatrix::new(&[vec![0.0, 0.6], vec![0.3, 0.2]]).unwrap();
        let u1 = vec![ramp(200, |t| 0.3 - t), ramp(200, |t| (9.0 * t).cos() * 0.4 + 0.4)];
        let u2: Vec<Vec<f64>> = u1.iter().enumerate().map(|(i, s)| s.iter().map(|v| v + 0.1 * (i + 1) as f64).collect()).collect();
        let ratio = ormt_lipschitz_check(&u1, &u2, &rm).unwrap();
        assert!(ratio <= rm.lipschitz_bound(), "{ratio} > {}", rm.lipschitz_bound());
    }

    #[test]
    fn monotonicity_examples() {
        let rm = RoutingMatrix::new(&[vec![0.0, 0.5], vec![0.4, 0.0]]).unwrap();
        let u1 = vec![ramp(100, |t| 0.1 - t), ramp(100, |t| 0.5 * t - 0.2 * t * t)];
        assert!(ormt_monotonicity_check(&u1, &u1, &rm).unwrap().pass);
        let u2: Vec<Vec<f64>> = u1.iter().map(|s| s.iter().enumerate().map(|(k, v)| v + k as f64 / 100.0).collect()).collect();
        assert!(ormt_monotonicity_check(&u1, &u2, &rm).unwrap().pass);
        // reversed roles violate the precondition
        assert!(matches!(ormt_monotonicity_check(&u2, &u1, &rm), Err(Error::Precondition(_))));
    }

    #[test]
    fn nonanticipation_examples() {
        let rm = RoutingMatrix::new(&[vec![0.0, 0.5], vec![0.4, 0.0]]).unwrap();
        let u1 = vec![ramp(100, |t| 0.1 - t), ramp(100, |t| 0.3 * t)];
        let mut u2 = u1.clone();
        for k in 51..=100 {
            u2[0][k] += 5.0;
            u2[1][k] -= 3.0;
        }
        assert!(ormt_nonanticipation_check(&u1, &u1, &rm, 101).unwrap().pass);
        assert!(ormt_nonanticipation_check(&u1, &u2, &rm, 51).unwrap().pass);
        let mut u3 = u1.clone();
        u3[0][0] += 1.0;
        assert!(ormt_nonanticipation_check(&u1, &u3, &rm, 0).unwrap().pass);
        assert!(ormt_nonanticipation_check(&u1, &u3, &rm, 1).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let rm = RoutingMatrix::new(&[vec![0.0, 0.9], vec![0.9, 0.0]]).unwrap();
        let u = vec![ramp(50, |t| -t), ramp(50, |t| -t)];
        let e = ormt(&u, &rm, 1e-300, Some(2)).unwrap_err();
        assert!(matches!(e, Error::NonConvergence { iterations: 2, .. }));
    }

    fn kpath() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 40), 3).prop_map(|incs| {
            incs.into_iter()
                .map(|inc| {
                    let mut acc = 0.0;
                    inc.into_iter()
                        .enumerate()
                        .map(|(k, d)| {
                            if k > 0 {
                                acc += d;
                            } else {
                                acc = d.abs();
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn ormt_invariants(u in kpath(), a in 0.0f64..0.45, b in 0.0f64..0.45, c in 0.0f64..0.45) {
            let rm = RoutingMatrix::new(&[vec![0.0, a, b], vec![c, 0.0, a], vec![b, c, 0.1]]).unwrap();
            let r = ormt(&u, &rm, DEFAULT_TOL, None).unwrap();
            let tol = complementarity_tolerance(&u);
            prop_assert!(r.residual <= tol);
            prop_assert!(r.balance_residual <= 1e-12 * 40.0);
            for i in 0..3 {
                prop_assert!(r.z[i].iter().all(|&v| v >= 0.0));
                prop_assert!(r.y[i].windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(r.y[i][0] >= 0.0);
            }
        }

        #[test]
        fn ormt_positive_homogeneity(u in kpath(), c in 0.1f64..10.0) {
            let rm = RoutingMatrix::new(&[vec![0.0, 0.5, 0.0], vec![0.0, 0.0, 0.5], vec![0.25, 0.0, 0.0]]).unwrap();
            let a = ormt(&u, &rm, DEFAULT_TOL, None).unwrap();
            let cu: Vec<Vec<f64>> = u.iter().map(|s| s.iter().map(|v| c * v).collect()).collect();
            let b = ormt(&cu, &rm, DEFAULT_TOL, None).unwrap();
            let scale = c * u.iter().flatten().fold(1.0f64, |w, v| w.max(v.abs()));
            for i in 0..3 {
                for t in 0..u[i].len() {
                    prop_assert!((b.z[i][t] - c * a.z[i][t]).abs() <= 1e-12 * scale);
                    prop_assert!((b.y[i][t] - c * a.y[i][t]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
