use super::{assemble, HardFluidData, HardFluidSolution, NodeSolution, NodeState};
use crate::error::{Error, Result};
use crate::measure_paths::{GriddedMeasurePath, VecPath};
use crate::skorokhod::RoutingMatrix;

/// Solves one node fed by the cumulative input `input[k][j]` (exogenous plus routed) with
/// cumulative capacity `mu`. `r = dt / dx`.
pub(crate) fn solve_node(input: &GriddedMeasurePath, comp: usize, mu: &[f64], r: usize) -> NodeSolution {
    let g = *input.grid();
    let nx = g.n_x + 1;
    let mut st = NodeState::new(input.row(comp, 0));
    let mut xi = GriddedMeasurePath::zeros(g, 1);
    let mut beta_s = GriddedMeasurePath::zeros(g, 1);
    let mut beta_r = GriddedMeasurePath::zeros(g, 1);
    let mut rho = vec![0.0; g.n_t + 1];
    let mut iota = vec![0.0; g.n_t + 1];
    let mut sigma = vec![0.0; g.n_t + 1];
    xi.row_mut(0, 0).copy_from_slice(&st.q);
    sigma[0] = st.sigma(&g);

    let mut inc = vec![0.0; nx];
    let mut served = vec![0.0; nx];
    for k in 0..g.n_t {
        let (a0, a1) = (input.row(comp, k), input.row(comp, k + 1));
        for j in 0..nx {
            inc[j] = a1[j] - a0[j];
        }
        st.serve(&inc, mu[k + 1] - mu[k], &mut served);
        st.renege((k + 1) * r);
        xi.row_mut(0, k + 1).copy_from_slice(&st.q);
        beta_s.row_mut(0, k + 1).copy_from_slice(&st.bs);
        beta_r.row_mut(0, k + 1).copy_from_slice(&st.br);
        rho[k + 1] = st.rho;
        iota[k + 1] = st.iota;
        sigma[k + 1] = st.sigma(&g);
    }
    NodeSolution { xi, beta_s, beta_r, rho, iota, sigma }
}

/// Single-node hard-EDF fluid solution (reneging at the deadline, EDF service).
///
/// `alpha` must have one component; `eps` only labels the departure process `γ`.
pub fn hard_single_node(alpha: &GriddedMeasurePath, mu: &VecPath, eps: f64) -> Result<HardFluidSolution> {
    if alpha.comps() != 1 || mu.comps() != 1 {
        return Err(Error::Shape("single-node solver takes one component".into()));
    }
    let data = HardFluidData { alpha: alpha.clone(), mu: mu.clone(), routing: RoutingMatrix::zero(1), eps };
    let hg = data.hard_grid()?;
    let node = solve_node(alpha, 0, mu.series(0), hg.r);
    assemble(vec![node], hg.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_paths::Grid;
    use crate::model::{ArrivalSpec, LeadDist, NetworkSpec, PiecewiseConstant};

    fn spec(rate: f64, lead: LeadDist, m: f64) -> NetworkSpec {
        NetworkSpec {
            routing: RoutingMatrix::zero(1),
            eps: 0.1,
            arrivals: vec![ArrivalSpec { rate: PiecewiseConstant::constant(rate), lead }],
            capacity: vec![PiecewiseConstant::constant(m)],
            initial: vec![vec![]],
        }
    }

    #[test]
    fn zero_arrivals_only_idle() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let s = spec(0.0, LeadDist::Uniform { lo: 0.5, hi: 1.0 }, 1.0);
        let d = HardFluidData::from_spec(&s, &g).unwrap();
        let sol = hard_single_node(&d.alpha, &d.mu, 0.1).unwrap();
        assert_eq!(sol.xi.max_abs(), 0.0);
        assert_eq!(sol.beta.max_abs(), 0.0);
        assert_eq!(sol.rho.max_abs(), 0.0);
        for k in 0..=g.n_t {
            assert!((sol.iota.get(0, k) - d.mu.get(0, k)).abs() < 1e-14);
        }
    }

    #[test]
    fn subcritical_never_reneges() {
        let g = Grid::new(2.0, 4.0, 40, 80).unwrap();
        let s = spec(0.7, LeadDist::Uniform { lo: 0.5, hi: 1.0 }, 1.0);
        let d = HardFluidData::from_spec(&s, &g).unwrap();
        let sol = hard_single_node(&d.alpha, &d.mu, 0.1).unwrap();
        assert_eq!(sol.rho.max_abs(), 0.0);
        for k in 0..=g.n_t {
            // all arrivals of the step are served within the step
            assert!(sol.xi.total(0, k) < 1e-12);
            assert!((sol.iota.get(0, k) - 0.3 * g.t(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn supercritical_reneging_rate() {
        // λ = 2 > m = 1, leads uniform on [0, 1]: excess mass reneges at rate λ − m
        let g = Grid::new(4.0, 8.0, 400, 800).unwrap();
        let s = spec(2.0, LeadDist::Uniform { lo: 0.0, hi: 1.0 }, 1.0);
        let d = HardFluidData::from_spec(&s, &g).unwrap();
        let sol = hard_single_node(&d.alpha, &d.mu, 0.1).unwrap();
        let k0 = 300;
        let slope = (sol.rho.get(0, 400) - sol.rho.get(0, k0)) / (g.t(400) - g.t(k0));
        assert!((slope - 1.0).abs() <= 0.02 * 1.0, "slope {slope}");
        // fine-grid oracle: mass balance α = ξ + β^s + β^r on totals
        for k in 0..=g.n_t {
            let lhs = d.alpha.total(0, k);
            let rhs = sol.xi.total(0, k) + sol.beta_s.total(0, k) + sol.beta_r.total(0, k);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
