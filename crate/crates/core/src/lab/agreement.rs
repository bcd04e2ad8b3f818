//! Agreement of the two hard fluid schemes (square induction and direct stepper) under grid
//! refinement.

use serde::Serialize;

use crate::error::Result;
use crate::fluid_hard::{hard_network_direct, hard_network_square_induction, HardFluidSolution};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Serialize)]
pub struct AgreementLevel {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
    pub dx: f64,
    /// Sup distance over `ξ, β^s, β^r, ρ, ι` and all nodes.
    pub gap: f64,
    pub location: String,
    /// `gap / (dt + dx)`.
    pub c_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub scenario: String,
    pub levels: Vec<AgreementLevel>,
    /// `gap(h) / gap(h/2)` for consecutive levels.
    pub ratios: Vec<f64>,
    /// All gaps at rounding level: the schemes coincide and the ratio test is vacuous.
    pub exact: bool,
    pub ratio_range: (f64, f64),
    pub pass: bool,
}

/// Sup distance between two hard solutions on the same grid, with its location.
pub fn solution_gap(a: &HardFluidSolution, b: &HardFluidSolution) -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    let fields = [("xi", &a.xi, &b.xi), ("beta_s", &a.beta_s, &b.beta_s), ("beta_r", &a.beta_r, &b.beta_r)];
    for (name, f, g) in fields {
        let gr = *f.grid();
        for i in 0..f.comps() {
            for k in 0..=gr.n_t {
                for (j, (u, v)) in f.row(i, k).iter().zip(g.row(i, k)).enumerate() {
                    let d = (u - v).abs();
                    if d > worst.0 {
                        worst = (d, format!("{name}, node {i}, t index {k}, x index {j}"));
                    }
                }
            }
        }
    }
    for (name, f, g) in [("rho", &a.rho, &b.rho), ("iota", &a.iota, &b.iota)] {
        for i in 0..f.comps() {
            for (k, (u, v)) in f.series(i).iter().zip(g.series(i)).enumerate() {
                let d = (u - v).abs();
                if d > worst.0 {
                    worst = (d, format!("{name}, node {i}, t index {k}"));
                }
            }
        }
    }
    worst
}

/// Solves with both schemes on the scenario grid and `refinements` successive halvings.
pub fn run_scheme_agreement(s: &Scenario, refinements: u32) -> Result<AgreementReport> {
    let mut levels = Vec::new();
    let mut scale = 1.0f64;
    for r in 0..=refinements {
        let sc = s.refined(r);
        let data = sc.hard_data()?;
        scale = scale.max(data.alpha.max_abs());
        let (si, _) = hard_network_square_induction(&data)?;
        let direct = hard_network_direct(&data)?;
        let (gap, location) = solution_gap(&si, &direct);
        let g = sc.grid;
        levels.push(AgreementLevel { n_t: g.n_t, n_x: g.n_x, dt: g.dt(), dx: g.dx(), gap, location, c_hat: gap / (g.dt() + g.dx()) });
    }
    let ratios: Vec<f64> = levels.windows(2).map(|w| w[0].gap / w[1].gap).collect();
    let exact = levels.iter().all(|l| l.gap <= s.tol("exact") * scale);
    let range = (s.tol("agreement_ratio_lo"), s.tol("agreement_ratio_hi"));
    let pass = exact || ratios.iter().all(|q| *q >= range.0 && *q <= range.1);
    Ok(AgreementReport { scenario: s.name.clone(), levels, ratios, exact, ratio_range: range, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn single_node_schemes_coincide() {
        let r = run_scheme_agreement(&builtin("supercritical-single").unwrap(), 1).unwrap();
        assert!(r.exact && r.pass, "{r:?}");
    }

    #[test]
    fn tandem_gap_halves() {
        let r = run_scheme_agreement(&builtin("tandem").unwrap(), 2).unwrap();
        assert!(!r.exact);
        assert!(r.pass, "{r:?}");
        assert!(r.levels[2].gap < r.levels[0].gap);
    }
}
