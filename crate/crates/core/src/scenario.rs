//! Scenario files: a TOML document holding the network primitives, the grid, simulation
//! settings and experiment parameters, validated as a whole at load time.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid_hard::eps_cells;
use crate::measure_paths::Grid;
use crate::model::{ArrivalSpec, InitialSegment, NetworkSpec, PiecewiseConstant, ServiceDist};
use crate::skorokhod::RoutingMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub network: NetworkSection,
    pub arrivals: Vec<ArrivalSpec>,
    pub capacity: Vec<CapacitySection>,
    #[serde(default)]
    pub initial_condition: Vec<InitialSection>,
    pub grid: GridSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default)]
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub m: PiecewiseConstant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub profile: Vec<InitialSegment>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub n_t: usize,
    pub n_x: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServiceSpec {
    Shared(ServiceDist),
    PerNode(Vec<ServiceDist>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_service")]
    pub service: ServiceSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_service() -> ServiceSpec {
    ServiceSpec::Shared(ServiceDist::Uniform { c: 0.5 })
}

fn default_seed() -> u64 {
    1
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { service: default_service(), seed: default_seed() }
    }
}

/// Experiment parameters. Unknown tolerance keys are rejected when they are used.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub n_list: Vec<u64>,
    pub reps: usize,
    pub martingale_n: u64,
    pub martingale_reps: usize,
    pub fisfo_n: u64,
    /// Window lengths for the tightness chain.
    pub deltas: Vec<f64>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            n_list: vec![10, 100, 1000],
            reps: 20,
            martingale_n: 100,
            martingale_reps: 200,
            fisfo_n: 50,
            deltas: vec![0.1, 0.25, 0.5, 1.0],
            tolerances: BTreeMap::new(),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: NetworkSpec,
    pub grid: Grid,
    pub services: Vec<ServiceDist>,
    pub seed: u64,
    pub experiment: Experiment,
}

/// Default tolerances; `--tol-overrides` and the scenario's `tolerances` table replace them.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("invariants", 1e-8),
    ("vmvsp", 1e-6),
    ("agreement_ratio_lo", 2.0 / 3.0),
    ("agreement_ratio_hi", 6.0),
    ("exact", 1e-12),
    ("bias_factor", 3.0),
    ("martingale_constant", 41.0),
    ("z_score", 1.96),
];

impl Scenario {
    pub fn from_file(f: ScenarioFile) -> Result<Self> {
        let k = f.network.k;
        if f.network.p.len() != k {
            return Err(Error::Config(format!("network.K = {k} but P has {} rows", f.network.p.len())));
        }
        let routing = RoutingMatrix::new(&f.network.p)?;
        if f.arrivals.len() != k || f.capacity.len() != k {
            return Err(Error::Config(format!(
                "network.K = {k} but there are {} [[arrivals]] and {} [[capacity]] tables",
                f.arrivals.len(),
                f.capacity.len()
            )));
        }
        let initial = match f.initial_condition.len() {
            0 => vec![vec![]; k],
            n if n == k => f.initial_condition.into_iter().map(|s| s.profile).collect(),
            n => return Err(Error::Config(format!("network.K = {k} but there are {n} [[initial_condition]] tables"))),
        };
        let spec = NetworkSpec {
            routing,
            eps: f.network.eps,
            arrivals: f.arrivals,
            capacity: f.capacity.into_iter().map(|c| c.m).collect(),
            initial,
        };
        let grid = Grid::new(f.grid.t, f.grid.x, f.grid.n_t, f.grid.n_x)?;
        spec.validate(grid.t_max)?;
        eps_cells(spec.eps, &grid)?;
        spec.alpha_field(&grid).map_err(|e| Error::Config(e.to_string()))?;
        let services = match f.simulation.service {
            ServiceSpec::Shared(s) => vec![s; k],
            ServiceSpec::PerNode(v) if v.len() == k => v,
            ServiceSpec::PerNode(v) => {
                return Err(Error::Config(format!("network.K = {k} but {} service distributions are given", v.len())))
            }
        };
        for s in &services {
            s.validate()?;
        }
        let ex = &f.experiment;
        if ex.n_list.iter().any(|&n| n == 0) || ex.reps == 0 || ex.martingale_reps == 0 {
            return Err(Error::Config("experiment scales and replication counts must be positive".into()));
        }
        if ex.deltas.iter().any(|&d| !(d > 0.0 && d <= grid.t_max)) {
            return Err(Error::Config(format!("experiment.deltas must lie in (0, T = {}]", grid.t_max)));
        }
        for key in ex.tolerances.keys() {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!("unknown tolerance key {key:?}")));
            }
        }
        Ok(Self {
            name: f.name.unwrap_or_else(|| "unnamed".into()),
            spec,
            grid,
            services,
            seed: f.simulation.seed,
            experiment: f.experiment,
        })
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(f)
    }

    /// Tolerance by key, honouring the scenario's overrides.
    pub fn tol(&self, key: &str) -> f64 {
        if let Some(v) = self.experiment.tolerances.get(key) {
            return *v;
        }
        DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == key).map(|p| p.1).unwrap_or_else(|| panic!("no tolerance {key:?}"))
    }

    /// Applies `key=val` overrides.
    pub fn override_tolerances(&mut self, pairs: &[(String, f64)]) -> Result<()> {
        for (k, v) in pairs {
            if !DEFAULT_TOLERANCES.iter().any(|(d, _)| d == k) {
                return Err(Error::Config(format!("unknown tolerance key {k:?}")));
            }
            self.experiment.tolerances.insert(k.clone(), *v);
        }
        Ok(())
    }

    /// The same scenario with both grid steps halved `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        Self { grid: self.grid.refined(levels), ..self.clone() }
    }

    /// Hard fluid data on the scenario grid.
    pub fn hard_data(&self) -> Result<crate::fluid_hard::HardFluidData> {
        crate::fluid_hard::HardFluidData::from_spec(&self.spec, &self.grid)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario(&src, &path.display().to_string())
}

/// Parses and validates scenario text; `origin` prefixes error messages.
pub fn parse_scenario(src: &str, origin: &str) -> Result<Scenario> {
    let f: ScenarioFile = toml::from_str(src).map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
    Scenario::from_file(f).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{origin}: {m}")),
        other => other,
    })
}

const BUILTIN: &[(&str, &str)] = &[
    ("zero-arrivals", include_str!("../scenarios/zero-arrivals.toml")),
    ("subcritical-single", include_str!("../scenarios/subcritical-single.toml")),
    ("supercritical-single", include_str!("../scenarios/supercritical-single.toml")),
    ("tandem", include_str!("../scenarios/tandem.toml")),
    ("feedback3", include_str!("../scenarios/feedback3.toml")),
    ("fair-coin", include_str!("../scenarios/fair-coin.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|b| b.0)
}

/// Source text of a shipped scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|b| b.0 == name).map(|b| b.1)
}

/// One of the scenarios shipped in `scenarios/`.
pub fn builtin(name: &str) -> Result<Scenario> {
    let src = builtin_source(name).ok_or_else(|| Error::Config(format!("no built-in scenario {name:?}")))?;
    Scenario::from_toml_str(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[network]
K = 1
P = [[0.0]]

[[arrivals]]
rate = [[0.0, 1.0]]
lead = { kind = "uniform", lo = 0.5, hi = 1.0 }

[[capacity]]
m = [[0.0, 1.0]]

[grid]
T = 1.0
X = 3.0
n_t = 10
n_x = 30
"#;

    #[test]
    fn minimal_single_node_loads() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.spec.k(), 1);
        assert_eq!(s.services.len(), 1);
        assert_eq!(s.experiment.n_list, vec![10, 100, 1000]);
        assert_eq!(s.tol("invariants"), 1e-8);
    }

    #[test]
    fn all_builtins_load() {
        for name in builtin_names() {
            let s = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn row_sum_above_one_is_rejected() {
        let src = MINIMAL.replace("K = 1\nP = [[0.0]]", "K = 2\nP = [[0.0, 1.2], [0.0, 0.0]]");
        let e = Scenario::from_toml_str(&src).unwrap_err();
        assert!(e.to_string().contains("substochastic violated"), "{e}");
        assert!(e.is_config());
    }

    #[test]
    fn misaligned_eps_suggests_grid_value() {
        let src = MINIMAL.replace("P = [[0.0]]", "P = [[0.0]]\neps = 0.26");
        let e = Scenario::from_toml_str(&src).unwrap_err().to_string();
        assert!(e.contains("nearest grid-aligned eps is 0.3"), "{e}");
    }

    #[test]
    fn zero_capacity_names_the_assumption() {
        let src = MINIMAL.replace("m = [[0.0, 1.0]]", "m = [[0.0, 0.0]]");
        let e = Scenario::from_toml_str(&src).unwrap_err().to_string();
        assert!(e.contains("m must be strictly positive"), "{e}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let src = MINIMAL.replace("n_x = 30", "n_x = thirty");
        let e = Scenario::from_toml_str(&src).unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
        assert!(e.to_string().contains("line 17"), "{e}");
    }

    #[test]
    fn unknown_tolerance_key_is_rejected() {
        let src = format!("{MINIMAL}\n[experiment]\ntolerances = {{ nonsense = 1.0 }}\n");
        assert!(Scenario::from_toml_str(&src).is_err());
        let mut s = Scenario::from_toml_str(MINIMAL).unwrap();
        s.override_tolerances(&[("invariants".into(), 1e-6)]).unwrap();
        assert_eq!(s.tol("invariants"), 1e-6);
        assert!(s.override_tolerances(&[("bogus".into(), 1.0)]).is_err());
    }
}
