//! Command-line surface.
//!
//! Every run directory gets `meta.json` (what produced it) and `scenario.toml` (the exact
//! scenario text), so `validate` can rebuild the primitives without the original file.
//! Exit codes: 0 success, 1 a check failed, 2 bad input (usage, scenario, I/O).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid_hard::{check_solution_invariants, hard_network_direct, hard_network_square_induction, HardFluidSolution};
use crate::lab::agreement::solution_gap;
use crate::lab::{run_convergence, sim_config};
use crate::measure_paths::csv::{read_series, write_series, Series, SeriesRef};
use crate::measure_paths::{Grid, GriddedMeasurePath, VecPath};
use crate::scenario::{builtin_source, parse_scenario, Scenario};
use crate::sim::{read_ndjson, replay_check, simulate, Policy, SampledCounts, SimStats, SimTrace};
use crate::skorokhod::{vmvsm_solve, vmvsp_residuals, VmvsmDiagnostics, VmvsmSolution};
use crate::Verdict;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "edfnet", version, about = "Fluid models and simulation of EDF queueing networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the soft-EDF fluid model and export it.
    FluidSoft(SolveArgs),
    /// Solve the hard-EDF fluid model with both schemes, cross-check, and export.
    FluidHard(SolveArgs),
    /// Run one replication of the stochastic network and export its trace.
    Simulate(SimulateArgs),
    /// Convergence of the scaled simulator to the fluid model.
    Converge(ConvergeArgs),
    /// Re-check an exported solution or trace.
    Validate(ValidateArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    scenario: String,
    /// Halve both grid steps this many times.
    #[arg(long, default_value_t = 0)]
    grid_refine: u32,
    /// Tolerance overrides, `key=val` (repeatable or comma-separated).
    #[arg(long, value_parser = parse_override, value_delimiter = ',')]
    tol_overrides: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Policy::Soft)]
    policy: Policy,
    /// Master seed (default: the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    /// Scale `N`.
    #[arg(long, default_value_t = 100)]
    n: u64,
    /// Replication index (selects the random substreams).
    #[arg(long, default_value_t = 0)]
    rep: u64,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory; without it the Markdown report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Policy::Soft)]
    policy: Policy,
    #[arg(long)]
    seed: Option<u64>,
    /// Scales (default: the scenario's `n_list`).
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ValidateArgs {
    /// Directory written by `fluid-soft` or `fluid-hard`.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Directory written by `simulate`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=val, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("invalid number in {s:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    FluidSoft,
    FluidHard,
    Trace,
}

/// Provenance of a run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    kind: Kind,
    scenario: String,
    grid_refine: u32,
    tol_overrides: BTreeMap<String, f64>,
    grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rep: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_shift: Option<usize>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_CHECK_FAILED
            }
        }
    }
}

/// `Ok(false)` means the command ran but a check failed.
fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::FluidSoft(a) => fluid_soft(&a),
        Command::FluidHard(a) => fluid_hard(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Converge(a) => converge(&a),
        Command::Validate(a) => match (a.solution, a.trace) {
            (Some(dir), _) | (None, Some(dir)) => validate(&dir),
            (None, None) => Err(Error::Config("validate needs --solution or --trace".into())),
        },
        Command::Version => {
            println!("edfnet {}", env!("CARGO_PKG_VERSION"));
            Ok(true)
        }
    }
}

/// Scenario text and its display name: a readable path, else a built-in name.
fn scenario_source(arg: &str) -> Result<(String, String)> {
    let path = Path::new(arg);
    if path.is_file() {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {arg}: {e}")))?;
        return Ok((src, arg.to_string()));
    }
    match builtin_source(arg) {
        Some(src) => Ok((src.to_string(), arg.to_string())),
        None => Err(Error::Config(format!("no scenario file or built-in scenario named {arg:?}"))),
    }
}

fn prepare(src: &str, origin: &str, refine: u32, overrides: &[(String, f64)]) -> Result<Scenario> {
    let mut s = parse_scenario(src, origin)?.refined(refine);
    s.override_tolerances(overrides)?;
    Ok(s)
}

fn load(c: &Common) -> Result<(Scenario, String)> {
    let (src, origin) = scenario_source(&c.scenario)?;
    Ok((prepare(&src, &origin, c.grid_refine, &c.tol_overrides)?, src))
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_csv_file(path: &Path, items: &[(&str, SeriesRef<'_>)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_series(&mut w, items)?;
    w.flush()?;
    Ok(())
}

fn read_csv_file(path: &Path, grid: &Grid) -> Result<BTreeMap<String, Series>> {
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    read_series(BufReader::new(f), grid).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn field(m: &BTreeMap<String, Series>, name: &str) -> Result<GriddedMeasurePath> {
    m.get(name)
        .and_then(Series::as_field)
        .cloned()
        .ok_or_else(|| Error::Parse(format!("missing field component {name:?}")))
}

fn vector(m: &BTreeMap<String, Series>, name: &str) -> Result<VecPath> {
    m.get(name)
        .and_then(Series::as_vector)
        .cloned()
        .ok_or_else(|| Error::Parse(format!("missing vector component {name:?}")))
}

fn meta_for(kind: Kind, s: &Scenario, c: &Common) -> Meta {
    Meta {
        kind,
        scenario: s.name.clone(),
        grid_refine: c.grid_refine,
        tol_overrides: c.tol_overrides.iter().cloned().collect(),
        grid: s.grid,
        policy: None,
        seed: None,
        n: None,
        rep: None,
        eps: None,
        label_shift: None,
    }
}

fn save_provenance(out: &Path, meta: &Meta, src: &str) -> Result<()> {
    write_json(&out.join("meta.json"), meta)?;
    std::fs::write(out.join("scenario.toml"), src)?;
    Ok(())
}

/// Prints one line per named verdict; returns the names of the failures.
fn report_verdicts(entries: &[(&str, &Verdict)]) -> Vec<String> {
    let mut failed = Vec::new();
    for (name, v) in entries {
        let status = if v.pass { "ok" } else { "FAILED" };
        match &v.location {
            Some(at) if !v.pass => println!("{name:<24} {status:<6} worst {:.3e} at {at}", v.worst),
            _ => println!("{name:<24} {status:<6} worst {:.3e}", v.worst),
        }
        if !v.pass {
            failed.push(name.to_string());
        }
    }
    if !failed.is_empty() {
        eprintln!("invariant violated: {}", failed.join(", "));
    }
    failed
}

// ---- fluid-soft ----

#[derive(Debug, Serialize)]
struct SoftChecks {
    nonnegativity: Verdict,
    xi_monotone: Verdict,
    tail_monotone: Verdict,
    vmvsp: Verdict,
}

impl SoftChecks {
    fn entries(&self) -> Vec<(&str, &Verdict)> {
        vec![
            ("nonnegativity", &self.nonnegativity),
            ("xi_monotone", &self.xi_monotone),
            ("tail_monotone", &self.tail_monotone),
            ("vmvsp", &self.vmvsp),
        ]
    }
}

fn soft_checks(sol: &VmvsmSolution, s: &Scenario, alpha: &GriddedMeasurePath, mu: &VecPath) -> SoftChecks {
    let tol = s.tol("vmvsp");
    let res = vmvsp_residuals(sol, alpha, mu, &s.spec.routing);
    let mut nonneg = Verdict::pass();
    let neg = sol.xi.negativity().max(sol.beta.negativity()).max(-sol.iota.series_min().min(0.0));
    nonneg.record(neg, tol * res.scale, || "negative mass in xi, beta or iota".into());
    let count = |n: usize, what: &str| Verdict {
        pass: n == 0,
        worst: n as f64,
        location: (n > 0).then(|| format!("{n} {what}")),
    };
    let mut vmvsp = Verdict::pass();
    vmvsp.record(res.max_relative(), tol, || {
        format!(
            "relative residuals: balance {:.2e}, EDF {:.2e}, work conservation {:.2e}, capacity {:.2e}",
            res.balance / res.scale,
            res.edf / res.scale,
            res.work_conservation / res.scale,
            res.capacity / res.scale
        )
    });
    SoftChecks {
        nonnegativity: nonneg,
        xi_monotone: count(res.xi_monotone_violations, "nodes where xi[0,x] decreases in x"),
        tail_monotone: count(res.tail_monotone_violations, "nodes where beta(x,inf) increases in x"),
        vmvsp,
    }
}

fn fluid_soft(a: &SolveArgs) -> Result<bool> {
    let (s, src) = load(&a.common)?;
    let alpha = s.spec.alpha_field(&s.grid)?;
    let mu = s.spec.mu_path(&s.grid);
    let sol = vmvsm_solve(&alpha, &mu, &s.spec.routing)?;
    let checks = soft_checks(&sol, &s, &alpha, &mu);
    create_out(&a.out)?;
    write_csv_file(
        &a.out.join("solution.csv"),
        &[
            ("alpha", SeriesRef::Field(&alpha)),
            ("mu", SeriesRef::Vector(&mu)),
            ("xi", SeriesRef::Field(&sol.xi)),
            ("beta", SeriesRef::Field(&sol.beta)),
            ("regulator", SeriesRef::Field(&sol.regulator)),
            ("iota", SeriesRef::Vector(&sol.iota)),
        ],
    )?;
    write_json(&a.out.join("diagnostics.json"), &serde_json::json!({ "solver": sol.diagnostics, "checks": checks }))?;
    save_provenance(&a.out, &meta_for(Kind::FluidSoft, &s, &a.common), &src)?;
    Ok(report_verdicts(&checks.entries()).is_empty())
}

// ---- fluid-hard ----

fn hard_items(sol: &HardFluidSolution) -> Vec<(&'static str, SeriesRef<'_>)> {
    vec![
        ("xi", SeriesRef::Field(&sol.xi)),
        ("beta", SeriesRef::Field(&sol.beta)),
        ("beta_s", SeriesRef::Field(&sol.beta_s)),
        ("beta_r", SeriesRef::Field(&sol.beta_r)),
        ("gamma", SeriesRef::Field(&sol.gamma)),
        ("rho", SeriesRef::Vector(&sol.rho)),
        ("iota", SeriesRef::Vector(&sol.iota)),
        ("sigma", SeriesRef::Vector(&sol.sigma)),
    ]
}

fn hard_from_series(m: &BTreeMap<String, Series>) -> Result<HardFluidSolution> {
    Ok(HardFluidSolution {
        xi: field(m, "xi")?,
        beta: field(m, "beta")?,
        beta_s: field(m, "beta_s")?,
        beta_r: field(m, "beta_r")?,
        gamma: field(m, "gamma")?,
        rho: vector(m, "rho")?,
        iota: vector(m, "iota")?,
        sigma: vector(m, "sigma")?,
    })
}

fn fluid_hard(a: &SolveArgs) -> Result<bool> {
    let (s, src) = load(&a.common)?;
    let data = s.hard_data()?;
    let (si, state) = hard_network_square_induction(&data)?;
    let direct = hard_network_direct(&data)?;
    let (gap, location) = solution_gap(&si, &direct);
    let g = s.grid;
    let inv = check_solution_invariants(&si, &data, s.tol("invariants"))?;
    let inv_direct = check_solution_invariants(&direct, &data, s.tol("invariants"))?;

    create_out(&a.out)?;
    let mut items = hard_items(&si);
    items.push(("alpha", SeriesRef::Field(&data.alpha)));
    items.push(("mu", SeriesRef::Vector(&data.mu)));
    write_csv_file(&a.out.join("solution.csv"), &items)?;
    write_csv_file(&a.out.join("direct.csv"), &hard_items(&direct))?;
    write_json(&a.out.join("consistency_log.json"), &state)?;
    write_json(
        &a.out.join("crosscheck.json"),
        &serde_json::json!({
            "gap": gap,
            "location": location,
            "dt": g.dt(),
            "dx": g.dx(),
            "c_hat": gap / (g.dt() + g.dx()),
        }),
    )?;
    write_json(&a.out.join("invariants.json"), &serde_json::json!({ "square_induction": inv, "direct": inv_direct }))?;
    save_provenance(&a.out, &meta_for(Kind::FluidHard, &s, &a.common), &src)?;
    println!("scheme gap {gap:.3e} ({location}), gap/(dt+dx) = {:.3}", gap / (g.dt() + g.dx()));
    Ok(report_verdicts(&inv.entries()).is_empty())
}

// ---- simulate ----

fn count_items(c: &SampledCounts) -> Vec<(String, SeriesRef<'_>)> {
    let mut v = vec![
        ("alpha".to_string(), SeriesRef::Field(&c.alpha)),
        ("xi".to_string(), SeriesRef::Field(&c.xi)),
        ("beta_s".to_string(), SeriesRef::Field(&c.beta_s)),
        ("beta_r".to_string(), SeriesRef::Field(&c.beta_r)),
        ("beta".to_string(), SeriesRef::Field(&c.beta)),
        ("gamma".to_string(), SeriesRef::Field(&c.gamma)),
        ("busy".to_string(), SeriesRef::Field(&c.busy)),
        ("rho".to_string(), SeriesRef::Vector(&c.rho)),
        ("iota".to_string(), SeriesRef::Vector(&c.iota)),
        ("effort".to_string(), SeriesRef::Vector(&c.effort)),
        ("departures".to_string(), SeriesRef::Vector(&c.departures)),
        ("mu".to_string(), SeriesRef::Vector(&c.mu)),
        ("min_queued_slack".to_string(), SeriesRef::Vector(&c.min_queued_slack)),
    ];
    for (i, f) in c.gamma_to.iter().enumerate() {
        v.push((format!("gamma_to_{i}"), SeriesRef::Field(f)));
    }
    v
}

fn counts_from_series(m: &BTreeMap<String, Series>, k: usize) -> Result<SampledCounts> {
    Ok(SampledCounts {
        alpha: field(m, "alpha")?,
        xi: field(m, "xi")?,
        beta_s: field(m, "beta_s")?,
        beta_r: field(m, "beta_r")?,
        beta: field(m, "beta")?,
        gamma: field(m, "gamma")?,
        gamma_to: (0..k).map(|i| field(m, &format!("gamma_to_{i}"))).collect::<Result<_>>()?,
        busy: field(m, "busy")?,
        rho: vector(m, "rho")?,
        iota: vector(m, "iota")?,
        effort: vector(m, "effort")?,
        departures: vector(m, "departures")?,
        mu: vector(m, "mu")?,
        min_queued_slack: vector(m, "min_queued_slack")?,
    })
}

fn simulate_cmd(a: &SimulateArgs) -> Result<bool> {
    let (mut s, src) = load(&a.common)?;
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    let tr = simulate(&s.spec, &sim_config(&s, a.n, a.policy, a.rep, true), &s.grid)?;
    let replay = replay_check(&tr, &s.spec)?;

    create_out(&a.out)?;
    let mut w = BufWriter::new(File::create(a.out.join("events.ndjson"))?);
    tr.write_ndjson(&mut w)?;
    w.flush()?;
    drop(w);
    let items = count_items(&tr.counts);
    let refs: Vec<(&str, SeriesRef<'_>)> = items.iter().map(|(n, r)| (n.as_str(), clone_ref(r))).collect();
    write_csv_file(&a.out.join("counts.csv"), &refs)?;
    write_json(&a.out.join("requirements.json"), &tr.requirements)?;
    write_json(&a.out.join("stats.json"), &tr.stats)?;
    write_json(&a.out.join("replay.json"), &replay)?;
    let mut meta = meta_for(Kind::Trace, &s, &a.common);
    meta.policy = Some(a.policy);
    meta.seed = Some(s.seed);
    meta.n = Some(a.n);
    meta.rep = Some(a.rep);
    meta.eps = Some(tr.eps);
    meta.label_shift = Some(tr.label_shift);
    save_provenance(&a.out, &meta, &src)?;
    println!(
        "{} events ({} arrivals, {} departures, {} reneges), max queue {}",
        tr.stats.events, tr.stats.arrivals, tr.stats.departures, tr.stats.reneges, tr.stats.max_queue
    );
    Ok(report_verdicts(&replay_entries(&replay)).is_empty())
}

fn clone_ref<'a>(r: &SeriesRef<'a>) -> SeriesRef<'a> {
    match r {
        SeriesRef::Field(f) => SeriesRef::Field(f),
        SeriesRef::Vector(v) => SeriesRef::Vector(v),
    }
}

fn replay_entries(r: &crate::sim::ReplayReport) -> Vec<(&'static str, &Verdict)> {
    vec![
        ("balance", &r.balance),
        ("order", &r.order),
        ("work_conservation", &r.work_conservation),
        ("hardness", &r.hardness),
        ("departure_identity", &r.departure_identity),
        ("field_balance", &r.field_balance),
        ("gamma_beta", &r.gamma_beta),
        ("sampled_hardness", &r.sampled_hardness),
    ]
}

// ---- converge ----

fn converge(a: &ConvergeArgs) -> Result<bool> {
    let (mut s, _) = load(&a.common)?;
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    let n_list = a.n_list.clone().unwrap_or_else(|| s.experiment.n_list.clone());
    let reps = a.reps.unwrap_or(s.experiment.reps);
    let report = run_convergence(&s, a.policy, &n_list, reps)?;
    match &a.out {
        Some(dir) => {
            create_out(dir)?;
            write_json(&dir.join("report.json"), &report)?;
            std::fs::write(dir.join("report.md"), report.to_markdown())?;
            let mut w = BufWriter::new(File::create(dir.join("errors.csv"))?);
            report.write_csv(&mut w)?;
            w.flush()?;
            for c in &report.checks {
                println!("{:<6} {}: {}", if c.pass { "ok" } else { "FAILED" }, c.name, c.detail);
            }
        }
        None => print!("{}", report.to_markdown()),
    }
    Ok(report.pass)
}

// ---- validate ----

fn validate(dir: &Path) -> Result<bool> {
    let meta: Meta = read_json(&dir.join("meta.json"))?;
    let src = std::fs::read_to_string(dir.join("scenario.toml"))
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.join("scenario.toml").display())))?;
    let overrides: Vec<(String, f64)> = meta.tol_overrides.clone().into_iter().collect();
    let s = prepare(&src, &dir.join("scenario.toml").display().to_string(), meta.grid_refine, &overrides)?;
    if s.grid != meta.grid {
        return Err(Error::Config("meta.json grid does not match the stored scenario".into()));
    }
    let failed = match meta.kind {
        Kind::FluidSoft => {
            let m = read_csv_file(&dir.join("solution.csv"), &s.grid)?;
            let alpha = s.spec.alpha_field(&s.grid)?;
            let mu = s.spec.mu_path(&s.grid);
            let sol = VmvsmSolution {
                xi: field(&m, "xi")?,
                beta: field(&m, "beta")?,
                regulator: field(&m, "regulator")?,
                iota: vector(&m, "iota")?,
                diagnostics: VmvsmDiagnostics::default(),
            };
            let checks = soft_checks(&sol, &s, &alpha, &mu);
            report_verdicts(&checks.entries())
        }
        Kind::FluidHard => {
            let m = read_csv_file(&dir.join("solution.csv"), &s.grid)?;
            let sol = hard_from_series(&m)?;
            let data = s.hard_data()?;
            let inv = check_solution_invariants(&sol, &data, s.tol("invariants"))?;
            report_verdicts(&inv.entries())
        }
        Kind::Trace => {
            let m = read_csv_file(&dir.join("counts.csv"), &s.grid)?;
            let f = File::open(dir.join("events.ndjson"))?;
            let events = read_ndjson(BufReader::new(f))?;
            let requirements: Vec<Vec<f64>> = read_json(&dir.join("requirements.json"))?;
            let stats: SimStats = read_json(&dir.join("stats.json"))?;
            let missing = |what: &str| Error::Parse(format!("meta.json: trace without {what}"));
            let tr = SimTrace {
                n: meta.n.ok_or_else(|| missing("n"))?,
                policy: meta.policy.ok_or_else(|| missing("policy"))?,
                eps: meta.eps.ok_or_else(|| missing("eps"))?,
                label_shift: meta.label_shift.ok_or_else(|| missing("label_shift"))?,
                routing: s.spec.routing.clone(),
                events,
                counts: counts_from_series(&m, s.spec.k())?,
                requirements,
                stats,
            };
            let replay = replay_check(&tr, &s.spec)?;
            report_verdicts(&replay_entries(&replay))
        }
    };
    Ok(failed.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("vmvsp = 1e-7").unwrap(), ("vmvsp".to_string(), 1e-7));
        assert!(parse_override("vmvsp").is_err());
        assert!(parse_override("vmvsp=tight").is_err());
    }

    #[test]
    fn builtin_names_resolve() {
        let (src, origin) = scenario_source("tandem").unwrap();
        assert_eq!(origin, "tandem");
        assert!(src.contains("[network]"));
        assert!(scenario_source("no/such/file.toml").unwrap_err().is_config());
    }
}
