use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::rng::{substream, StreamKind};
use super::{EventExtra, EventKind, EventRecord, Policy, SampledCounts, SimConfig, SimStats, SimTrace};
use crate::error::{Error, Result};
use crate::fluid_hard::eps_cells;
use crate::measure_paths::{Grid, GriddedMeasurePath, VecPath};
use crate::model::NetworkSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF(f64);

impl Eq for OrdF {}
impl PartialOrd for OrdF {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Simultaneous events run renege timers first, then completions, then arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Renege { job: u64, epoch: u64 },
    Completion { node: usize },
    Arrival { node: usize },
}

impl Action {
    fn class(&self) -> u8 {
        match self {
            Action::Renege { .. } => 0,
            Action::Completion { .. } => 1,
            Action::Arrival { .. } => 2,
        }
    }
}

type HeapEntry = Reverse<(OrdF, u8, u64, Action)>;

#[derive(Debug, Clone)]
struct Job {
    arrived: f64,
    deadline: f64,
    base_cell: usize,
    migrations: usize,
    node: usize,
    epoch: u64,
    queued: bool,
}

#[derive(Debug, Clone, Copy)]
struct Serving {
    job: u64,
    start: f64,
    req: f64,
}

type QKey = (OrdF, OrdF, u64);

struct Station {
    queue: BTreeSet<QKey>,
    serving: Option<Serving>,
    /// Capacity vanishes on the whole horizon: the server never starts a job.
    dead: bool,
    arrival_rng: ChaCha8Rng,
    lead_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    routing_rng: ChaCha8Rng,
    completed_effort: f64,
    requirements: Vec<f64>,
    alpha: Vec<f64>,
    bs: Vec<f64>,
    br: Vec<f64>,
    gamma_to: Vec<Vec<f64>>,
    rho: f64,
    departures: f64,
}

/// Smallest `N` with `B_svc / (N inf m) < ε` over stations that can serve at all; services
/// then always finish before a postponed deadline could expire.
pub fn min_scale_hard(spec: &NetworkSpec, services: &[crate::model::ServiceDist], horizon: f64) -> Result<u64> {
    if !(spec.eps > 0.0) {
        return Err(Error::Precondition("the hard policy needs a positive postponement eps".into()));
    }
    let mut n_min = 1u64;
    for (i, m) in spec.capacity.iter().enumerate() {
        if m.max_on(horizon) <= 0.0 {
            continue;
        }
        let inf = m.min_on(horizon);
        if !(inf > 0.0) {
            return Err(Error::Precondition(format!(
                "node {i}: the hard policy needs capacity bounded away from 0 on [0, {horizon}] (or identically 0)"
            )));
        }
        let need = (services[i].bound() / (spec.eps * inf)).floor() as u64 + 1;
        n_min = n_min.max(need);
    }
    Ok(n_min)
}

struct Engine<'a> {
    spec: &'a NetworkSpec,
    cfg: &'a SimConfig,
    g: Grid,
    shift: usize,
    jobs: Vec<Job>,
    st: Vec<Station>,
    heap: BinaryHeap<HeapEntry>,
    seq: u64,
    events: Vec<EventRecord>,
    stats: SimStats,
    nf: f64,
}

impl<'a> Engine<'a> {
    fn push(&mut self, t: f64, a: Action) {
        self.seq += 1;
        self.heap.push(Reverse((OrdF(t), a.class(), self.seq, a)));
    }

    fn key(&self, id: u64) -> QKey {
        let j = &self.jobs[id as usize];
        match self.cfg.policy {
            Policy::Fisfo => (OrdF(j.arrived), OrdF(0.0), id),
            Policy::Soft | Policy::Hard => (OrdF(j.deadline), OrdF(j.arrived), id),
        }
    }

    fn cell(&self, id: u64) -> usize {
        let j = &self.jobs[id as usize];
        (j.base_cell + j.migrations * self.shift).min(self.g.n_x)
    }

    fn log(&mut self, t: f64, kind: EventKind, job: u64, node: usize, extra: EventExtra) {
        self.stats.events += 1;
        if self.cfg.record_events {
            let deadline = self.jobs[job as usize].deadline;
            self.events.push(EventRecord { t, kind, job, node, deadline, extra });
        }
    }

    fn extra(&self, node: usize) -> EventExtra {
        EventExtra { queue_len: self.st[node].queue.len(), from: None, to: None, service: None, label: None, arrived: None }
    }

    fn enqueue(&mut self, id: u64, node: usize, now: f64) {
        let key = self.key(id);
        let j = &mut self.jobs[id as usize];
        j.node = node;
        j.queued = true;
        j.epoch += 1;
        let (epoch, d) = (j.epoch, j.deadline);
        self.st[node].queue.insert(key);
        self.stats.max_queue = self.stats.max_queue.max(self.st[node].queue.len());
        if self.cfg.policy.is_hard() {
            self.push(d.max(now), Action::Renege { job: id, epoch });
        }
    }

    fn try_start(&mut self, node: usize, now: f64) {
        let s = &mut self.st[node];
        if s.dead || s.serving.is_some() {
            return;
        }
        let Some(key) = s.queue.pop_first() else { return };
        let id = key.2;
        let req = self.cfg.services[node].sample(&mut s.service_rng);
        s.requirements.push(req);
        s.serving = Some(Serving { job: id, start: now, req });
        let c = self.cell(id);
        self.st[node].bs[c] += 1.0;
        let j = &mut self.jobs[id as usize];
        j.queued = false;
        j.epoch += 1;
        self.stats.starts += 1;
        let mut ex = self.extra(node);
        ex.service = Some(req);
        self.log(now, EventKind::Start, id, node, ex);
        let end = self.spec.capacity[node].advance(now, req / self.nf);
        if end <= self.g.t_max {
            self.push(end, Action::Completion { node });
        }
    }

    fn arrival(&mut self, node: usize, now: f64) {
        let lead = self.spec.arrivals[node].lead.sample(&mut self.st[node].lead_rng);
        let id = self.new_job(node, now, now + lead);
        self.stats.arrivals += 1;
        self.enqueue(id, node, now);
        let mut ex = self.extra(node);
        ex.arrived = Some(now);
        self.log(now, EventKind::Arrival, id, node, ex);
        self.try_start(node, now);
        self.schedule_arrival(node, now);
    }

    fn new_job(&mut self, node: usize, now: f64, deadline: f64) -> u64 {
        let id = self.jobs.len() as u64;
        let base_cell = self.g.cell_of(deadline);
        self.jobs.push(Job { arrived: now, deadline, base_cell, migrations: 0, node, epoch: 0, queued: false });
        self.st[node].alpha[base_cell.min(self.g.n_x)] += 1.0;
        id
    }

    fn schedule_arrival(&mut self, node: usize, now: f64) {
        let e: f64 = Exp1.sample(&mut self.st[node].arrival_rng);
        let next = self.spec.arrivals[node].rate.advance(now, e / self.nf);
        if next <= self.g.t_max {
            self.push(next, Action::Arrival { node });
        }
    }

    fn completion(&mut self, node: usize, now: f64) {
        let sv = self.st[node].serving.take().expect("completion without a job in service");
        let id = sv.job;
        let k = self.spec.k();
        let u: f64 = self.st[node].routing_rng.random();
        let mut dest = None;
        let mut acc = 0.0;
        for j in 0..k {
            acc += self.spec.routing.p(node, j);
            if u < acc {
                dest = Some(j);
                break;
            }
        }
        let hard = self.cfg.policy.is_hard();
        let d = self.jobs[id as usize].deadline;
        let (label, label_cell) = if hard {
            (d + self.spec.eps, (self.cell(id) + self.shift).min(self.g.n_x))
        } else {
            (d, self.cell(id))
        };
        let s = &mut self.st[node];
        s.completed_effort += sv.req;
        s.departures += 1.0;
        s.gamma_to[dest.map_or(0, |j| j + 1)][label_cell] += 1.0;
        self.stats.departures += 1;
        let mut ex = self.extra(node);
        ex.to = dest;
        ex.label = Some(label);
        self.log(now, EventKind::Departure, id, node, ex);
        if hard {
            let j = &mut self.jobs[id as usize];
            j.migrations += 1;
            j.deadline = label;
        }
        if let Some(j) = dest {
            debug_assert!(!hard || label > now, "postponed deadline already expired");
            self.enqueue(id, j, now);
            let mut ex = self.extra(j);
            ex.from = Some(node);
            self.log(now, EventKind::Route, id, j, ex);
        }
        self.try_start(node, now);
        if let Some(j) = dest {
            if j != node {
                self.try_start(j, now);
            }
        }
    }

    fn renege(&mut self, id: u64, epoch: u64, now: f64) {
        let j = &self.jobs[id as usize];
        if !j.queued || j.epoch != epoch {
            return;
        }
        let node = j.node;
        let key = self.key(id);
        let c = self.cell(id);
        let removed = self.st[node].queue.remove(&key);
        debug_assert!(removed);
        self.jobs[id as usize].queued = false;
        let s = &mut self.st[node];
        s.br[c] += 1.0;
        s.rho += 1.0;
        self.stats.reneges += 1;
        let ex = self.extra(node);
        self.log(now, EventKind::Renege, id, node, ex);
    }

    fn effort(&self, i: usize, t: f64) -> f64 {
        let s = &self.st[i];
        let cap = &self.spec.capacity[i];
        s.completed_effort + s.serving.map_or(0.0, |sv| self.nf * (cap.integral(t) - cap.integral(sv.start)))
    }

    fn sample(&self, k: usize, c: &mut SampledCounts) {
        let t = self.g.t(k);
        let nx = self.g.n_x + 1;
        let kk = self.spec.k();
        let mut hist = vec![0.0; nx];
        let cum = |h: &[f64], out: &mut [f64]| {
            let mut run = 0.0;
            for (o, v) in out.iter_mut().zip(h) {
                run += v;
                *o = run;
            }
        };
        for i in 0..kk {
            let s = &self.st[i];
            cum(&s.alpha, c.alpha.row_mut(i, k));
            cum(&s.bs, c.beta_s.row_mut(i, k));
            cum(&s.br, c.beta_r.row_mut(i, k));
            for j in 0..nx {
                hist[j] = s.bs[j] + s.br[j];
            }
            cum(&hist, c.beta.row_mut(i, k));
            for j in 0..nx {
                hist[j] = s.gamma_to.iter().map(|g| g[j]).sum();
            }
            cum(&hist, c.gamma.row_mut(i, k));
            for (d, g) in s.gamma_to.iter().enumerate() {
                cum(g, c.gamma_to[i].row_mut(d, k));
            }
            hist.iter_mut().for_each(|v| *v = 0.0);
            let mut slack = f64::INFINITY;
            for key in &s.queue {
                hist[self.cell(key.2)] += 1.0;
                slack = slack.min(self.jobs[key.2 as usize].deadline - t);
            }
            cum(&hist, c.xi.row_mut(i, k));
            hist.iter_mut().for_each(|v| *v = 0.0);
            if let Some(sv) = s.serving {
                hist[self.cell(sv.job)] = 1.0;
            }
            cum(&hist, c.busy.row_mut(i, k));
            c.rho.set(i, k, s.rho);
            let mu = self.nf * self.spec.capacity[i].integral(t);
            let eff = self.effort(i, t);
            c.mu.set(i, k, mu);
            c.effort.set(i, k, eff);
            c.iota.set(i, k, mu - eff);
            c.departures.set(i, k, s.departures);
            c.min_queued_slack.set(i, k, slack);
        }
    }
}

/// Runs one replication on `[0, T]` and samples counts on `grid`.
pub fn simulate(spec: &NetworkSpec, cfg: &SimConfig, grid: &Grid) -> Result<SimTrace> {
    let kk = spec.k();
    if cfg.n == 0 {
        return Err(Error::Config("the scale N must be at least 1".into()));
    }
    if spec.arrivals.len() != kk || spec.capacity.len() != kk || spec.initial.len() != kk || cfg.services.len() != kk {
        return Err(Error::Config(format!("expected {kk} arrival, capacity, initial and service entries")));
    }
    for (i, a) in spec.arrivals.iter().enumerate() {
        a.lead.validate().map_err(|e| Error::Config(format!("node {i}: {e}")))?;
        if !a.rate.is_nonnegative() {
            return Err(Error::Config(format!("node {i}: arrival rates must be nonnegative")));
        }
        if !spec.capacity[i].is_nonnegative() {
            return Err(Error::Config(format!("node {i}: capacity must be nonnegative")));
        }
        cfg.services[i].validate()?;
    }
    let shift = if cfg.policy.is_hard() {
        let n_min = min_scale_hard(spec, &cfg.services, grid.t_max)?;
        if cfg.n < n_min {
            return Err(Error::ScaleTooSmall { n: cfg.n, n_min });
        }
        eps_cells(spec.eps, grid)?
    } else {
        0
    };
    let nx = grid.n_x + 1;
    let st = (0..kk)
        .map(|i| Station {
            queue: BTreeSet::new(),
            serving: None,
            dead: spec.capacity[i].max_on(grid.t_max) <= 0.0,
            arrival_rng: substream(cfg.seed, cfg.replication, i, StreamKind::ArrivalTimes),
            lead_rng: substream(cfg.seed, cfg.replication, i, StreamKind::Leads),
            service_rng: substream(cfg.seed, cfg.replication, i, StreamKind::Service),
            routing_rng: substream(cfg.seed, cfg.replication, i, StreamKind::Routing),
            completed_effort: 0.0,
            requirements: Vec::new(),
            alpha: vec![0.0; nx],
            bs: vec![0.0; nx],
            br: vec![0.0; nx],
            gamma_to: vec![vec![0.0; nx]; kk + 1],
            rho: 0.0,
            departures: 0.0,
        })
        .collect();
    let mut e = Engine {
        spec,
        cfg,
        g: *grid,
        shift,
        jobs: Vec::new(),
        st,
        heap: BinaryHeap::new(),
        seq: 0,
        events: Vec::new(),
        stats: SimStats::default(),
        nf: cfg.n as f64,
    };

    // initial queue: floor(N · mass) jobs per segment at stratified deadlines
    for i in 0..kk {
        for seg in &spec.initial[i] {
            let n = (cfg.n as f64 * seg.mass).floor() as u64;
            for l in 0..n {
                let d = seg.lo + (seg.hi - seg.lo) * (l as f64 + 0.5) / n as f64;
                let id = e.new_job(i, 0.0, d);
                e.stats.arrivals += 1;
                e.enqueue(id, i, 0.0);
                let mut ex = e.extra(i);
                ex.arrived = Some(0.0);
                e.log(0.0, EventKind::Arrival, id, i, ex);
            }
        }
    }
    for i in 0..kk {
        e.try_start(i, 0.0);
        e.schedule_arrival(i, 0.0);
    }

    let zeros = GriddedMeasurePath::zeros(*grid, kk);
    let vz = VecPath::zeros(*grid, kk);
    let mut counts = SampledCounts {
        alpha: zeros.clone(),
        xi: zeros.clone(),
        beta_s: zeros.clone(),
        beta_r: zeros.clone(),
        beta: zeros.clone(),
        gamma: zeros.clone(),
        gamma_to: vec![GriddedMeasurePath::zeros(*grid, kk + 1); kk],
        busy: zeros,
        rho: vz.clone(),
        iota: vz.clone(),
        effort: vz.clone(),
        departures: vz.clone(),
        mu: vz.clone(),
        min_queued_slack: vz,
    };
    let mut next_sample = 0usize;
    while let Some(Reverse((OrdF(t), _, _, a))) = e.heap.pop() {
        if t > grid.t_max {
            break;
        }
        while next_sample <= grid.n_t && grid.t(next_sample) < t {
            e.sample(next_sample, &mut counts);
            next_sample += 1;
        }
        match a {
            Action::Renege { job, epoch } => e.renege(job, epoch, t),
            Action::Completion { node } => e.completion(node, t),
            Action::Arrival { node } => e.arrival(node, t),
        }
    }
    while next_sample <= grid.n_t {
        e.sample(next_sample, &mut counts);
        next_sample += 1;
    }
    let requirements = e.st.iter().map(|s| s.requirements.clone()).collect();
    Ok(SimTrace {
        n: cfg.n,
        policy: cfg.policy,
        eps: spec.eps,
        label_shift: shift,
        routing: spec.routing.clone(),
        events: e.events,
        counts,
        requirements,
        stats: e.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialSegment, LeadDist, PiecewiseConstant, ServiceDist};
    use crate::sim::fixtures::{config, feedback3, network};
    use crate::sim::{capacity_error, capacity_error_identity, read_ndjson, replay_check, routing_error_field};

    #[test]
    fn no_arrivals_only_idle() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let s = network(vec![vec![0.0]], &[0.0], &[1.0], LeadDist::Uniform { lo: 0.1, hi: 0.2 }, 0.1);
        let tr = simulate(&s, &config(50, Policy::Soft, 1, 1), &g).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.counts.xi.max_abs(), 0.0);
        assert_eq!(tr.counts.beta.max_abs(), 0.0);
        assert_eq!(tr.counts.iota, tr.counts.mu);
        // ē = 0 here: no start has happened, so B = 0 and S(0) - 1 = 0
        let e = capacity_error(&tr);
        assert!(e.max_abs() <= 2.0 / 50.0);
    }

    #[test]
    fn soft_feedback_run_is_exact() {
        let g = Grid::new(4.0, 8.0, 80, 160).unwrap();
        let s = feedback3();
        let tr = simulate(&s, &config(200, Policy::Soft, 3, 11), &g).unwrap();
        assert!(tr.stats.events > 1000);
        let rep = replay_check(&tr, &s).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
        assert!(capacity_error_identity(&tr) < 1e-9);
    }

    #[test]
    fn hard_feedback_run_is_exact() {
        let g = Grid::new(4.0, 8.0, 80, 160).unwrap();
        let mut s = feedback3();
        s.arrivals[0].rate = PiecewiseConstant::constant(2.0);
        s.arrivals[0].lead = LeadDist::Uniform { lo: 0.05, hi: 0.6 };
        let tr = simulate(&s, &config(200, Policy::Hard, 3, 5), &g).unwrap();
        assert!(tr.stats.reneges > 0);
        let rep = replay_check(&tr, &s).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
        assert!(capacity_error_identity(&tr) < 1e-9);
        // β^r total is ρ
        for i in 0..3 {
            for k in 0..=g.n_t {
                assert_eq!(tr.counts.beta_r.total(i, k), tr.counts.rho.get(i, k));
            }
        }
    }

    #[test]
    fn same_seed_same_log() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let s = feedback3();
        let a = simulate(&s, &config(100, Policy::Hard, 3, 42), &g).unwrap();
        let b = simulate(&s, &config(100, Policy::Hard, 3, 42), &g).unwrap();
        let c = simulate(&s, &config(100, Policy::Hard, 3, 43), &g).unwrap();
        assert_eq!(a.events, b.events);
        assert_ne!(a.events, c.events);
        let mut buf = Vec::new();
        a.write_ndjson(&mut buf).unwrap();
        assert_eq!(read_ndjson(&buf[..]).unwrap(), a.events);
    }

    #[test]
    fn hard_without_expiry_matches_soft() {
        // no routing and deadlines past the horizon: reneging never fires
        let g = Grid::new(2.0, 8.0, 20, 80).unwrap();
        let s = network(vec![vec![0.0, 0.0], vec![0.0, 0.0]], &[1.3, 0.7], &[1.0, 1.0], LeadDist::Uniform { lo: 2.5, hi: 4.0 }, 0.1);
        let soft = simulate(&s, &config(100, Policy::Soft, 2, 9), &g).unwrap();
        let hard = simulate(&s, &config(100, Policy::Hard, 2, 9), &g).unwrap();
        // departures differ only in the postponed label they carry
        let strip = |t: &SimTrace| {
            t.events.iter().cloned().map(|mut e| {
                e.extra.label = None;
                e
            }).collect::<Vec<_>>()
        };
        assert!(soft.stats.events > 100);
        assert_eq!(strip(&soft), strip(&hard));
    }

    #[test]
    fn zero_capacity_station_reneges_everything() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let mut s = network(vec![vec![0.0, 0.0], vec![0.0, 0.0]], &[0.0, 1.0], &[1.0, 0.0], LeadDist::Uniform { lo: 0.2, hi: 0.6 }, 0.1);
        s.capacity[1] = PiecewiseConstant::constant(0.0);
        let tr = simulate(&s, &config(100, Policy::Hard, 2, 3), &g).unwrap();
        assert_eq!(tr.stats.starts, 0);
        let expired = tr.counts.alpha.get(1, g.n_t, g.n_t * g.steps_per_dt().unwrap());
        assert_eq!(tr.counts.rho.get(1, g.n_t), expired);
        assert!(replay_check(&tr, &s).unwrap().all_pass());
    }

    #[test]
    fn scale_too_small_names_minimum() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let s = network(vec![vec![0.0]], &[1.0], &[0.5], LeadDist::Uniform { lo: 0.2, hi: 0.6 }, 0.1);
        // B_svc = 1.5, ε inf m = 0.05 -> N_min = floor(30) + 1 = 31
        match simulate(&s, &config(30, Policy::Hard, 1, 3), &g) {
            Err(Error::ScaleTooSmall { n, n_min }) => assert_eq!((n, n_min), (30, 31)),
            other => panic!("{other:?}"),
        }
        assert!(simulate(&s, &config(31, Policy::Hard, 1, 3), &g).is_ok());
    }

    #[test]
    fn deterministic_services_bound_capacity_error() {
        let g = Grid::new(3.0, 6.0, 60, 120).unwrap();
        let s = feedback3();
        let mut cfg = config(300, Policy::Soft, 3, 17);
        cfg.services = vec![ServiceDist::Deterministic; 3];
        let tr = simulate(&s, &cfg, &g).unwrap();
        assert!(capacity_error(&tr).max_abs() <= 2.0 / 300.0 + 1e-12);
    }

    #[test]
    fn routing_errors_vanish_without_randomness() {
        let g = Grid::new(2.0, 4.0, 20, 40).unwrap();
        let s = network(vec![vec![0.0, 1.0], vec![0.0, 0.0]], &[1.0, 0.2], &[1.5, 1.5], LeadDist::Uniform { lo: 0.2, hi: 1.0 }, 0.1);
        let tr = simulate(&s, &config(100, Policy::Soft, 2, 3), &g).unwrap();
        let e = routing_error_field(&tr);
        assert!(tr.stats.departures > 100);
        assert_eq!(e[0].max_abs(), 0.0);
        assert_eq!(e[1].max_abs(), 0.0);
    }

    #[test]
    fn subcritical_queue_stays_small() {
        let g = Grid::new(2.0, 4.0, 40, 80).unwrap();
        let s = network(vec![vec![0.0]], &[0.6], &[1.0], LeadDist::Uniform { lo: 0.5, hi: 1.0 }, 0.1);
        let mut cfg = config(1000, Policy::Soft, 1, 21);
        cfg.services = vec![ServiceDist::Deterministic];
        let tr = simulate(&s, &cfg, &g).unwrap();
        let worst = (0..=g.n_t).map(|k| tr.counts.xi.total(0, k) / 1000.0).fold(0.0, f64::max);
        // fluid queue is 0; fluctuations are O(N^{-1/2})
        assert!(worst < 3.0 * (2.0f64 / 1000.0).sqrt(), "{worst}");
    }

    #[test]
    fn fisfo_matches_edf_with_arrival_deadlines() {
        let g = Grid::new(3.0, 4.0, 30, 40).unwrap();
        let mut s = feedback3();
        for a in &mut s.arrivals {
            a.lead = LeadDist::Uniform { lo: 0.0, hi: 1e-12 };
        }
        let edf = simulate(&s, &config(50, Policy::Soft, 3, 8), &g).unwrap();
        let fifo = simulate(&s, &config(50, Policy::Fisfo, 3, 8), &g).unwrap();
        let starts = |t: &SimTrace| t.events.iter().filter(|e| e.kind == EventKind::Start).map(|e| (e.job, e.node)).collect::<Vec<_>>();
        assert!(starts(&edf).len() > 100);
        assert_eq!(starts(&edf), starts(&fifo));
        assert!(replay_check(&fifo, &s).unwrap().all_pass());
    }

    #[test]
    fn initial_jobs_are_stratified() {
        let g = Grid::new(1.0, 2.0, 10, 20).unwrap();
        let mut s = network(vec![vec![0.0]], &[0.0], &[1.0], LeadDist::Uniform { lo: 0.1, hi: 0.2 }, 0.1);
        s.initial[0] = vec![InitialSegment { lo: 0.5, hi: 1.5, mass: 0.4 }];
        let tr = simulate(&s, &config(25, Policy::Soft, 1, 1), &g).unwrap();
        assert_eq!(tr.counts.alpha.total(0, 0), 10.0);
        let d: Vec<f64> = tr.events.iter().filter(|e| e.kind == EventKind::Arrival).map(|e| e.deadline).collect();
        assert_eq!(d.len(), 10);
        assert!((d[0] - 0.55).abs() < 1e-12 && (d[9] - 1.45).abs() < 1e-12);
    }
}
