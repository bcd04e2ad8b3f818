//! Exactness checks on a finished trace: an independent replay of the event log, the
//! count identities at every sampled grid node, and the error processes.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{EventKind, Policy, SimTrace};
use crate::error::{Error, Result};
use crate::measure_paths::{GriddedMeasurePath, VecPath};
use crate::model::NetworkSpec;
use crate::Verdict;

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    pub events: usize,
    /// `queue length = arrivals + routed in − starts − reneges` after every event (exact).
    pub balance: Verdict,
    /// Every start takes the head of the replayed queue under the policy's order.
    pub order: Verdict,
    /// No station idles while its queue is nonempty (checked per timestamp).
    pub work_conservation: Verdict,
    /// Hard policy: no queued job has an expired deadline at the end of a timestamp, reneges
    /// happen exactly at the deadline, routing postpones by `ε`.
    pub hardness: Verdict,
    /// Each service consumes exactly its drawn requirement of effort `N ∫ m`.
    pub departure_identity: Verdict,
    /// `ξ = α + Σ_j γ^{ji} − β` at every sampled node and level (exact).
    pub field_balance: Verdict,
    /// `γ[0,x] = β^s[0,x−ε] − B[0,x−ε]` (with `ε = 0` for the soft policies), exact.
    pub gamma_beta: Verdict,
    /// `ξ_t[0,t] = 0` at every sample instant (hard policy).
    pub sampled_hardness: Verdict,
}

impl ReplayReport {
    pub fn all_pass(&self) -> bool {
        [
            &self.balance,
            &self.order,
            &self.work_conservation,
            &self.hardness,
            &self.departure_identity,
            &self.field_balance,
            &self.gamma_beta,
            &self.sampled_hardness,
        ]
        .iter()
        .all(|v| v.pass)
    }
}

type Key = (u64, u64, u64);

fn ord_bits(x: f64) -> u64 {
    // order-preserving map of finite doubles onto u64
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Replays the event log from scratch and checks the trace identities.
pub fn replay_check(trace: &SimTrace, spec: &NetworkSpec) -> Result<ReplayReport> {
    if trace.events.is_empty() && trace.stats.events > 0 {
        return Err(Error::Precondition("the trace was recorded without its event log".into()));
    }
    let kk = trace.k();
    let g = *trace.grid();
    let hard = trace.policy == Policy::Hard;
    let nf = trace.n as f64;
    let mut rep = ReplayReport {
        events: trace.events.len(),
        balance: Verdict::pass(),
        order: Verdict::pass(),
        work_conservation: Verdict::pass(),
        hardness: Verdict::pass(),
        departure_identity: Verdict::pass(),
        field_balance: Verdict::pass(),
        gamma_beta: Verdict::pass(),
        sampled_hardness: Verdict::pass(),
    };

    let mut queues: Vec<BTreeSet<Key>> = vec![BTreeSet::new(); kk];
    let mut busy: Vec<Option<(u64, f64, f64)>> = vec![None; kk];
    let mut inflow = vec![0i64; kk];
    let mut outflow = vec![0i64; kk];
    // job -> (system arrival, current deadline)
    let mut jobs: HashMap<u64, (f64, f64)> = HashMap::new();
    let dead: Vec<bool> = spec.capacity.iter().map(|m| m.max_on(g.t_max) <= 0.0).collect();
    let key = |arrived: f64, deadline: f64, id: u64| -> Key {
        match trace.policy {
            Policy::Fisfo => (ord_bits(arrived), 0, id),
            _ => (ord_bits(deadline), ord_bits(arrived), id),
        }
    };

    let ev = &trace.events;
    for (n, e) in ev.iter().enumerate() {
        let at = || format!("event {n} ({:?}) at t = {}, job {}, node {}", e.kind, e.t, e.job, e.node);
        match e.kind {
            EventKind::Arrival => {
                let arrived = e.extra.arrived.unwrap_or(e.t);
                jobs.insert(e.job, (arrived, e.deadline));
                queues[e.node].insert(key(arrived, e.deadline, e.job));
                inflow[e.node] += 1;
            }
            EventKind::Route => {
                let Some(&(arrived, old)) = jobs.get(&e.job) else {
                    rep.order.record(1.0, 0.0, at);
                    continue;
                };
                if hard {
                    let want = old + trace.eps;
                    rep.hardness.record(if e.deadline == want && e.deadline > e.t { 0.0 } else { 1.0 }, 0.0, at);
                } else {
                    rep.hardness.record(if e.deadline == old { 0.0 } else { 1.0 }, 0.0, at);
                }
                jobs.insert(e.job, (arrived, e.deadline));
                queues[e.node].insert(key(arrived, e.deadline, e.job));
                inflow[e.node] += 1;
            }
            EventKind::Start => {
                let (arrived, d) = jobs.get(&e.job).copied().unwrap_or((f64::NAN, f64::NAN));
                let head = queues[e.node].pop_first();
                rep.order.record(if head == Some(key(arrived, d, e.job)) { 0.0 } else { 1.0 }, 0.0, at);
                if busy[e.node].is_some() {
                    rep.order.record(1.0, 0.0, at);
                }
                busy[e.node] = Some((e.job, e.t, e.extra.service.unwrap_or(f64::NAN)));
                outflow[e.node] += 1;
            }
            EventKind::Departure => match busy[e.node].take() {
                Some((job, start, req)) if job == e.job => {
                    let cap = &spec.capacity[e.node];
                    let used = nf * (cap.integral(e.t) - cap.integral(start));
                    rep.departure_identity.record((used - req).abs(), 1e-9 * req.max(1.0), at);
                    let d = jobs.get(&e.job).map_or(f64::NAN, |j| j.1);
                    let want = if hard { d + trace.eps } else { d };
                    let ok = e.extra.label == Some(want);
                    rep.hardness.record(if ok { 0.0 } else { 1.0 }, 0.0, at);
                }
                _ => rep.departure_identity.record(1.0, 0.0, at),
            },
            EventKind::Renege => {
                let (arrived, d) = jobs.get(&e.job).copied().unwrap_or((f64::NAN, f64::NAN));
                let removed = queues[e.node].remove(&key(arrived, d, e.job));
                rep.hardness.record(if removed && hard { 0.0 } else { 1.0 }, 0.0, at);
                rep.hardness.record((e.t - d).abs() - 1e-12 * d.abs().max(1.0), 0.0, at);
                outflow[e.node] += 1;
            }
        }
        let q = queues[e.node].len();
        let expected = inflow[e.node] - outflow[e.node];
        rep.balance.record(((q as i64 - expected).abs() + (e.extra.queue_len as i64 - expected).abs()) as f64, 0.0, at);

        let group_end = ev.get(n + 1).is_none_or(|next| next.t != e.t);
        if group_end {
            for i in 0..kk {
                if !queues[i].is_empty() && busy[i].is_none() && !dead[i] {
                    rep.work_conservation.record(1.0, 0.0, || format!("station {i} idles with a queue at t = {}", e.t));
                }
                if hard {
                    if let Some(first) = queues[i].iter().map(|k| jobs[&k.2].1).reduce(f64::min) {
                        let v = if first > e.t { 0.0 } else { 1.0 };
                        rep.hardness.record(v, 0.0, || format!("station {i} holds an expired job at t = {}", e.t));
                    }
                }
            }
        }
    }

    let c = &trace.counts;
    let m = trace.label_shift;
    for i in 0..kk {
        for k in 0..=g.n_t {
            for j in 0..=g.n_x {
                let mut inp = c.alpha.get(i, k, j);
                for l in 0..kk {
                    inp += c.gamma_to[l].get(i + 1, k, j);
                }
                let r = c.xi.get(i, k, j) - (inp - c.beta.get(i, k, j));
                rep.field_balance.record(r.abs(), 0.0, || format!("balance: node {i}, t index {k}, x index {j}"));
                let want = if j == g.n_x {
                    c.beta_s.total(i, k) - c.busy.total(i, k)
                } else if j >= m {
                    c.beta_s.get(i, k, j - m) - c.busy.get(i, k, j - m)
                } else {
                    0.0
                };
                rep.gamma_beta.record((c.gamma.get(i, k, j) - want).abs(), 0.0, || format!("gamma/beta: node {i}, t index {k}, x index {j}"));
            }
            if hard {
                let s = c.min_queued_slack.get(i, k);
                rep.sampled_hardness.record(if s > 0.0 { 0.0 } else { 1.0 }, 0.0, || format!("node {i}: queued job with deadline <= t at t index {k}"));
            }
        }
    }
    Ok(rep)
}

/// `ē^N = (β^s[0,∞) + ι^N − N μ) / N` on the grid.
pub fn capacity_error(trace: &SimTrace) -> VecPath {
    let c = &trace.counts;
    let nf = trace.n as f64;
    VecPath::from_fn(*trace.grid(), trace.k(), |i, k| (c.beta_s.total(i, k) + c.iota.get(i, k) - c.mu.get(i, k)) / nf)
}

/// Largest deviation of `N ē^N` from `−1 + B + S(T^N) − T^N`, with the renewal counting
/// process `S` rebuilt from the drawn service requirements (`S(0) = 1`).
pub fn capacity_error_identity(trace: &SimTrace) -> f64 {
    let c = &trace.counts;
    let e = capacity_error(trace);
    let nf = trace.n as f64;
    let mut worst = 0.0f64;
    for i in 0..trace.k() {
        let mut prefix = Vec::with_capacity(trace.requirements[i].len());
        let mut s = 0.0;
        for v in &trace.requirements[i] {
            s += v;
            prefix.push(s);
        }
        for k in 0..=trace.grid().n_t {
            let t_eff = c.effort.get(i, k);
            let renewals = 1.0 + prefix.partition_point(|&p| p <= t_eff * (1.0 + 1e-12) + 1e-12) as f64;
            let rhs = -1.0 + c.busy.total(i, k) + renewals - t_eff;
            worst = worst.max((nf * e.get(i, k) - rhs).abs());
        }
    }
    worst
}

/// `Ē^{ij,N}(t,x) = (γ^{ij}_t[0,x] − P_ij γ^i_t[0,x]) / N`; entry `i` has component `j`.
pub fn routing_error_field(trace: &SimTrace) -> Vec<GriddedMeasurePath> {
    let kk = trace.k();
    let g = *trace.grid();
    let nf = trace.n as f64;
    (0..kk)
        .map(|i| {
            let mut f = GriddedMeasurePath::zeros(g, kk);
            for j in 0..kk {
                let p = trace.routing.p(i, j);
                for k in 0..=g.n_t {
                    for x in 0..=g.n_x {
                        let v = trace.counts.gamma_to[i].get(j + 1, k, x) - p * trace.counts.gamma.get(i, k, x);
                        f.set(j, k, x, v / nf);
                    }
                }
            }
            f
        })
        .collect()
}
