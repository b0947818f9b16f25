//! Fluid discrete-event simulation of file downloads split across a macro
//! sector and a small cell.
//!
//! Files arrive per UE as a Poisson process and are served FIFO, one
//! head-of-line file per UE at a time. Between events every leg drains at a
//! constant rate. On every event (arrival, leg completion, backhaul gate
//! opening, optional periodic timer) all sectors are re-allocated under the
//! configured policy and the remaining bits of split files are re-split.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::allocator::{self, effective_rate, opt_alloc, split_ratio, UeId, UeLinkState};
use crate::baselines::{route_for, Policy, PolicyConfig, Route};
use crate::config::{RadioConfig, ScenarioConfig, SimulationConfig, TopologyConfig};
use crate::error::{AllocError, Result, SimError};
use crate::metrics::MetricsReport;
use crate::radio::{self, Topology, UeLink};

/// Leftover bits below this are treated as delivered.
const EPS_BITS: f64 = 1e-6;

/// Tolerance on snapshot sum-log comparisons.
const OBJECTIVE_TOL: f64 = 1e-6;

/// One point of an experiment: a single load, delay and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: TopologyConfig,
    pub radio: RadioConfig,
    pub ue_per_sector: usize,
    pub mean_interarrival_s: f64,
    pub file_size_bits: f64,
    pub policy: PolicyConfig,
    pub backhaul_delay_s: f64,
    pub sim: SimulationConfig,
}

impl Scenario {
    /// The scenario for one sweep point of `cfg`.
    pub fn from_config(cfg: &ScenarioConfig, policy: Policy, ue_per_sector: usize, delay_ms: f64) -> Self {
        Self {
            topology: cfg.topology.clone(),
            radio: cfg.radio.clone(),
            ue_per_sector,
            mean_interarrival_s: cfg.traffic.mean_interarrival_s,
            file_size_bits: cfg.traffic.file_size_bits,
            policy: PolicyConfig {
                policy,
                wp_snr_threshold_db: cfg.policy.wp_snr_threshold_db,
                rel12_sinr_threshold_db: cfg.policy.rel12_sinr_threshold_db,
            },
            backhaul_delay_s: delay_ms / 1000.0,
            sim: cfg.simulation.clone(),
        }
    }

    pub fn horizon_s(&self) -> f64 {
        self.sim.warmup_s + self.sim.measured_s + self.sim.drain_s
    }
}

/// One file download.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub flow_id: u64,
    pub ue_id: usize,
    pub arrival_s: f64,
    pub size_bits: f64,
    /// Bits delivered over the macro leg.
    pub macro_bits: f64,
    /// Bits delivered over the small-cell leg.
    pub smallcell_bits: f64,
    /// When the small-cell leg may start serving (first small-cell
    /// assignment plus the backhaul delay).
    pub smallcell_available_s: Option<f64>,
    pub completion_s: Option<f64>,
    /// Arrived inside the measured window.
    pub measured: bool,
}

impl FlowRecord {
    pub fn throughput_bps(&self) -> Option<f64> {
        self.completion_s.map(|c| self.size_bits / (c - self.arrival_s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time_s: f64,
    pub ue: usize,
}

/// Poisson file arrivals of one UE on `[0, duration_s)`, drawn from the
/// `(seed, ue_id)` substream.
pub fn arrivals(ue_id: usize, seed: u64, duration_s: f64, mean_interarrival_s: f64) -> Vec<f64> {
    assert!(duration_s > 0.0 && mean_interarrival_s > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ue_id as u64);
    let exp = Exp::new(1.0 / mean_interarrival_s).expect("positive rate");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(&mut rng);
        if t >= duration_s {
            return out;
        }
        out.push(t);
    }
}

/// Arrivals of all `num_ues` UEs merged in time order.
pub fn merged_arrivals(num_ues: usize, seed: u64, duration_s: f64, mean_interarrival_s: f64) -> Vec<Arrival> {
    let mut all: Vec<Arrival> = (0..num_ues)
        .flat_map(|ue| {
            arrivals(ue, seed, duration_s, mean_interarrival_s)
                .into_iter()
                .map(move |time_s| Arrival { time_s, ue })
        })
        .collect();
    all.sort_by(|a, b| a.time_s.total_cmp(&b.time_s).then(a.ue.cmp(&b.ue)));
    all
}

/// A UE with pending traffic, as seen by the sector scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorUe {
    pub ue_id: usize,
    pub macro_peak_bps: f64,
    /// Small-cell rate used for the allocation decision.
    pub smallcell_rate_bps: f64,
    /// Backhaul delay still ahead of the small-cell leg.
    pub delay_s: f64,
    /// Unserved bits of the head-of-line file.
    pub remaining_bits: f64,
    /// Whole-file route under the association baselines.
    pub route: Option<Route>,
}

/// Macro share and split decided for one UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegPlan {
    pub alpha: f64,
    /// Fraction of the remaining bits put on the macro leg.
    pub macro_fraction: f64,
}

impl LegPlan {
    pub fn macro_rate(&self, macro_peak_bps: f64) -> f64 {
        self.alpha * macro_peak_bps
    }
}

/// Macro shares and splits for the active UEs of one sector.
///
/// Proposed: water-filling over `r_eff / p`, split in proportion to the rates.
/// DE: equal shares, delay-equalizing split. WP/Rel12: equal shares among
/// macro-routed UEs, no split.
pub fn sector_reallocate(policy: Policy, ues: &[SectorUe]) -> std::result::Result<Vec<LegPlan>, AllocError> {
    if ues.is_empty() {
        return Ok(Vec::new());
    }
    match policy {
        Policy::Proposed => {
            let states: Vec<UeLinkState> = ues.iter().map(link_state).collect();
            let alphas = match opt_alloc(&states) {
                Ok(a) => a.fractions,
                Err(AllocError::NoMacroCapacity) => vec![0.0; ues.len()],
                Err(e) => return Err(e),
            };
            ues.iter()
                .zip(states.iter().zip(alphas))
                .map(|(u, (s, alpha))| {
                    let r_eff = s.effective_rate()?;
                    Ok(LegPlan {
                        alpha,
                        macro_fraction: split_ratio(alpha, u.macro_peak_bps, r_eff)?,
                    })
                })
                .collect()
        }
        Policy::De => {
            let alpha = equal_share(ues.iter().filter(|u| u.macro_peak_bps > 0.0).count());
            ues.iter()
                .map(|u| {
                    let alpha = if u.macro_peak_bps > 0.0 { alpha } else { 0.0 };
                    Ok(LegPlan {
                        alpha,
                        macro_fraction: allocator::de_split(
                            alpha,
                            u.macro_peak_bps,
                            u.smallcell_rate_bps,
                            u.delay_s,
                            u.remaining_bits,
                        )?,
                    })
                })
                .collect()
        }
        Policy::Wp | Policy::Rel12 => {
            let on_macro = |u: &SectorUe| u.route == Some(Route::MacroOnly);
            let alpha = equal_share(ues.iter().filter(|u| on_macro(u)).count());
            Ok(ues
                .iter()
                .map(|u| {
                    if on_macro(u) {
                        LegPlan {
                            alpha,
                            macro_fraction: 1.0,
                        }
                    } else {
                        LegPlan {
                            alpha: 0.0,
                            macro_fraction: 0.0,
                        }
                    }
                })
                .collect())
        }
    }
}

fn equal_share(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 / n as f64
    }
}

fn link_state(u: &SectorUe) -> UeLinkState {
    UeLinkState {
        ue_id: UeId(u.ue_id as u64),
        macro_peak_bps: u.macro_peak_bps,
        smallcell_rate_bps: u.smallcell_rate_bps,
        backhaul_delay_s: u.delay_s,
        file_size_bits: u.remaining_bits,
    }
}

/// Per-event comparison of the proportional-fair allocation with equal
/// shares and with DE on the same snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SnapshotAudit {
    pub snapshots: u64,
    pub violations_vs_equal_share: u64,
    pub violations_vs_de: u64,
}

impl SnapshotAudit {
    fn check(&mut self, ues: &[SectorUe], plans: &[LegPlan]) -> std::result::Result<(), AllocError> {
        let macro_ues = ues.iter().filter(|u| u.macro_peak_bps > 0.0).count();
        if macro_ues == 0 {
            return Ok(());
        }
        let equal = 1.0 / macro_ues as f64;
        let (mut proposed, mut equal_share, mut de) = (0.0, 0.0, 0.0);
        for (u, plan) in ues.iter().zip(plans) {
            let r_eff = effective_rate(u.smallcell_rate_bps, u.delay_s, u.remaining_bits)?;
            let alpha_eq = if u.macro_peak_bps > 0.0 { equal } else { 0.0 };
            proposed += (r_eff + plan.alpha * u.macro_peak_bps).ln();
            equal_share += (r_eff + alpha_eq * u.macro_peak_bps).ln();
            // DE's delivered rate: file bits over its min-max completion time.
            let macro_rate = alpha_eq * u.macro_peak_bps;
            let x = allocator::de_split(alpha_eq, u.macro_peak_bps, u.smallcell_rate_bps, u.delay_s, u.remaining_bits)?;
            let t = allocator::split_completion_time(x, macro_rate, u.smallcell_rate_bps, u.delay_s, u.remaining_bits);
            de += (u.remaining_bits / t).ln();
        }
        self.snapshots += 1;
        if proposed < equal_share - OBJECTIVE_TOL {
            self.violations_vs_equal_share += 1;
        }
        if proposed < de - OBJECTIVE_TOL {
            self.violations_vs_de += 1;
        }
        Ok(())
    }
}

/// Static inputs of one engine run.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineParams {
    pub policy: PolicyConfig,
    pub backhaul_delay_s: f64,
    pub file_size_bits: f64,
    pub warmup_s: f64,
    pub measured_s: f64,
    pub drain_s: f64,
    pub reallocation_period_s: Option<f64>,
    pub feedback_lag: bool,
    pub max_events: u64,
    pub trace: bool,
}

impl EngineParams {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            policy: s.policy,
            backhaul_delay_s: s.backhaul_delay_s,
            file_size_bits: s.file_size_bits,
            warmup_s: s.sim.warmup_s,
            measured_s: s.sim.measured_s,
            drain_s: s.sim.drain_s,
            reallocation_period_s: s.sim.reallocation_period_ms.map(|ms| ms / 1000.0),
            feedback_lag: s.sim.feedback_lag,
            max_events: s.sim.max_events,
            trace: false,
        }
    }

    fn measure_end(&self) -> f64 {
        self.warmup_s + self.measured_s
    }
}

/// What a run produces besides the per-flow records.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutput {
    pub flows: Vec<FlowRecord>,
    /// Busy-time fraction of each macro sector over the measured window.
    pub macro_utilization: Vec<f64>,
    /// Busy-time fraction of each AP over the measured window.
    pub smallcell_utilization: Vec<f64>,
    pub audit: SnapshotAudit,
    pub events: u64,
    pub end_time_s: f64,
    /// `time,kind,flow_id,ue_id,detail` lines when tracing is on.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Arrival,
    LegCompletion,
    ReallocationDue,
}

impl EventKind {
    fn name(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::LegCompletion => "leg_completion",
            EventKind::ReallocationDue => "reallocation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leg {
    Macro,
    SmallCell,
}

/// Events ordered by time, then kind, then flow id.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    kind: EventKind,
    flow_id: u64,
}

impl Event {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.flow_id.cmp(&other.flow_id))
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so that `BinaryHeap` pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Time-ordered queue of pending timer events.
#[derive(Debug, Default)]
struct EventQueue {
    heap: BinaryHeap<Event>,
}

impl EventQueue {
    fn push(&mut self, time: f64, kind: EventKind, flow_id: u64) {
        self.heap.push(Event { time, kind, flow_id });
    }

    fn peek(&self) -> Option<Event> {
        self.heap.peek().copied()
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }
}

#[derive(Debug, Clone)]
struct FlowState {
    record: FlowRecord,
    rem_macro: f64,
    rem_sc: f64,
    route: Option<Route>,
}

impl FlowState {
    fn remaining(&self) -> f64 {
        self.rem_macro + self.rem_sc
    }
}

#[derive(Debug, Clone, Default)]
struct UeState {
    queue: VecDeque<usize>,
    macro_rate: f64,
    sc_rate: f64,
}

/// Step history of an AP's active-user count, for lagged rate feedback.
#[derive(Debug, Clone, Default)]
struct ShareHistory {
    steps: Vec<(f64, usize)>,
}

impl ShareHistory {
    fn record(&mut self, time: f64, count: usize) {
        if self.steps.last().map(|s| s.1) != Some(count) {
            self.steps.push((time, count));
        }
    }

    fn at(&self, time: f64) -> usize {
        let idx = self.steps.partition_point(|s| s.0 <= time);
        if idx == 0 {
            0
        } else {
            self.steps[idx - 1].1
        }
    }
}

/// The event loop over a fixed set of UE links.
pub struct Engine {
    links: Vec<UeLink>,
    sector_members: Vec<Vec<usize>>,
    num_aps: usize,
    params: EngineParams,
    now: f64,
    flows: Vec<FlowState>,
    ues: Vec<UeState>,
    timers: EventQueue,
    next_completion: Option<(Event, usize, Leg)>,
    sector_busy: Vec<bool>,
    ap_busy: Vec<bool>,
    macro_busy_time: Vec<f64>,
    ap_busy_time: Vec<f64>,
    share_history: Vec<ShareHistory>,
    audit: SnapshotAudit,
    pending_measured: usize,
    trace: Vec<String>,
}

impl Engine {
    pub fn new(links: Vec<UeLink>, num_sectors: usize, num_aps: usize, params: EngineParams) -> Result<Self> {
        let mut sector_members = vec![Vec::new(); num_sectors];
        for (ue, link) in links.iter().enumerate() {
            if !link.has_coverage() {
                return Err(SimError::Infeasible { ue_id: ue });
            }
            if link.serving_sector >= num_sectors {
                return Err(SimError::InvalidScenario(format!(
                    "UE {ue} served by unknown sector {}",
                    link.serving_sector
                )));
            }
            if let Some(ap) = link.covering_ap {
                if ap >= num_aps {
                    return Err(SimError::InvalidScenario(format!("UE {ue} covered by unknown AP {ap}")));
                }
            }
            sector_members[link.serving_sector].push(ue);
        }
        let p = &params;
        if !(p.backhaul_delay_s >= 0.0 && p.backhaul_delay_s.is_finite())
            || !(p.file_size_bits > 0.0 && p.file_size_bits.is_finite())
            || !(p.measured_s > 0.0)
            || !(p.warmup_s >= 0.0)
            || !(p.drain_s >= 0.0)
            || p.reallocation_period_s.is_some_and(|t| !(t > 0.0))
        {
            return Err(SimError::InvalidScenario(format!("invalid engine parameters {params:?}")));
        }
        Ok(Self {
            ues: vec![UeState::default(); links.len()],
            links,
            sector_members,
            num_aps,
            params,
            now: 0.0,
            flows: Vec::new(),
            timers: EventQueue::default(),
            next_completion: None,
            sector_busy: vec![false; num_sectors],
            ap_busy: vec![false; num_aps],
            macro_busy_time: vec![0.0; num_sectors],
            ap_busy_time: vec![0.0; num_aps],
            share_history: vec![ShareHistory::default(); num_aps],
            audit: SnapshotAudit::default(),
            pending_measured: 0,
            trace: Vec::new(),
        })
    }

    fn emit(&mut self, kind: &str, flow_id: Option<u64>, ue: Option<usize>, detail: String) {
        if self.params.trace {
            self.trace.push(format!(
                "{:.9},{kind},{},{},{detail}",
                self.now,
                flow_id.map(|f| f.to_string()).unwrap_or_default(),
                ue.map(|u| u.to_string()).unwrap_or_default()
            ));
        }
    }

    /// Runs the arrivals (sorted by time) to completion.
    pub fn run(mut self, arrivals: &[Arrival]) -> Result<EngineOutput> {
        let horizon = self.params.measure_end() + self.params.drain_s;
        if let Some(period) = self.params.reallocation_period_s {
            self.timers.push(period, EventKind::ReallocationDue, u64::MAX);
        }
        let mut next_arrival = 0;
        let mut events = 0u64;

        loop {
            let arrival_event = arrivals.get(next_arrival).map(|a| Event {
                time: a.time_s,
                kind: EventKind::Arrival,
                flow_id: self.flows.len() as u64,
            });
            let candidates = [
                arrival_event,
                self.next_completion.map(|c| c.0),
                self.timers.peek(),
            ];
            let Some(event) = candidates
                .into_iter()
                .flatten()
                .min_by(|a, b| a.key_cmp(b))
            else {
                break;
            };
            if event.time > horizon {
                break;
            }
            if self.now >= self.params.measure_end() && self.pending_measured == 0 {
                break;
            }
            events += 1;
            if events > self.params.max_events {
                return Err(SimError::EventLimit {
                    limit: self.params.max_events,
                    time_s: self.now,
                });
            }

            self.advance(event.time);
            match event.kind {
                EventKind::Arrival => {
                    let a = arrivals[next_arrival];
                    next_arrival += 1;
                    self.arrive(a);
                }
                EventKind::LegCompletion => {
                    let (_, flow, leg) = self.next_completion.take().expect("scheduled completion");
                    let f = &mut self.flows[flow];
                    match leg {
                        Leg::Macro => {
                            f.record.macro_bits += f.rem_macro;
                            f.rem_macro = 0.0;
                        }
                        Leg::SmallCell => {
                            f.record.smallcell_bits += f.rem_sc;
                            f.rem_sc = 0.0;
                        }
                    }
                    let ue = f.record.ue_id;
                    self.emit(EventKind::LegCompletion.name(), Some(flow as u64), Some(ue), format!("{leg:?}"));
                }
                EventKind::ReallocationDue => {
                    self.timers.pop();
                    if event.flow_id == u64::MAX {
                        let period = self.params.reallocation_period_s.expect("periodic timer");
                        self.timers.push(event.time + period, EventKind::ReallocationDue, u64::MAX);
                        self.emit(EventKind::ReallocationDue.name(), None, None, "periodic".to_string());
                    } else {
                        let ue = self.flows[event.flow_id as usize].record.ue_id;
                        self.emit(EventKind::ReallocationDue.name(), Some(event.flow_id), Some(ue), "backhaul_gate".to_string());
                    }
                }
            }
            self.complete_finished();
            self.reallocate()?;
        }

        let window = self.params.measured_s;
        Ok(EngineOutput {
            flows: self.flows.into_iter().map(|f| f.record).collect(),
            macro_utilization: self.macro_busy_time.iter().map(|t| t / window).collect(),
            smallcell_utilization: self.ap_busy_time.iter().map(|t| t / window).collect(),
            audit: self.audit,
            events,
            end_time_s: self.now,
            trace: self.trace,
        })
    }

    fn advance(&mut self, to: f64) {
        let dt = to - self.now;
        debug_assert!(dt >= 0.0, "time went backwards: {} -> {to}", self.now);
        if dt > 0.0 {
            let (w0, w1) = (self.params.warmup_s, self.params.measure_end());
            let overlap = (to.min(w1) - self.now.max(w0)).max(0.0);
            if overlap > 0.0 {
                for (s, busy) in self.sector_busy.iter().enumerate() {
                    if *busy {
                        self.macro_busy_time[s] += overlap;
                    }
                }
                for (a, busy) in self.ap_busy.iter().enumerate() {
                    if *busy {
                        self.ap_busy_time[a] += overlap;
                    }
                }
            }
            for ue in &self.ues {
                let Some(&head) = ue.queue.front() else { continue };
                let f = &mut self.flows[head];
                let served_macro = (ue.macro_rate * dt).min(f.rem_macro);
                let served_sc = (ue.sc_rate * dt).min(f.rem_sc);
                f.rem_macro -= served_macro;
                f.rem_sc -= served_sc;
                f.record.macro_bits += served_macro;
                f.record.smallcell_bits += served_sc;
            }
        }
        self.now = to;
    }

    fn arrive(&mut self, a: Arrival) {
        let flow_id = self.flows.len();
        let measured = a.time_s >= self.params.warmup_s && a.time_s < self.params.measure_end();
        let link = self.links[a.ue];
        let size = self.params.file_size_bits;
        let mut route = route_for(&self.params.policy, link.macro_sinr_db, link.ap_snr_db);
        // A route the UE cannot use falls back to the other RAT.
        route = route.map(|r| match r {
            Route::MacroOnly if link.macro_peak_bps == 0.0 => Route::SmallCellOnly,
            Route::SmallCellOnly if link.ap_solo_rate_bps == 0.0 => Route::MacroOnly,
            r => r,
        });
        let mut record = FlowRecord {
            flow_id: flow_id as u64,
            ue_id: a.ue,
            arrival_s: a.time_s,
            size_bits: size,
            macro_bits: 0.0,
            smallcell_bits: 0.0,
            smallcell_available_s: None,
            completion_s: None,
            measured,
        };
        let (rem_macro, rem_sc) = match route {
            Some(Route::SmallCellOnly) => {
                // Whole file crosses the backhaul on arrival.
                let gate = a.time_s + self.params.backhaul_delay_s;
                record.smallcell_available_s = Some(gate);
                if gate > a.time_s {
                    self.timers.push(gate, EventKind::ReallocationDue, flow_id as u64);
                }
                (0.0, size)
            }
            // Splitting policies start with everything at the macro buffer.
            _ => (size, 0.0),
        };
        self.flows.push(FlowState {
            record,
            rem_macro,
            rem_sc,
            route,
        });
        self.ues[a.ue].queue.push_back(flow_id);
        if measured {
            self.pending_measured += 1;
        }
        self.emit(EventKind::Arrival.name(), Some(flow_id as u64), Some(a.ue), format!("{route:?}"));
    }

    fn complete_finished(&mut self) {
        for ue in 0..self.ues.len() {
            let Some(&head) = self.ues[ue].queue.front() else { continue };
            let f = &mut self.flows[head];
            if f.rem_macro < EPS_BITS {
                f.record.macro_bits += f.rem_macro;
                f.rem_macro = 0.0;
            }
            if f.rem_sc < EPS_BITS {
                f.record.smallcell_bits += f.rem_sc;
                f.rem_sc = 0.0;
            }
            if f.rem_macro == 0.0 && f.rem_sc == 0.0 {
                f.record.completion_s = Some(self.now);
                if f.record.measured {
                    self.pending_measured -= 1;
                }
                self.ues[ue].queue.pop_front();
                self.ues[ue].macro_rate = 0.0;
                self.ues[ue].sc_rate = 0.0;
                let detail = format!(
                    "macro_bits={:.3};smallcell_bits={:.3}",
                    self.flows[head].record.macro_bits, self.flows[head].record.smallcell_bits
                );
                self.emit("flow_completion", Some(head as u64), Some(ue), detail);
            }
        }
    }

    fn gate_open(&self, flow: usize) -> bool {
        self.flows[flow]
            .record
            .smallcell_available_s
            .is_some_and(|g| g <= self.now)
    }

    /// Whether this UE's head-of-line file uses (or will immediately use) its AP.
    fn on_smallcell(&self, ue: usize, head: usize) -> bool {
        let link = &self.links[ue];
        if link.covering_ap.is_none() || link.ap_solo_rate_bps == 0.0 {
            return false;
        }
        let f = &self.flows[head];
        match f.route {
            Some(Route::SmallCellOnly) => self.gate_open(head) && f.rem_sc > 0.0,
            Some(Route::MacroOnly) => false,
            None => match f.record.smallcell_available_s {
                Some(g) => g <= self.now,
                None => self.params.backhaul_delay_s == 0.0,
            },
        }
    }

    fn reallocate(&mut self) -> Result<()> {
        let delay = self.params.backhaul_delay_s;
        let policy = self.params.policy.policy;

        // Round-robin population of each AP.
        let mut sharing = vec![0usize; self.num_aps];
        let mut transmitting = vec![false; self.ues.len()];
        for ue in 0..self.ues.len() {
            if let Some(&head) = self.ues[ue].queue.front() {
                if self.on_smallcell(ue, head) {
                    transmitting[ue] = true;
                    sharing[self.links[ue].covering_ap.expect("covered")] += 1;
                }
            }
        }
        if self.params.feedback_lag {
            for (ap, &n) in sharing.iter().enumerate() {
                self.share_history[ap].record(self.now, n);
            }
        }
        for (ap, &n) in sharing.iter().enumerate() {
            self.ap_busy[ap] = n > 0;
        }

        let mut sector_ues = Vec::new();
        let mut heads = Vec::new();
        for sector in 0..self.sector_members.len() {
            sector_ues.clear();
            heads.clear();
            for &ue in &self.sector_members[sector] {
                let Some(&head) = self.ues[ue].queue.front() else { continue };
                let link = &self.links[ue];
                let f = &self.flows[head];
                let reported_sharing = match link.covering_ap {
                    None => 0,
                    Some(ap) => {
                        let n = if self.params.feedback_lag {
                            self.share_history[ap].at(self.now - delay)
                        } else {
                            sharing[ap]
                        };
                        // A UE not yet on the AP would join its round robin.
                        if transmitting[ue] { n } else { n + 1 }
                    }
                };
                let delay_s = match f.record.smallcell_available_s {
                    Some(g) => (g - self.now).max(0.0),
                    None => delay,
                };
                sector_ues.push(SectorUe {
                    ue_id: ue,
                    macro_peak_bps: link.macro_peak_bps,
                    smallcell_rate_bps: link.ap_solo_rate_bps / reported_sharing.max(1) as f64,
                    delay_s,
                    remaining_bits: f.remaining(),
                    route: f.route,
                });
                heads.push(head);
            }

            let plans = sector_reallocate(policy, &sector_ues)?;
            if policy == Policy::Proposed && !sector_ues.is_empty() {
                self.audit.check(&sector_ues, &plans)?;
            }

            let mut busy = false;
            for ((u, plan), &head) in sector_ues.iter().zip(&plans).zip(&heads) {
                let ue = u.ue_id;
                let link = self.links[ue];
                if policy.splits() {
                    let remaining = self.flows[head].remaining();
                    let f = &mut self.flows[head];
                    f.rem_macro = plan.macro_fraction * remaining;
                    f.rem_sc = remaining - f.rem_macro;
                    if f.rem_sc > 0.0 && f.record.smallcell_available_s.is_none() {
                        let gate = self.now + delay;
                        f.record.smallcell_available_s = Some(gate);
                        if delay > 0.0 {
                            self.timers.push(gate, EventKind::ReallocationDue, head as u64);
                        }
                    }
                }
                let macro_rate = plan.macro_rate(link.macro_peak_bps);
                let sc_rate = match link.covering_ap {
                    Some(ap) if self.gate_open(head) && self.flows[head].rem_sc > 0.0 => {
                        link.ap_solo_rate_bps / sharing[ap].max(1) as f64
                    }
                    _ => 0.0,
                };
                let state = &mut self.ues[ue];
                state.macro_rate = if self.flows[head].rem_macro > 0.0 { macro_rate } else { 0.0 };
                state.sc_rate = sc_rate;
                busy |= state.macro_rate > 0.0;
            }
            self.sector_busy[sector] = busy;
        }

        self.schedule_next_completion();
        Ok(())
    }

    fn schedule_next_completion(&mut self) {
        let mut best: Option<(Event, usize, Leg)> = None;
        for ue in &self.ues {
            let Some(&head) = ue.queue.front() else { continue };
            let f = &self.flows[head];
            for (rate, rem, leg) in [
                (ue.macro_rate, f.rem_macro, Leg::Macro),
                (ue.sc_rate, f.rem_sc, Leg::SmallCell),
            ] {
                if rate > 0.0 && rem > 0.0 {
                    let ev = Event {
                        time: self.now + rem / rate,
                        kind: EventKind::LegCompletion,
                        flow_id: head as u64,
                    };
                    if best.as_ref().is_none_or(|b| ev.key_cmp(&b.0) == Ordering::Less) {
                        best = Some((ev, head, leg));
                    }
                }
            }
        }
        self.next_completion = best;
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub flows: Vec<FlowRecord>,
    pub audit: SnapshotAudit,
    pub events: u64,
    pub trace: Vec<String>,
}

/// Drops the topology for `seed` and simulates `scenario` on it.
pub fn run(scenario: &Scenario, seed: u64) -> Result<SimOutput> {
    run_with(scenario, seed, false)
}

pub fn run_with(scenario: &Scenario, seed: u64, trace: bool) -> Result<SimOutput> {
    let topology = radio::generate_topology(&scenario.topology, &scenario.radio, scenario.ue_per_sector, seed)?;
    simulate_on(&topology, scenario, seed, trace)
}

/// Simulates `scenario` on an already generated topology.
pub fn simulate_on(topology: &Topology, scenario: &Scenario, seed: u64, trace: bool) -> Result<SimOutput> {
    if !(scenario.mean_interarrival_s > 0.0) {
        return Err(SimError::InvalidScenario("mean inter-arrival must be positive".into()));
    }
    let mut params = EngineParams::from_scenario(scenario);
    params.trace = trace;
    let engine = Engine::new(topology.links(), topology.num_sectors(), topology.small_cells.len(), params)?;
    let arrivals = merged_arrivals(
        topology.ues.len(),
        seed,
        scenario.horizon_s(),
        scenario.mean_interarrival_s,
    );
    let out = engine.run(&arrivals)?;
    let report = MetricsReport::from_flows(&out.flows, &out.macro_utilization, &out.smallcell_utilization);
    Ok(SimOutput {
        report,
        flows: out.flows,
        audit: out.audit,
        events: out.events,
        trace: out.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(sector: usize, p: f64, ap: Option<usize>, r: f64) -> UeLink {
        UeLink {
            serving_sector: sector,
            macro_sinr_db: 10.0,
            macro_peak_bps: p,
            covering_ap: ap,
            ap_snr_db: ap.map(|_| 20.0),
            ap_solo_rate_bps: r,
        }
    }

    fn params(policy: Policy, delay: f64) -> EngineParams {
        EngineParams {
            policy: PolicyConfig::new(policy),
            backhaul_delay_s: delay,
            file_size_bits: 4e6,
            warmup_s: 0.0,
            measured_s: 10.0,
            drain_s: 100.0,
            reallocation_period_s: None,
            feedback_lag: false,
            max_events: 1_000_000,
            trace: false,
        }
    }

    fn one_arrival(t: f64) -> Vec<Arrival> {
        vec![Arrival { time_s: t, ue: 0 }]
    }

    #[test]
    fn macro_only_single_flow() {
        let e = Engine::new(vec![link(0, 4e6, None, 0.0)], 1, 0, params(Policy::Proposed, 0.0)).unwrap();
        let out = e.run(&one_arrival(0.5)).unwrap();
        let f = &out.flows[0];
        assert_eq!(f.completion_s, Some(1.5));
        assert_eq!(f.throughput_bps(), Some(4e6));
        assert_eq!(f.macro_bits, 4e6);
    }

    #[test]
    fn aggregated_single_flow_gets_both_rates() {
        let e = Engine::new(vec![link(0, 3e6, Some(0), 5e6)], 1, 1, params(Policy::Proposed, 0.0)).unwrap();
        let out = e.run(&one_arrival(0.0)).unwrap();
        let tput = out.flows[0].throughput_bps().unwrap();
        assert!((tput - 8e6).abs() / 8e6 < 1e-9, "{tput}");
    }

    #[test]
    fn smallcell_only_flow_matches_effective_rate() {
        let (r, l, f) = (5e6, 0.02, 4e6);
        let e = Engine::new(vec![link(0, 0.0, Some(0), r)], 1, 1, params(Policy::Proposed, l)).unwrap();
        let out = e.run(&one_arrival(1.0)).unwrap();
        let rec = &out.flows[0];
        let done = rec.completion_s.unwrap();
        assert!((done - (1.0 + l + f / r)).abs() < 1e-12);
        let expected = effective_rate(r, l, f).unwrap();
        assert!((rec.throughput_bps().unwrap() - expected).abs() / expected < 1e-9);
        assert_eq!(rec.smallcell_available_s, Some(1.0 + l));
    }

    #[test]
    fn fifo_queue_serves_files_in_order() {
        let e = Engine::new(vec![link(0, 4e6, None, 0.0)], 1, 0, params(Policy::Wp, 0.0)).unwrap();
        let arrivals = vec![Arrival { time_s: 0.0, ue: 0 }, Arrival { time_s: 0.5, ue: 0 }];
        let out = e.run(&arrivals).unwrap();
        assert_eq!(out.flows[0].completion_s, Some(1.0));
        assert_eq!(out.flows[1].completion_s, Some(2.0));
    }

    #[test]
    fn equal_share_between_two_macro_ues() {
        let links = vec![link(0, 4e6, None, 0.0), link(0, 4e6, None, 0.0)];
        let e = Engine::new(links, 1, 0, params(Policy::Rel12, 0.0)).unwrap();
        let arrivals = vec![Arrival { time_s: 0.0, ue: 0 }, Arrival { time_s: 0.0, ue: 1 }];
        let out = e.run(&arrivals).unwrap();
        for f in &out.flows {
            assert!((f.completion_s.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_reallocate_examples() {
        assert!(sector_reallocate(Policy::Proposed, &[]).unwrap().is_empty());
        let u = SectorUe {
            ue_id: 0,
            macro_peak_bps: 1e7,
            smallcell_rate_bps: 2e6,
            delay_s: 0.0,
            remaining_bits: 4e6,
            route: None,
        };
        let one = sector_reallocate(Policy::Proposed, &[u]).unwrap();
        assert_eq!(one[0].alpha, 1.0);
        let same: Vec<_> = (0..4).map(|i| SectorUe { ue_id: i, ..u }).collect();
        for policy in [Policy::Proposed, Policy::De] {
            for plan in sector_reallocate(policy, &same).unwrap() {
                assert!((plan.alpha - 0.25).abs() < 1e-12);
            }
        }
        let routed: Vec<_> = (0..4)
            .map(|i| SectorUe {
                ue_id: i,
                route: Some(if i < 3 { Route::MacroOnly } else { Route::SmallCellOnly }),
                ..u
            })
            .collect();
        let plans = sector_reallocate(Policy::Wp, &routed).unwrap();
        assert!(plans[..3].iter().all(|p| (p.alpha - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(plans[3].alpha, 0.0);
    }

    #[test]
    fn arrivals_are_deterministic_and_independent() {
        let a = arrivals(3, 7, 100.0, 1.0);
        assert_eq!(a, arrivals(3, 7, 100.0, 1.0));
        assert_ne!(a, arrivals(4, 7, 100.0, 1.0));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn arrivals_mean_interarrival() {
        let a = arrivals(0, 2024, 1e5, 1.0);
        let n = a.len() as f64;
        let mean = a.last().unwrap() / n;
        assert!((mean - 1.0).abs() < 0.01, "{mean} over {n}");
    }

    #[test]
    fn rejects_uncovered_ue() {
        let bad = link(0, 0.0, None, 0.0);
        assert!(matches!(
            Engine::new(vec![bad], 1, 0, params(Policy::Wp, 0.0)),
            Err(SimError::Infeasible { ue_id: 0 })
        ));
    }

    #[test]
    fn event_limit_guard() {
        let mut p = params(Policy::Proposed, 0.0);
        p.max_events = 3;
        let e = Engine::new(vec![link(0, 4e6, None, 0.0)], 1, 0, p).unwrap();
        let arrivals: Vec<_> = (0..10).map(|i| Arrival { time_s: i as f64 * 0.1, ue: 0 }).collect();
        assert!(matches!(e.run(&arrivals), Err(SimError::EventLimit { .. })));
    }

    #[test]
    fn trace_lines_have_five_fields() {
        let mut p = params(Policy::Proposed, 0.01);
        p.trace = true;
        let e = Engine::new(vec![link(0, 4e6, Some(0), 4e6)], 1, 1, p).unwrap();
        let out = e.run(&one_arrival(0.0)).unwrap();
        assert!(!out.trace.is_empty());
        for line in &out.trace {
            assert_eq!(line.split(',').count(), 5, "{line}");
        }
    }

    #[test]
    fn share_history_lookup() {
        let mut h = ShareHistory::default();
        h.record(1.0, 2);
        h.record(2.0, 2);
        h.record(3.0, 1);
        assert_eq!(h.at(0.5), 0);
        assert_eq!(h.at(1.0), 2);
        assert_eq!(h.at(2.9), 2);
        assert_eq!(h.at(3.5), 1);
    }
}
