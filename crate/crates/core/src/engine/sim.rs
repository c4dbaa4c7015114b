//! The run loop: nodes, radios, clustering, routing and traffic wired
//! together over one event queue.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, Protocol, ScenarioConfig};
use super::rng::{fork, StreamLabel};
use super::scheduler::Scheduler;
use crate::clustering::{
    build_precinct_grid, compute_vid, elect_fusion_head, identify_gateways, reelection_check, score_precinct,
    CandidateScore, HelloPacket, Precinct, PrecinctGrid, PrecinctId, Reelection, Thresholds,
};
use crate::geom::Vec2;
use crate::metrics::{compute_network_lifetime, compute_pdf, NodeRecord, RunReport};
use crate::mobility::{relative_mobility, step_motion, MotionState, WaypointParams};
use crate::packet::Packet;
use crate::phy::energy::{charge_packet, Category, ChargeOutcome, Direction, EnergyLedger, RadioParams};
use crate::phy::mac::{Channel, MacParams, Reception, RetryDecision};
use crate::phy::{in_range, LinkModel};
use crate::routing::drain::{compute_readiness, update_drain_rate, DrainState};
use crate::routing::messages::{DaPacket, DataPacket, Readiness, RerrMessage};
use crate::routing::router::{LocalView, RerrAction, Router, RouterConfig, RrepAction, RreqAction};
use crate::routing::table::RouteUpdate;
use crate::routing::aggregate_count;
use crate::trace::{MaybeHops, Target, TraceEvent, TraceRecord};
use crate::NodeId;

#[derive(Debug, Clone)]
enum EventKind {
    MobilityTick,
    HelloTimer(NodeId),
    ElectionCheckTimer,
    DrainSampleTimer,
    MetricsTick,
    /// Start of a traffic period; draws that period's sensing events.
    DataGenTick,
    Sense { point: Vec2 },
    TxStart(NodeId),
    PacketArrival { sender: NodeId, slot: u64 },
    AggregationFlush(NodeId),
    /// A route discovery ran out of time.
    PacketTimeout { node: NodeId, destination: NodeId, token: u64 },
}

#[derive(Debug, Clone)]
struct Frame {
    target: Target,
    packet: Packet,
    bits: u64,
    attempt: u32,
    slot: u64,
    /// Data: nodes visited so far, ending with the sender. Route error: the
    /// upstream nodes still to be told, nearest last.
    trail: Vec<NodeId>,
    receivers: Vec<NodeId>,
}

#[derive(Debug, Clone)]
struct Pending {
    since: f64,
    packet: DataPacket,
}

#[derive(Debug, Clone, Copy)]
struct Discovery {
    attempts: u32,
    token: u64,
}

#[derive(Debug, Clone)]
struct Node {
    motion: MotionState,
    ledger: EnergyLedger,
    last_idle: f64,
    death_time: Option<f64>,
    precinct: PrecinctId,
    mobility: f64,
    p_fusion: f64,
    retired: bool,
    gateway: bool,
    drain: DrainState,
    consumed_at_sample: f64,
    router: Router,
    current: Option<Frame>,
    queue: VecDeque<Frame>,
    aggregation: Vec<DaPacket>,
    pending: Vec<Pending>,
    discoveries: BTreeMap<NodeId, Discovery>,
}

impl Node {
    fn alive(&self) -> bool {
        self.ledger.is_alive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    InFlight,
    Delivered,
    Dropped,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// Present when tracing was enabled.
    pub trace: Option<Vec<TraceRecord>>,
    /// Number of events dispatched.
    pub events: u64,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    radio: RadioParams,
    mac: MacParams,
    link: LinkModel,
    grid: PrecinctGrid,
    waypoints: WaypointParams,
    thresholds: Thresholds,
    sched: Scheduler<EventKind>,
    rng_mobility: ChaCha8Rng,
    rng_mac: ChaCha8Rng,
    rng_traffic: ChaCha8Rng,
    rng_timers: ChaCha8Rng,
    nodes: Vec<Node>,
    precincts: Vec<Precinct>,
    prev_positions: Vec<Vec2>,
    channel: Channel,
    status: BTreeMap<u64, Status>,
    next_packet_id: u64,
    next_token: u64,
    trace: Option<Vec<TraceRecord>>,
    rreq_floods: u64,
    collisions: u64,
    events: u64,
    alive_count: usize,
    last_death: f64,
}

/// Runs `cfg` to completion and returns its report.
pub fn run(cfg: &ScenarioConfig) -> Result<RunReport, ConfigError> {
    Ok(Simulation::new(cfg.clone())?.run().report)
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let link = LinkModel::new(cfg.radio_range, cfg.path_loss_alpha)
            .map_err(|e| ConfigError::Invalid { key: "radio_range", message: e.to_string() })?;
        let grid = PrecinctGrid::new(cfg.field_side, cfg.precinct_grid_dim)
            .map_err(|e| ConfigError::Invalid { key: "precinct_grid_dim", message: e.to_string() })?;
        let waypoints = WaypointParams {
            field_side: cfg.field_side,
            pause_time: cfg.pause_time,
            speed_min: cfg.speed_min,
            speed_max: cfg.speed_max,
        };
        let mut rng_placement = fork(cfg.rng_seed, StreamLabel::Placement);
        let router_cfg = RouterConfig::from_config(&cfg);
        let nodes: Vec<Node> = (0..cfg.node_count)
            .map(|i| {
                let p = waypoints.sample_point(&mut rng_placement);
                Node {
                    motion: MotionState::parked(p),
                    ledger: EnergyLedger::new(cfg.initial_energy),
                    last_idle: 0.0,
                    death_time: None,
                    precinct: grid.locate(p),
                    mobility: 0.0,
                    p_fusion: 0.0,
                    retired: false,
                    gateway: false,
                    drain: DrainState::new(cfg.drain_ewma_alpha),
                    consumed_at_sample: 0.0,
                    router: Router::new(NodeId::from_index(i), router_cfg),
                    current: None,
                    queue: VecDeque::new(),
                    aggregation: Vec::new(),
                    pending: Vec::new(),
                    discoveries: BTreeMap::new(),
                }
            })
            .collect();
        let positions: Vec<Vec2> = nodes.iter().map(|n| n.motion.position).collect();
        let precincts = build_precinct_grid(cfg.field_side, cfg.precinct_grid_dim, &positions)
            .map_err(|e| ConfigError::Invalid { key: "precinct_grid_dim", message: e.to_string() })?;
        Ok(Simulation {
            radio: RadioParams::from_config(&cfg),
            mac: MacParams { slot: cfg.mac_slot, max_retries: cfg.mac_max_retries, backoff_slots: cfg.mac_backoff_slots },
            link,
            grid,
            waypoints,
            thresholds: Thresholds { energy: cfg.e_threshold, range: cfg.r_threshold, mobility: cfg.m_threshold },
            sched: Scheduler::new(),
            rng_mobility: fork(cfg.rng_seed, StreamLabel::Mobility),
            rng_mac: fork(cfg.rng_seed, StreamLabel::Mac),
            rng_traffic: fork(cfg.rng_seed, StreamLabel::Traffic),
            rng_timers: fork(cfg.rng_seed, StreamLabel::Timers),
            alive_count: nodes.iter().filter(|n| n.alive()).count(),
            prev_positions: positions,
            nodes,
            precincts,
            channel: Channel::new(),
            status: BTreeMap::new(),
            next_packet_id: 0,
            next_token: 0,
            trace: None,
            rreq_floods: 0,
            collisions: 0,
            events: 0,
            last_death: 0.0,
            cfg,
        })
    }

    /// Keeps the full event log in memory.
    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on.then(Vec::new);
        self
    }

    fn now(&self) -> f64 {
        self.sched.now()
    }

    fn at(&mut self, time: f64, kind: EventKind) {
        // Every caller schedules at or after the current time.
        self.sched.schedule(time.max(self.now()), kind).expect("event not in the past");
    }

    fn log(&mut self, time: f64, event: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord { time, event });
        }
    }

    fn pos(&self, n: NodeId) -> Vec2 {
        self.nodes[n.index()].motion.position
    }

    fn alive(&self, n: NodeId) -> bool {
        self.nodes[n.index()].alive()
    }

    fn precinct_index(&self, id: PrecinctId) -> usize {
        self.grid.index(id)
    }

    fn is_head(&self, n: NodeId) -> bool {
        let node = &self.nodes[n.index()];
        self.precincts[self.precinct_index(node.precinct)].fusion_head == Some(n)
    }

    fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    pub fn run(mut self) -> RunOutput {
        self.bootstrap();
        let end = self.cfg.sim_duration;
        while self.alive_count > 0 {
            match self.sched.peek_time() {
                Some(t) if t <= end => {}
                _ => break,
            }
            let ev = self.sched.pop().expect("peeked");
            self.events += 1;
            self.dispatch(ev.kind);
        }
        let end_time = if self.alive_count == 0 { self.last_death.min(end) } else { end };
        for n in self.node_ids().collect::<Vec<_>>() {
            self.accrue_idle(n, end_time);
        }
        let end_time = if self.alive_count == 0 { self.last_death.min(end) } else { end };
        self.finish(end_time)
    }

    fn bootstrap(&mut self) {
        let ids: Vec<NodeId> = self.node_ids().collect();
        self.refresh_gateways();
        self.ensure_heads();
        for &n in &ids {
            let phase = self.rng_timers_draw();
            self.at(phase, EventKind::HelloTimer(n));
        }
        self.at(self.cfg.mobility_tick, EventKind::MobilityTick);
        self.at(self.cfg.election_check_period, EventKind::ElectionCheckTimer);
        self.at(self.cfg.drain_sample_period, EventKind::DrainSampleTimer);
        self.at(self.cfg.metrics_tick, EventKind::MetricsTick);
        self.at(0.0, EventKind::DataGenTick);
    }

    fn rng_timers_draw(&mut self) -> f64 {
        let period = self.cfg.hello_period;
        self.rng_timers.gen_range(0.0..period)
    }
}

// Event dispatch and periodic upkeep.
impl Simulation {
    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::MobilityTick => self.on_mobility_tick(),
            EventKind::HelloTimer(n) => self.on_hello(n),
            EventKind::ElectionCheckTimer => self.on_election_check(),
            EventKind::DrainSampleTimer => self.on_drain_sample(),
            EventKind::MetricsTick => self.on_metrics_tick(),
            EventKind::DataGenTick => self.on_data_gen_tick(),
            EventKind::Sense { point } => self.on_sense(point),
            EventKind::TxStart(n) => self.on_tx_start(n),
            EventKind::PacketArrival { sender, slot } => self.on_arrival(sender, slot),
            EventKind::AggregationFlush(n) => self.on_aggregation_flush(n),
            EventKind::PacketTimeout { node, destination, token } => self.on_discovery_timeout(node, destination, token),
        }
    }

    fn on_mobility_tick(&mut self) {
        let now = self.now();
        let dt = self.cfg.mobility_tick;
        let start = now - dt;
        // Every node moves, dead or alive, so that positions and the
        // mobility stream do not depend on the protocol under test.
        let mut previous = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            previous.push(self.nodes[i].motion.position);
            let next = step_motion(&self.nodes[i].motion, start, dt, &self.waypoints, &mut self.rng_mobility);
            self.nodes[i].motion = next;
        }
        self.prev_positions = previous;
        for n in self.node_ids().collect::<Vec<_>>() {
            self.accrue_idle(n, now);
        }
        self.refresh_membership();
        self.refresh_mobility_metric();
        self.refresh_gateways();
        self.ensure_heads();
        self.at(now + dt, EventKind::MobilityTick);
    }

    fn refresh_membership(&mut self) {
        for i in 0..self.nodes.len() {
            if !self.nodes[i].alive() {
                continue;
            }
            let n = NodeId::from_index(i);
            let old = self.nodes[i].precinct;
            let new = self.grid.locate(self.nodes[i].motion.position);
            if old == new {
                continue;
            }
            let oi = self.precinct_index(old);
            self.precincts[oi].members.remove(&n);
            if self.precincts[oi].fusion_head == Some(n) {
                self.precincts[oi].fusion_head = None;
            }
            let ni = self.precinct_index(new);
            self.precincts[ni].members.insert(n);
            self.nodes[i].precinct = new;
            self.nodes[i].retired = false;
        }
    }

    fn refresh_mobility_metric(&mut self) {
        let now: Vec<Vec2> = self.nodes.iter().map(|n| n.motion.position).collect();
        for p in 0..self.precincts.len() {
            let scope: Vec<usize> = self.precincts[p].members.iter().map(|m| m.index()).collect();
            for &i in &scope {
                let m = relative_mobility(i, &scope, &now, &self.prev_positions, self.cfg.mobility_tick);
                self.nodes[i].mobility = m.value;
            }
        }
    }

    fn refresh_gateways(&mut self) {
        let positions: Vec<Vec2> = self.nodes.iter().map(|n| n.motion.position).collect();
        identify_gateways(&mut self.precincts, &positions, &self.link);
        for node in self.nodes.iter_mut() {
            node.gateway = false;
        }
        for p in &self.precincts {
            for g in &p.gateways {
                self.nodes[g.index()].gateway = true;
            }
        }
    }

    fn scores(&mut self, p: usize) -> Vec<CandidateScore> {
        let pop = self.precincts[p].members.len();
        let members: Vec<NodeId> = self.precincts[p].members.iter().copied().collect();
        let mut scores: Vec<CandidateScore> = members
            .iter()
            .map(|&m| {
                let node = &self.nodes[m.index()];
                let surplus = node.ledger.surplus();
                let vid = compute_vid(surplus, pop, node.retired).unwrap_or(0.0);
                CandidateScore::new(m, surplus, self.cfg.radio_range, node.mobility, vid)
            })
            .collect();
        score_precinct(&mut scores, &self.thresholds);
        for s in &scores {
            self.nodes[s.node.index()].p_fusion = s.p_fusion;
        }
        scores
    }

    fn set_head(&mut self, p: usize, head: Option<NodeId>) {
        if self.precincts[p].fusion_head == head {
            return;
        }
        self.precincts[p].fusion_head = head;
        if let Some(h) = head {
            self.nodes[h.index()].retired = false;
            let precinct = self.precincts[p].id;
            self.log(self.now(), TraceEvent::Elect { precinct, head: h });
        }
    }

    /// Gives every non-empty precinct a live head right away.
    fn ensure_heads(&mut self) {
        for p in 0..self.precincts.len() {
            self.ensure_head(p);
        }
    }

    fn ensure_head(&mut self, p: usize) {
        let head = self.precincts[p].fusion_head;
        if self.precincts[p].members.is_empty() {
            self.precincts[p].fusion_head = None;
            return;
        }
        if head.is_some_and(|h| self.precincts[p].members.contains(&h)) {
            return;
        }
        let scores = self.scores(p);
        let chosen = elect_fusion_head(&scores);
        self.set_head(p, chosen);
    }

    fn on_election_check(&mut self) {
        let now = self.now();
        for n in self.node_ids().collect::<Vec<_>>() {
            self.accrue_idle(n, now);
        }
        for p in 0..self.precincts.len() {
            if self.precincts[p].members.is_empty() {
                self.precincts[p].fusion_head = None;
                continue;
            }
            let scores = self.scores(p);
            match reelection_check(self.precincts[p].fusion_head, &scores, self.cfg.p_threshold) {
                Reelection::Keep => {}
                Reelection::Handover { retired, new_head } => {
                    self.set_head(p, Some(new_head));
                    self.nodes[retired.index()].retired = true;
                }
                Reelection::Replaced { new_head } => self.set_head(p, Some(new_head)),
                Reelection::Cleared => self.set_head(p, None),
            }
        }
        self.at(now + self.cfg.election_check_period, EventKind::ElectionCheckTimer);
    }

    fn on_hello(&mut self, n: NodeId) {
        let now = self.now();
        self.accrue_idle(n, now);
        if !self.alive(n) {
            return;
        }
        let node = &self.nodes[n.index()];
        let p = self.precinct_index(node.precinct);
        let pop = self.precincts[p].members.len().max(1);
        let surplus = node.ledger.surplus();
        let hello = HelloPacket {
            sender: n,
            surplus,
            p_fusion: node.p_fusion,
            vid: compute_vid(surplus, pop, node.retired).unwrap_or(0.0),
        };
        self.send(n, Target::Broadcast, Packet::Hello(hello), Vec::new());
        self.at(now + self.cfg.hello_period, EventKind::HelloTimer(n));
    }

    fn on_drain_sample(&mut self) {
        let now = self.now();
        let window = self.cfg.drain_sample_period;
        for i in 0..self.nodes.len() {
            let n = NodeId::from_index(i);
            self.accrue_idle(n, now);
            let node = &mut self.nodes[i];
            if !node.alive() {
                continue;
            }
            let consumed = node.ledger.consumed();
            let used = consumed - node.consumed_at_sample;
            node.consumed_at_sample = consumed;
            node.drain = update_drain_rate(&node.drain, used, window, node.ledger.surplus());
        }
        self.at(now + window, EventKind::DrainSampleTimer);
    }

    fn on_metrics_tick(&mut self) {
        let now = self.now();
        for n in self.node_ids().collect::<Vec<_>>() {
            self.accrue_idle(n, now);
        }
        // Frames still in the air started at most one airtime ago.
        let longest = self.cfg.airtime(self.cfg.data_bits().max(self.cfg.control_bits()));
        let horizon = self.mac.slot_of((now - longest - 1.0).max(0.0));
        self.channel.prune_before(horizon);
        let ttl = self.cfg.buffer_ttl;
        for i in 0..self.nodes.len() {
            let expired: Vec<DataPacket> = {
                let node = &mut self.nodes[i];
                let (old, keep): (Vec<Pending>, Vec<Pending>) =
                    node.pending.drain(..).partition(|p| now - p.since > ttl);
                node.pending = keep;
                old.into_iter().map(|p| p.packet).collect()
            };
            for d in expired {
                self.drop_originals(&d.originals, "buffer-ttl");
            }
        }
        self.at(now + self.cfg.metrics_tick, EventKind::MetricsTick);
    }
}

// Energy and death.
impl Simulation {
    /// Debits idle listening up to `until`; detects an idle death at its exact time.
    fn accrue_idle(&mut self, n: NodeId, until: f64) {
        let e_s = self.cfg.e_s;
        let node = &mut self.nodes[n.index()];
        if !node.alive() || until <= node.last_idle {
            return;
        }
        let surplus = node.ledger.surplus();
        let cost = e_s * (until - node.last_idle);
        let death_at = node.last_idle + surplus / e_s;
        node.last_idle = until;
        if node.ledger.charge(Category::Idle, cost) == ChargeOutcome::Died {
            self.kill(n, death_at.min(until));
        }
    }

    fn charge(&mut self, n: NodeId, category: Category, joules: f64) -> bool {
        let now = self.now();
        self.accrue_idle(n, now);
        match self.nodes[n.index()].ledger.charge(category, joules) {
            ChargeOutcome::Charged => true,
            ChargeOutcome::Died => {
                self.kill(n, now);
                false
            }
            ChargeOutcome::AlreadyDead => false,
        }
    }

    fn charge_frame(&mut self, n: NodeId, direction: Direction, bits: u64) -> bool {
        let now = self.now();
        self.accrue_idle(n, now);
        let outcome = charge_packet(&mut self.nodes[n.index()].ledger, direction, bits, &self.radio)
            .expect("distances are non-negative");
        match outcome {
            ChargeOutcome::Charged => true,
            ChargeOutcome::Died => {
                self.kill(n, now);
                false
            }
            ChargeOutcome::AlreadyDead => false,
        }
    }

    fn kill(&mut self, n: NodeId, at: f64) {
        let i = n.index();
        if self.nodes[i].death_time.is_some() {
            return;
        }
        self.nodes[i].death_time = Some(at);
        self.alive_count -= 1;
        self.last_death = self.last_death.max(at);
        self.log(at, TraceEvent::Death { node: n });
        let p = self.precinct_index(self.nodes[i].precinct);
        self.precincts[p].members.remove(&n);
        self.precincts[p].gateways.remove(&n);
        self.nodes[i].gateway = false;
        if self.precincts[p].fusion_head == Some(n) {
            self.precincts[p].fusion_head = None;
        }
        let node = &mut self.nodes[i];
        let mut lost: Vec<u64> = Vec::new();
        for f in node.current.take().into_iter().chain(node.queue.drain(..)) {
            lost.extend(carried_originals(&f.packet));
        }
        lost.extend(node.aggregation.drain(..).map(|d| d.id));
        lost.extend(node.pending.drain(..).flat_map(|p| p.packet.originals));
        node.discoveries.clear();
        self.drop_originals(&lost, "node-dead");
        if self.alive_count > 0 {
            self.ensure_head(p);
        }
    }
}

/// Source-generated packet ids a frame is responsible for.
fn carried_originals(packet: &Packet) -> Vec<u64> {
    match packet {
        Packet::Da(d) => vec![d.id],
        Packet::Data(d) => d.originals.clone(),
        _ => Vec::new(),
    }
}

// Channel access.
impl Simulation {
    fn bits_for(&self, packet: &Packet) -> u64 {
        match packet {
            Packet::Data(d) => u64::from(d.bytes) * 8,
            _ => self.cfg.control_bits(),
        }
    }

    /// Hands a frame to `n`'s MAC queue.
    fn send(&mut self, n: NodeId, target: Target, packet: Packet, trail: Vec<NodeId>) {
        if !self.alive(n) {
            self.drop_originals(&carried_originals(&packet), "node-dead");
            return;
        }
        let bits = self.bits_for(&packet);
        let frame = Frame { target, packet, bits, attempt: 0, slot: 0, trail, receivers: Vec::new() };
        let node = &mut self.nodes[n.index()];
        if node.current.is_none() {
            node.current = Some(frame);
            self.schedule_attempt(n);
        } else if node.queue.len() < self.cfg.mac_queue_limit {
            node.queue.push_back(frame);
        } else {
            self.drop_originals(&carried_originals(&frame.packet), "queue-full");
        }
    }

    fn schedule_attempt(&mut self, n: NodeId) {
        let now = self.now();
        let slot = self.mac.start_slot(now, &mut self.rng_mac);
        self.begin_attempt(n, slot);
    }

    fn begin_attempt(&mut self, n: NodeId, slot: u64) {
        if let Some(f) = self.nodes[n.index()].current.as_mut() {
            f.slot = slot;
        }
        let start = self.mac.slot_start(slot);
        self.at(start, EventKind::TxStart(n));
    }

    fn start_next(&mut self, n: NodeId) {
        let node = &mut self.nodes[n.index()];
        node.current = node.queue.pop_front();
        if node.current.is_some() {
            self.schedule_attempt(n);
        }
    }

    /// Intended receivers of a broadcast from `n`.
    fn audience(&self, n: NodeId, packet: &Packet) -> Vec<NodeId> {
        let here = self.pos(n);
        match packet {
            Packet::Hello(_) => {
                let p = self.precinct_index(self.nodes[n.index()].precinct);
                self.precincts[p].members.iter().copied().filter(|&m| m != n).collect()
            }
            Packet::Rreq(r) => self
                .node_ids()
                .filter(|&m| m != n && self.alive(m) && in_range(here, self.pos(m), &self.link))
                .filter(|&m| match self.cfg.protocol {
                    Protocol::Aodv => true,
                    Protocol::E2rp => m == r.destination || self.nodes[m.index()].gateway || self.is_head(m),
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn on_tx_start(&mut self, n: NodeId) {
        let now = self.now();
        self.accrue_idle(n, now);
        let Some(frame) = self.nodes[n.index()].current.clone() else {
            return;
        };
        let receivers = match frame.target {
            Target::Unicast(r) => vec![r],
            Target::Broadcast => self.audience(n, &frame.packet),
        };
        let here = self.pos(n);
        let distance = receivers.iter().map(|&r| here.distance(self.pos(r))).fold(0.0, f64::max);
        if !self.charge_frame(n, Direction::Tx { distance }, frame.bits) {
            return;
        }
        self.channel.register(frame.slot, n);
        self.log(now, TraceEvent::Tx { node: n, target: frame.target, packet: frame.packet.clone() });
        if let Some(f) = self.nodes[n.index()].current.as_mut() {
            f.receivers = receivers;
        }
        let airtime = self.cfg.airtime(frame.bits);
        self.at(now + airtime, EventKind::PacketArrival { sender: n, slot: frame.slot });
    }

    fn on_arrival(&mut self, sender: NodeId, slot: u64) {
        let now = self.now();
        let Some(frame) = self.nodes[sender.index()].current.clone() else {
            return;
        };
        if frame.slot != slot {
            return;
        }
        let tag = frame.packet.tag();
        let mut delivered = Vec::new();
        for &r in &frame.receivers {
            self.accrue_idle(r, now);
            if !self.alive(r) || !in_range(self.pos(sender), self.pos(r), &self.link) {
                continue;
            }
            if !self.charge_frame(r, Direction::Rx, frame.bits) {
                continue;
            }
            let positions = &self.nodes;
            let link = &self.link;
            let outcome = self.channel.reception(slot, sender, r, |a, b| {
                in_range(positions[a.index()].motion.position, positions[b.index()].motion.position, link)
            });
            match outcome {
                Reception::Delivered => {
                    self.log(now, TraceEvent::Rx { node: r, from: sender, tag: tag.to_owned() });
                    delivered.push(r);
                }
                Reception::Collided => {
                    self.collisions += 1;
                    self.log(now, TraceEvent::Collision { node: r, from: sender, tag: tag.to_owned() });
                }
            }
        }

        let mut failed_unicast = None;
        if let Target::Unicast(to) = frame.target {
            if delivered.is_empty() {
                match self.mac.after_failure(frame.attempt, now, &mut self.rng_mac) {
                    RetryDecision::Retry { slot } => {
                        if let Some(f) = self.nodes[sender.index()].current.as_mut() {
                            f.attempt += 1;
                        }
                        self.begin_attempt(sender, slot);
                    }
                    RetryDecision::GiveUp => {
                        self.nodes[sender.index()].current = None;
                        self.start_next(sender);
                        failed_unicast = Some(to);
                    }
                }
            } else {
                self.nodes[sender.index()].current = None;
                self.start_next(sender);
            }
        } else {
            self.nodes[sender.index()].current = None;
            self.start_next(sender);
        }

        if let Some(to) = failed_unicast {
            self.on_unicast_failure(sender, to, frame.clone());
        }
        for r in delivered {
            if self.alive(r) {
                self.receive(r, sender, &frame);
            }
        }
    }
}

// Packet handling, routing and traffic.
impl Simulation {
    fn local_view(&self, n: NodeId) -> LocalView {
        let node = &self.nodes[n.index()];
        let surplus = node.ledger.surplus();
        let lifetime = node.drain.lifetime_estimate;
        let readiness = match self.cfg.protocol {
            Protocol::E2rp => compute_readiness(surplus, lifetime),
            Protocol::Aodv => Readiness::High,
        };
        let relay = match self.cfg.protocol {
            Protocol::Aodv => true,
            Protocol::E2rp => node.gateway || self.is_head(n),
        };
        LocalView { surplus, readiness, lifetime, precinct: node.precinct, relay }
    }

    fn log_update(&mut self, n: NodeId, u: &RouteUpdate) {
        let now = self.now();
        self.log(
            now,
            TraceEvent::Route {
                node: n,
                destination: u.destination,
                sequence: u.sequence_number,
                advertised_before: MaybeHops(u.advertised_before),
                hop_count: u.hop_count,
                outcome: u.outcome,
            },
        );
    }

    fn receive(&mut self, r: NodeId, from: NodeId, frame: &Frame) {
        let now = self.now();
        match &frame.packet {
            Packet::Hello(_) => {}
            Packet::Da(da) => self.aggregate(r, *da),
            Packet::Rreq(m) => {
                let view = self.local_view(r);
                match self.nodes[r.index()].router.handle_rreq(from, m, &view, now) {
                    RreqAction::Forward(fwd) => self.send(r, Target::Broadcast, Packet::Rreq(fwd), Vec::new()),
                    RreqAction::Reply { rrep, to } => self.send(r, Target::Unicast(to), Packet::Rrep(rrep), Vec::new()),
                    RreqAction::Drop(_) => {}
                }
            }
            Packet::Rrep(m) => {
                let view = self.local_view(r);
                match self.nodes[r.index()].router.handle_rrep(from, m, &view, now) {
                    RrepAction::Installed { update } => {
                        self.log_update(r, &update);
                        self.flush_pending(r, m.destination);
                    }
                    RrepAction::Forward { rrep, to, update } => {
                        self.log_update(r, &update);
                        self.send(r, Target::Unicast(to), Packet::Rrep(rrep), Vec::new());
                    }
                    RrepAction::Refuse { rerr, to, update } => {
                        self.log_update(r, &update);
                        self.send(r, Target::Unicast(to), Packet::Rerr(rerr), Vec::new());
                    }
                    RrepAction::Drop { update, .. } => {
                        if let Some(u) = update {
                            self.log_update(r, &u);
                        }
                    }
                }
            }
            Packet::Rerr(m) => {
                if let RerrAction::Propagate(next_msg) = self.nodes[r.index()].router.handle_rerr(from, m) {
                    let mut trail = frame.trail.clone();
                    let next = trail.pop().or_else(|| self.nodes[r.index()].router.reverse_hop(m.source, now));
                    if let Some(next) = next {
                        self.send(r, Target::Unicast(next), Packet::Rerr(next_msg), trail);
                    }
                }
            }
            Packet::Data(d) => {
                self.log(now, TraceEvent::Hop { node: r, packet_id: d.id });
                if d.destination == r {
                    self.deliver_originals(&d.originals);
                } else {
                    let mut trail = frame.trail.clone();
                    trail.push(r);
                    self.forward_data(r, d.clone(), trail);
                }
            }
        }
    }

    fn on_unicast_failure(&mut self, n: NodeId, to: NodeId, frame: Frame) {
        match frame.packet {
            Packet::Data(d) => {
                self.nodes[n.index()].router.link_failed(to);
                self.forward_data(n, d, frame.trail);
            }
            Packet::Da(d) => self.drop_originals(&[d.id], "mac-fail"),
            _ => {}
        }
    }

    /// Sends `d` one hop onwards from `n`; `trail` ends with `n`.
    fn forward_data(&mut self, n: NodeId, d: DataPacket, trail: Vec<NodeId>) {
        if !self.alive(n) {
            self.drop_originals(&d.originals, "node-dead");
            return;
        }
        let now = self.now();
        if let Some(next) = self.nodes[n.index()].router.next_hop(d.destination, now) {
            // Tables are loop-free at every instant, but a packet that sat in
            // a queue across a route change can be steered back to a node it
            // already crossed. Such a packet is discarded instead.
            if trail.contains(&next) {
                self.drop_originals(&d.originals, "loop");
                return;
            }
            self.send(n, Target::Unicast(next), Packet::Data(d), trail);
            return;
        }
        if d.source == n {
            self.nodes[n.index()].pending.push(Pending { since: now, packet: d.clone() });
            self.start_discovery(n, d.destination);
            return;
        }
        self.drop_originals(&d.originals, "no-route");
        // Tell the upstream nodes, nearest first.
        let mut upstream = trail;
        upstream.pop();
        if let Some(prev) = upstream.pop() {
            let rerr = RerrMessage { source: d.source, destination: d.destination, unreachable_via: n };
            self.send(n, Target::Unicast(prev), Packet::Rerr(rerr), upstream);
        }
    }

    fn start_discovery(&mut self, n: NodeId, destination: NodeId) {
        if self.nodes[n.index()].discoveries.contains_key(&destination) {
            return;
        }
        let token = self.next_token;
        self.next_token += 1;
        self.nodes[n.index()].discoveries.insert(destination, Discovery { attempts: 0, token });
        self.flood(n, destination, token);
    }

    fn flood(&mut self, n: NodeId, destination: NodeId, token: u64) {
        let now = self.now();
        let view = self.local_view(n);
        let rreq = self.nodes[n.index()].router.originate_rreq(destination, &view, now);
        self.rreq_floods += 1;
        self.send(n, Target::Broadcast, Packet::Rreq(rreq), Vec::new());
        self.at(now + self.cfg.discovery_timeout, EventKind::PacketTimeout { node: n, destination, token });
    }

    fn on_discovery_timeout(&mut self, n: NodeId, destination: NodeId, token: u64) {
        let now = self.now();
        let Some(d) = self.nodes[n.index()].discoveries.get(&destination).copied() else {
            return;
        };
        if d.token != token || !self.alive(n) {
            return;
        }
        if self.nodes[n.index()].router.has_route(destination, now) {
            self.flush_pending(n, destination);
            return;
        }
        if d.attempts < self.cfg.rreq_retries {
            let token = self.next_token;
            self.next_token += 1;
            self.nodes[n.index()].discoveries.insert(destination, Discovery { attempts: d.attempts + 1, token });
            self.flood(n, destination, token);
            return;
        }
        self.nodes[n.index()].discoveries.remove(&destination);
        let node = &mut self.nodes[n.index()];
        let (gone, keep): (Vec<Pending>, Vec<Pending>) =
            node.pending.drain(..).partition(|p| p.packet.destination == destination);
        node.pending = keep;
        for p in gone {
            self.drop_originals(&p.packet.originals, "no-route");
        }
    }

    fn flush_pending(&mut self, n: NodeId, destination: NodeId) {
        let now = self.now();
        if !self.nodes[n.index()].router.has_route(destination, now) {
            return;
        }
        self.nodes[n.index()].discoveries.remove(&destination);
        let node = &mut self.nodes[n.index()];
        let (ready, keep): (Vec<Pending>, Vec<Pending>) =
            node.pending.drain(..).partition(|p| p.packet.destination == destination);
        node.pending = keep;
        for p in ready {
            self.forward_data(n, p.packet, vec![n]);
        }
    }

    fn on_data_gen_tick(&mut self) {
        let now = self.now();
        let period = self.cfg.traffic_period;
        for _ in 0..self.cfg.events_per_period {
            let t = now + self.rng_traffic.gen_range(0.0..period);
            let point = self.waypoints.sample_point(&mut self.rng_traffic);
            self.at(t, EventKind::Sense { point });
        }
        self.at(now + period, EventKind::DataGenTick);
    }

    fn new_packet_id(&mut self) -> u64 {
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        id
    }

    fn on_sense(&mut self, point: Vec2) {
        let now = self.now();
        let sink = NodeId::from_index(self.cfg.sink_node);
        let p = self.precinct_index(self.grid.locate(point));
        let detectors: Vec<NodeId> = self.precincts[p].members.iter().copied().filter(|&m| m != sink).collect();
        let sense_cost = self.cfg.e_g * self.cfg.airtime(self.cfg.data_bits());
        for det in detectors {
            if !self.charge(det, Category::Sense, sense_cost) {
                continue;
            }
            let id = self.new_packet_id();
            self.status.insert(id, Status::InFlight);
            self.log(now, TraceEvent::Generate { node: det, packet_id: id });
            match self.cfg.protocol {
                Protocol::Aodv => {
                    let d = DataPacket {
                        source: det,
                        destination: sink,
                        bytes: self.cfg.data_packet_bytes,
                        generated_at: now,
                        id,
                        originals: vec![id],
                    };
                    self.log(now, TraceEvent::Hop { node: det, packet_id: id });
                    self.forward_data(det, d, vec![det]);
                }
                Protocol::E2rp => {
                    let node = &self.nodes[det.index()];
                    let pi = self.precinct_index(node.precinct);
                    let pop = self.precincts[pi].members.len().max(1);
                    let da = DaPacket {
                        sender: det,
                        vid: compute_vid(node.ledger.surplus(), pop, node.retired).unwrap_or(0.0),
                        generated_at: now,
                        id,
                    };
                    match self.precincts[pi].fusion_head {
                        Some(h) if h == det => self.aggregate(det, da),
                        Some(h) => self.send(det, Target::Unicast(h), Packet::Da(da), Vec::new()),
                        None => self.drop_originals(&[id], "no-head"),
                    }
                }
            }
        }
    }

    /// A head collects announcements and flushes them after one window.
    fn aggregate(&mut self, head: NodeId, da: DaPacket) {
        let sink = NodeId::from_index(self.cfg.sink_node);
        if head == sink {
            self.deliver_originals(&[da.id]);
            return;
        }
        let node = &mut self.nodes[head.index()];
        node.aggregation.push(da);
        if node.aggregation.len() == 1 {
            let at = self.now() + self.cfg.aggregation_window;
            self.at(at, EventKind::AggregationFlush(head));
        }
    }

    fn on_aggregation_flush(&mut self, head: NodeId) {
        let now = self.now();
        let batch: Vec<DaPacket> = std::mem::take(&mut self.nodes[head.index()].aggregation);
        if batch.is_empty() || !self.alive(head) {
            return;
        }
        let sink = NodeId::from_index(self.cfg.sink_node);
        let count = aggregate_count(batch.len(), self.cfg.aggregation_ratio);
        let ids: Vec<u64> = batch.iter().map(|d| d.id).collect();
        let chunk = ids.len().div_ceil(count);
        let same_precinct = self.alive(sink) && self.nodes[sink.index()].precinct == self.nodes[head.index()].precinct;
        for group in ids.chunks(chunk) {
            let id = self.new_packet_id();
            let d = DataPacket {
                source: head,
                destination: sink,
                bytes: self.cfg.data_packet_bytes,
                generated_at: now,
                id,
                originals: group.to_vec(),
            };
            self.log(now, TraceEvent::Hop { node: head, packet_id: id });
            if same_precinct {
                self.send(head, Target::Unicast(sink), Packet::Data(d), vec![head]);
            } else {
                self.forward_data(head, d, vec![head]);
            }
        }
    }

    fn deliver_originals(&mut self, ids: &[u64]) {
        let now = self.now();
        for &id in ids {
            if let Some(s) = self.status.get_mut(&id) {
                if *s == Status::InFlight {
                    *s = Status::Delivered;
                    self.log(now, TraceEvent::Deliver { packet_id: id });
                }
            }
        }
    }

    fn drop_originals(&mut self, ids: &[u64], reason: &str) {
        let now = self.now();
        for &id in ids {
            if let Some(s) = self.status.get_mut(&id) {
                if *s == Status::InFlight {
                    *s = Status::Dropped;
                    self.log(now, TraceEvent::Drop { packet_id: id, reason: reason.to_owned() });
                }
            }
        }
    }

    fn finish(self, end_time: f64) -> RunOutput {
        let generated = self.status.len() as u64;
        let delivered = self.status.values().filter(|s| **s == Status::Delivered).count() as u64;
        let dropped = self.status.values().filter(|s| **s == Status::Dropped).count() as u64;
        let pdf = compute_pdf(delivered, generated).expect("delivered never exceeds generated");
        let deaths: Vec<Option<f64>> = self.nodes.iter().map(|n| n.death_time).collect();
        let lifetime = compute_network_lifetime(&deaths, self.cfg.sim_duration);
        let per_node = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| NodeRecord {
                node: NodeId::from_index(i),
                initial: n.ledger.initial,
                surplus_final: n.ledger.surplus(),
                consumed_tx: n.ledger.consumed_tx,
                consumed_rx: n.ledger.consumed_rx,
                consumed_sense: n.ledger.consumed_sense,
                consumed_idle: n.ledger.consumed_idle,
                death_time: n.death_time,
            })
            .collect();
        let report = RunReport {
            seed: self.cfg.rng_seed,
            protocol: self.cfg.protocol,
            speed_max: self.cfg.speed_max,
            pdf,
            network_lifetime: lifetime.seconds,
            lifetime_censored: lifetime.censored,
            end_time,
            packets_generated: generated,
            packets_delivered: delivered,
            packets_dropped: dropped,
            packets_in_flight: generated - delivered - dropped,
            rreq_floods: self.rreq_floods,
            collisions: self.collisions,
            per_node,
            config_echo: self.cfg.clone(),
        };
        RunOutput { report, trace: self.trace, events: self.events }
    }
}
