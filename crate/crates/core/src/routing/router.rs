//! Per-node routing state machine.
//!
//! The router is sans-IO: every handler takes the neighbour a message came
//! from plus a snapshot of the node's own state and returns what the node
//! should do next. The simulator and the scripted harness both drive it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::messages::{Readiness, RerrMessage, RrepMessage, RreqMessage};
use super::table::{Acceptance, RoutePath, RouteTable, RouteUpdate, TableMode};
use crate::clustering::PrecinctId;
use crate::engine::config::{Protocol, ScenarioConfig};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub protocol: Protocol,
    pub max_paths: usize,
    pub route_lifetime: f64,
    pub flood_state_ttl: f64,
}

impl RouterConfig {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        RouterConfig {
            protocol: cfg.protocol,
            max_paths: cfg.max_paths,
            route_lifetime: cfg.route_lifetime,
            flood_state_ttl: cfg.flood_state_ttl,
        }
    }
}

/// What a node knows about itself when it handles a message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalView {
    pub surplus: f64,
    pub readiness: Readiness,
    /// Estimated seconds until the battery is empty.
    pub lifetime: f64,
    pub precinct: PrecinctId,
    /// Whether this node may rebroadcast route requests.
    pub relay: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseRoute {
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub expires: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Replies {
    sequence: u32,
    sent: usize,
    best_surplus: f64,
    expires: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RreqDrop {
    OwnFlood,
    Stale,
    Duplicate,
    NotRelay,
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RreqAction {
    Forward(RreqMessage),
    Reply { rrep: RrepMessage, to: NodeId },
    Drop(RreqDrop),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RrepDrop {
    Rejected,
    NoReversePath,
    CarriedDiscard,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RrepAction {
    /// This node asked for the route.
    Installed { update: RouteUpdate },
    Forward { rrep: RrepMessage, to: NodeId, update: RouteUpdate },
    /// The node itself is not ready to carry traffic, so the reply turns
    /// into an error towards the requester.
    Refuse { rerr: RerrMessage, to: NodeId, update: RouteUpdate },
    Drop { reason: RrepDrop, update: Option<RouteUpdate> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RerrAction {
    /// Nothing further: this node is the requester or still has a route.
    Absorbed { pruned: bool },
    /// Pass the (rewritten) error further upstream.
    Propagate(RerrMessage),
}

#[derive(Debug, Clone)]
pub struct Router {
    id: NodeId,
    cfg: RouterConfig,
    sequence: u32,
    next_broadcast: u32,
    table: RouteTable,
    reverse: BTreeMap<NodeId, ReverseRoute>,
    floods: BTreeMap<(NodeId, u32), (u32, f64)>,
    origin_sequence: BTreeMap<NodeId, u32>,
    replies: BTreeMap<(NodeId, u32), Replies>,
}

impl Router {
    pub fn new(id: NodeId, cfg: RouterConfig) -> Self {
        let mode = match cfg.protocol {
            Protocol::E2rp => TableMode::Multipath { max_paths: cfg.max_paths.max(1) },
            Protocol::Aodv => TableMode::SinglePath,
        };
        Router {
            id,
            cfg,
            sequence: 0,
            next_broadcast: 0,
            table: RouteTable::new(mode),
            reverse: BTreeMap::new(),
            floods: BTreeMap::new(),
            origin_sequence: BTreeMap::new(),
            replies: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn table(&self) -> &RouteTable {
        &self.table
    }

    pub fn sequence(&self) -> u32 {
        self.sequence
    }

    fn multipath(&self) -> bool {
        self.cfg.protocol == Protocol::E2rp
    }

    fn forget_stale(&mut self, now: f64) {
        self.reverse.retain(|_, r| r.expires > now);
        self.floods.retain(|_, f| f.1 > now);
        self.replies.retain(|_, r| r.expires > now);
    }

    /// Starts a new flood towards `destination`.
    pub fn originate_rreq(&mut self, destination: NodeId, view: &LocalView, now: f64) -> RreqMessage {
        self.forget_stale(now);
        self.sequence += 1;
        let broadcast_id = self.next_broadcast;
        self.next_broadcast += 1;
        self.floods.insert((self.id, broadcast_id), (0, now + self.cfg.flood_state_ttl));
        RreqMessage {
            source: self.id,
            source_precinct: view.precinct,
            sequence_no: self.sequence,
            broadcast_id,
            hop_count: 0,
            destination,
            max_surplus_energy: view.surplus,
        }
    }

    pub fn handle_rreq(&mut self, from: NodeId, rreq: &RreqMessage, view: &LocalView, now: f64) -> RreqAction {
        self.forget_stale(now);
        if rreq.source == self.id {
            return RreqAction::Drop(RreqDrop::OwnFlood);
        }
        if self.origin_sequence.get(&rreq.source).is_some_and(|&s| s > rreq.sequence_no) {
            return RreqAction::Drop(RreqDrop::Stale);
        }
        let is_destination = rreq.destination == self.id;
        if !is_destination && !view.relay {
            return RreqAction::Drop(RreqDrop::NotRelay);
        }
        let hop = rreq.hop_count + 1;
        let key = (rreq.source, rreq.broadcast_id);
        if !is_destination {
            if let Some(&(seen_hop, _)) = self.floods.get(&key) {
                if !self.multipath() || hop >= seen_hop {
                    return RreqAction::Drop(RreqDrop::Duplicate);
                }
            }
        }
        let expires = now + self.cfg.flood_state_ttl;
        let best = self.floods.get(&key).map_or(hop, |&(h, _)| h.min(hop));
        self.floods.insert(key, (best, expires));
        let seq = self.origin_sequence.entry(rreq.source).or_insert(rreq.sequence_no);
        *seq = (*seq).max(rreq.sequence_no);
        self.reverse.insert(rreq.source, ReverseRoute { next_hop: from, hop_count: hop, expires });
        let max_surplus = rreq.max_surplus_energy.max(view.surplus);

        if !is_destination {
            return RreqAction::Forward(RreqMessage { hop_count: hop, max_surplus_energy: max_surplus, ..*rreq });
        }

        let cap = if self.multipath() { self.cfg.max_paths.max(1) } else { 1 };
        let sequence = match self.replies.get_mut(&key) {
            None => {
                self.sequence += 1;
                self.replies
                    .insert(key, Replies { sequence: self.sequence, sent: 1, best_surplus: max_surplus, expires });
                self.sequence
            }
            Some(r) => {
                if r.sent >= cap || max_surplus <= r.best_surplus {
                    return RreqAction::Drop(RreqDrop::NoImprovement);
                }
                r.sent += 1;
                r.best_surplus = max_surplus;
                r.sequence
            }
        };
        RreqAction::Reply {
            rrep: RrepMessage {
                source: rreq.source,
                destination: self.id,
                destination_precinct: view.precinct,
                sequence_number: sequence,
                hop_count: 1,
                readiness: Readiness::High,
                max_surplus_energy: max_surplus,
                lifetime: f64::INFINITY,
            },
            to: from,
        }
    }

    pub fn handle_rrep(&mut self, from: NodeId, rrep: &RrepMessage, view: &LocalView, now: f64) -> RrepAction {
        self.forget_stale(now);
        if rrep.readiness == Readiness::Discard {
            return RrepAction::Drop { reason: RrepDrop::CarriedDiscard, update: None };
        }
        let path = RoutePath {
            next_hop: from,
            hop_count: rrep.hop_count,
            readiness: rrep.readiness,
            max_surplus_energy: rrep.max_surplus_energy,
        };
        let update =
            self.table.offer(rrep.destination, rrep.sequence_number, path, now, now + self.cfg.route_lifetime);
        if rrep.source == self.id {
            return RrepAction::Installed { update };
        }
        if !update.outcome.accepted() {
            return RrepAction::Drop { reason: RrepDrop::Rejected, update: Some(update) };
        }
        let Some(back) = self.reverse.get(&rrep.source).copied() else {
            return RrepAction::Drop { reason: RrepDrop::NoReversePath, update: Some(update) };
        };
        if self.multipath() && view.readiness == Readiness::Discard {
            let rerr = RerrMessage { source: rrep.source, destination: rrep.destination, unreachable_via: self.id };
            return RrepAction::Refuse { rerr, to: back.next_hop, update };
        }
        let readiness = if self.multipath() { rrep.readiness.min(view.readiness) } else { Readiness::High };
        let forwarded = RrepMessage {
            hop_count: rrep.hop_count + 1,
            readiness,
            lifetime: rrep.lifetime.min(view.lifetime),
            ..*rrep
        };
        RrepAction::Forward { rrep: forwarded, to: back.next_hop, update }
    }

    /// `from` reports that `rerr.destination` is unreachable through it.
    pub fn handle_rerr(&mut self, from: NodeId, rerr: &RerrMessage) -> RerrAction {
        let pruned = self.table.prune(rerr.destination, from);
        let still_routable = self.multipath() && self.table.route_count(rerr.destination) > 0;
        if rerr.source == self.id || still_routable {
            return RerrAction::Absorbed { pruned };
        }
        RerrAction::Propagate(RerrMessage { unreachable_via: self.id, ..*rerr })
    }

    /// Next hop for data towards `destination`, refreshing the entry.
    pub fn next_hop(&mut self, destination: NodeId, now: f64) -> Option<NodeId> {
        let path = self.table.select(destination, now)?;
        self.table.refresh(destination, now + self.cfg.route_lifetime);
        Some(path.next_hop)
    }

    pub fn has_route(&self, destination: NodeId, now: f64) -> bool {
        self.table.select(destination, now).is_some()
    }

    /// The link to `neighbor` failed; drops every route through it and
    /// returns the destinations that lost a route.
    pub fn link_failed(&mut self, neighbor: NodeId) -> Vec<NodeId> {
        self.table.prune_next_hop(neighbor)
    }

    pub fn reverse_hop(&self, source: NodeId, now: f64) -> Option<NodeId> {
        self.reverse.get(&source).filter(|r| r.expires > now).map(|r| r.next_hop)
    }
}

/// Whether an accepted update honoured the strict hop rule.
pub fn update_is_loop_safe(update: &RouteUpdate) -> bool {
    match (update.outcome, update.advertised_before) {
        (Acceptance::Added | Acceptance::Improved, Some(adv)) => update.hop_count < adv,
        _ => true,
    }
}
