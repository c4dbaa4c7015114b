//! Per-node route table with a sorted multipath list per destination.
//!
//! A route for a known sequence number is accepted only with a hop count
//! strictly below the entry's advertised hop count. The advertised count is
//! fixed by the first route of a sequence number and never changes until a
//! newer sequence number replaces the entry, which is what keeps the union of
//! all tables loop free.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::messages::Readiness;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutePath {
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub readiness: Readiness,
    pub max_surplus_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTableEntry {
    pub destination: NodeId,
    pub sequence_number: u32,
    pub advertised_hop_count: u32,
    /// Best path first: surplus descending, then hop count, then next hop.
    pub route_list: Vec<RoutePath>,
    pub expiration_time: f64,
}

impl RouteTableEntry {
    pub fn is_expired(&self, now: f64) -> bool {
        now >= self.expiration_time
    }

    pub fn is_sorted(&self) -> bool {
        self.route_list.windows(2).all(|w| order(&w[0], &w[1]).is_le())
    }
}

fn order(a: &RoutePath, b: &RoutePath) -> std::cmp::Ordering {
    b.max_surplus_energy
        .total_cmp(&a.max_surplus_energy)
        .then(a.hop_count.cmp(&b.hop_count))
        .then(a.next_hop.cmp(&b.next_hop))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableMode {
    /// Up to `max_paths` loop-free alternatives.
    Multipath { max_paths: usize },
    /// Exactly one route; shorter routes for the same sequence number replace it.
    SinglePath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    StaleSequence,
    HopNotLower,
    DuplicateNextHop,
    ListFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Acceptance {
    /// No live entry existed.
    Created,
    /// A newer sequence number reset the entry.
    Renewed,
    /// An alternative joined the list for the current sequence number.
    Added,
    /// The single route was replaced by a shorter one.
    Improved,
    Rejected(Rejection),
}

impl Acceptance {
    pub fn accepted(self) -> bool {
        !matches!(self, Acceptance::Rejected(_))
    }
}

/// Audit record of one offer to the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteUpdate {
    pub destination: NodeId,
    pub sequence_number: u32,
    /// Advertised hop count of the live entry for the same sequence number,
    /// if there was one.
    pub advertised_before: Option<u32>,
    pub advertised_after: Option<u32>,
    pub hop_count: u32,
    pub outcome: Acceptance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTable {
    mode: TableMode,
    entries: BTreeMap<NodeId, RouteTableEntry>,
}

impl RouteTable {
    pub fn new(mode: TableMode) -> Self {
        RouteTable { mode, entries: BTreeMap::new() }
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn entry(&self, destination: NodeId) -> Option<&RouteTableEntry> {
        self.entries.get(&destination)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RouteTableEntry> {
        self.entries.values()
    }

    /// Offers a route to `destination` learned with `sequence_number`.
    pub fn offer(
        &mut self,
        destination: NodeId,
        sequence_number: u32,
        path: RoutePath,
        now: f64,
        expires: f64,
    ) -> RouteUpdate {
        let fresh = RouteTableEntry {
            destination,
            sequence_number,
            advertised_hop_count: path.hop_count,
            route_list: vec![path],
            expiration_time: expires,
        };
        let mut update = RouteUpdate {
            destination,
            sequence_number,
            advertised_before: None,
            advertised_after: Some(path.hop_count),
            hop_count: path.hop_count,
            outcome: Acceptance::Created,
        };
        let Some(e) = self.entries.get_mut(&destination) else {
            self.entries.insert(destination, fresh);
            return update;
        };
        if e.is_expired(now) {
            // Expiry empties the list but keeps the sequence number and its
            // advertised hop count.
            e.route_list.clear();
            e.expiration_time = now;
        }
        if sequence_number > e.sequence_number {
            *e = fresh;
            update.outcome = Acceptance::Renewed;
            return update;
        }
        update.advertised_after = Some(e.advertised_hop_count);
        if sequence_number < e.sequence_number {
            update.outcome = Acceptance::Rejected(Rejection::StaleSequence);
            return update;
        }
        update.advertised_before = Some(e.advertised_hop_count);
        if path.hop_count >= e.advertised_hop_count {
            update.outcome = Acceptance::Rejected(Rejection::HopNotLower);
            return update;
        }
        match self.mode {
            TableMode::SinglePath => {
                e.route_list = vec![path];
                e.advertised_hop_count = path.hop_count;
                e.expiration_time = e.expiration_time.max(expires);
                update.advertised_after = Some(path.hop_count);
                update.outcome = Acceptance::Improved;
            }
            TableMode::Multipath { max_paths } => {
                if e.route_list.iter().any(|r| r.next_hop == path.next_hop) {
                    update.outcome = Acceptance::Rejected(Rejection::DuplicateNextHop);
                    return update;
                }
                if e.route_list.len() >= max_paths {
                    let worst = e.route_list.last().copied();
                    if worst.is_none_or(|w| order(&path, &w).is_ge()) {
                        update.outcome = Acceptance::Rejected(Rejection::ListFull);
                        return update;
                    }
                    e.route_list.pop();
                }
                let at = e.route_list.partition_point(|r| order(r, &path).is_lt());
                e.route_list.insert(at, path);
                e.expiration_time = e.expiration_time.max(expires);
                update.outcome = Acceptance::Added;
            }
        }
        update
    }

    /// First usable next hop towards `destination`. Multipath tables skip
    /// routes whose readiness is `Discard`.
    pub fn select(&self, destination: NodeId, now: f64) -> Option<RoutePath> {
        let e = self.entries.get(&destination)?;
        if e.is_expired(now) {
            return None;
        }
        match self.mode {
            TableMode::SinglePath => e.route_list.first().copied(),
            TableMode::Multipath { .. } => e.route_list.iter().find(|r| r.readiness != Readiness::Discard).copied(),
        }
    }

    pub fn refresh(&mut self, destination: NodeId, until: f64) {
        if let Some(e) = self.entries.get_mut(&destination) {
            e.expiration_time = e.expiration_time.max(until);
        }
    }

    /// Drops the route to `destination` through `next_hop`. Returns whether
    /// a route was removed.
    pub fn prune(&mut self, destination: NodeId, next_hop: NodeId) -> bool {
        let Some(e) = self.entries.get_mut(&destination) else {
            return false;
        };
        let before = e.route_list.len();
        e.route_list.retain(|r| r.next_hop != next_hop);
        before != e.route_list.len()
    }

    /// Drops every route through `next_hop`; returns the affected destinations.
    pub fn prune_next_hop(&mut self, next_hop: NodeId) -> Vec<NodeId> {
        let mut hit = Vec::new();
        for (dest, e) in self.entries.iter_mut() {
            let before = e.route_list.len();
            e.route_list.retain(|r| r.next_hop != next_hop);
            if e.route_list.len() != before {
                hit.push(*dest);
            }
        }
        hit
    }

    /// Whole-entry removal, used by the single-path baseline on a break.
    pub fn invalidate(&mut self, destination: NodeId) {
        if let Some(e) = self.entries.get_mut(&destination) {
            e.route_list.clear();
        }
    }

    pub fn route_count(&self, destination: NodeId) -> usize {
        self.entries.get(&destination).map_or(0, |e| e.route_list.len())
    }
}
