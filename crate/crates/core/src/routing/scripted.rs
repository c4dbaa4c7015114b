//! Deterministic message-level harness for routers on a hand-built graph.
//!
//! Links carry a fixed one-way delay and never lose frames. Data packets are
//! walked hop by hop instantly, which is enough to exercise discovery,
//! failover and route errors without the radio stack.

use std::collections::BTreeMap;

use super::messages::{Readiness, RerrMessage, RrepMessage, RreqMessage};
use super::router::{LocalView, RerrAction, Router, RouterConfig, RrepAction, RreqAction};
use super::table::RouteUpdate;
use crate::clustering::PrecinctId;
use crate::engine::config::Protocol;
use crate::engine::scheduler::Scheduler;
use crate::NodeId;

#[derive(Debug, Clone)]
enum Transit {
    Rreq { to: NodeId, from: NodeId, msg: RreqMessage, path: Vec<NodeId> },
    Rrep { to: NodeId, from: NodeId, msg: RrepMessage },
    Rerr { to: NodeId, from: NodeId, msg: RerrMessage },
}

/// One flood copy accepted by a node, with the nodes it visited.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyRecord {
    pub node: NodeId,
    pub path: Vec<NodeId>,
    pub max_surplus: f64,
    /// The node answered this copy with a route reply.
    pub replied: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ScriptLog {
    pub copies: Vec<CopyRecord>,
    pub updates: Vec<(NodeId, RouteUpdate)>,
    pub rerrs: Vec<(NodeId, RerrMessage)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataWalk {
    pub delivered: bool,
    pub path: Vec<NodeId>,
    /// Floods started while sending this packet.
    pub floods: usize,
}

#[derive(Debug)]
pub struct ScriptedNetwork {
    routers: Vec<Router>,
    views: Vec<LocalView>,
    links: BTreeMap<(NodeId, NodeId), f64>,
    queue: Scheduler<Transit>,
    floods: usize,
    log: ScriptLog,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ScriptedNetwork {
    pub fn new(protocol: Protocol, surpluses: &[f64]) -> Self {
        let cfg = RouterConfig { protocol, max_paths: 3, route_lifetime: 1e6, flood_state_ttl: 1e3 };
        Self::with_config(cfg, surpluses)
    }

    pub fn with_config(cfg: RouterConfig, surpluses: &[f64]) -> Self {
        let routers = (0..surpluses.len()).map(|i| Router::new(NodeId::from_index(i), cfg)).collect();
        let views = surpluses
            .iter()
            .map(|&s| LocalView {
                surplus: s,
                readiness: Readiness::High,
                lifetime: f64::INFINITY,
                precinct: PrecinctId::new(0, 0),
                relay: true,
            })
            .collect();
        ScriptedNetwork {
            routers,
            views,
            links: BTreeMap::new(),
            queue: Scheduler::new(),
            floods: 0,
            log: ScriptLog::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.routers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routers.is_empty()
    }

    pub fn connect(&mut self, a: NodeId, b: NodeId, delay: f64) {
        assert!(a != b && delay > 0.0);
        self.links.insert(key(a, b), delay);
    }

    pub fn disconnect(&mut self, a: NodeId, b: NodeId) {
        self.links.remove(&key(a, b));
    }

    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.links.contains_key(&key(a, b))
    }

    pub fn view_mut(&mut self, node: NodeId) -> &mut LocalView {
        &mut self.views[node.index()]
    }

    pub fn router(&self, node: NodeId) -> &Router {
        &self.routers[node.index()]
    }

    pub fn floods(&self) -> usize {
        self.floods
    }

    pub fn log(&self) -> &ScriptLog {
        &self.log
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    fn neighbors(&self, n: NodeId) -> Vec<(NodeId, f64)> {
        self.links
            .iter()
            .filter_map(|(&(a, b), &d)| {
                if a == n {
                    Some((b, d))
                } else if b == n {
                    Some((a, d))
                } else {
                    None
                }
            })
            .collect()
    }

    fn send_to(&mut self, from: NodeId, to: NodeId, t: Transit) {
        if let Some(&d) = self.links.get(&key(from, to)) {
            self.queue.schedule_in(d, t).expect("positive delay");
        }
    }

    fn broadcast(&mut self, from: NodeId, msg: RreqMessage, path: &[NodeId]) {
        for (to, d) in self.neighbors(from) {
            let t = Transit::Rreq { to, from, msg, path: path.to_vec() };
            self.queue.schedule_in(d, t).expect("positive delay");
        }
    }

    /// Floods a request from `source` and runs until the network is quiet.
    /// Returns whether `source` ends up with a usable route.
    pub fn discover(&mut self, source: NodeId, destination: NodeId) -> bool {
        let now = self.now();
        let view = self.views[source.index()];
        let msg = self.routers[source.index()].originate_rreq(destination, &view, now);
        self.floods += 1;
        self.broadcast(source, msg, &[source]);
        self.run();
        self.routers[source.index()].has_route(destination, self.now())
    }

    fn run(&mut self) {
        while let Some(ev) = self.queue.pop() {
            let now = ev.fire_time;
            match ev.kind {
                Transit::Rreq { to, from, msg, mut path } => {
                    let view = self.views[to.index()];
                    let action = self.routers[to.index()].handle_rreq(from, &msg, &view, now);
                    path.push(to);
                    match action {
                        RreqAction::Forward(fwd) => {
                            self.log.copies.push(CopyRecord {
                                node: to,
                                path: path.clone(),
                                max_surplus: fwd.max_surplus_energy,
                                replied: false,
                            });
                            self.broadcast(to, fwd, &path);
                        }
                        RreqAction::Reply { rrep, to: next } => {
                            self.log.copies.push(CopyRecord {
                                node: to,
                                path,
                                max_surplus: rrep.max_surplus_energy,
                                replied: true,
                            });
                            self.send_to(to, next, Transit::Rrep { to: next, from: to, msg: rrep });
                        }
                        RreqAction::Drop(_) => {}
                    }
                }
                Transit::Rrep { to, from, msg } => {
                    let view = self.views[to.index()];
                    match self.routers[to.index()].handle_rrep(from, &msg, &view, now) {
                        RrepAction::Installed { update } => self.log.updates.push((to, update)),
                        RrepAction::Forward { rrep, to: next, update } => {
                            self.log.updates.push((to, update));
                            self.send_to(to, next, Transit::Rrep { to: next, from: to, msg: rrep });
                        }
                        RrepAction::Refuse { rerr, to: next, update } => {
                            self.log.updates.push((to, update));
                            self.send_to(to, next, Transit::Rerr { to: next, from: to, msg: rerr });
                        }
                        RrepAction::Drop { update, .. } => {
                            if let Some(u) = update {
                                self.log.updates.push((to, u));
                            }
                        }
                    }
                }
                Transit::Rerr { to, from, msg } => {
                    self.log.rerrs.push((to, msg));
                    if let RerrAction::Propagate(next_msg) = self.routers[to.index()].handle_rerr(from, &msg) {
                        if let Some(next) = self.routers[to.index()].reverse_hop(msg.source, now) {
                            self.send_to(to, next, Transit::Rerr { to: next, from: to, msg: next_msg });
                        }
                    }
                }
            }
        }
    }

    /// Walks one data packet from `source` to `destination`. Broken links
    /// are detected on use; the sender drops that next hop and tries its
    /// remaining routes. A source without routes starts one discovery.
    pub fn send(&mut self, source: NodeId, destination: NodeId) -> DataWalk {
        let start_floods = self.floods;
        let mut path = vec![source];
        let mut at = source;
        let mut rediscovered = false;
        let limit = self.routers.len() + 1;
        loop {
            if at == destination {
                return DataWalk { delivered: true, path, floods: self.floods - start_floods };
            }
            let now = self.now();
            match self.routers[at.index()].next_hop(destination, now) {
                Some(next) if self.linked(at, next) => {
                    at = next;
                    path.push(at);
                    if path.len() > limit {
                        return DataWalk { delivered: false, path, floods: self.floods - start_floods };
                    }
                }
                Some(next) => {
                    self.routers[at.index()].link_failed(next);
                }
                None if at == source && !rediscovered => {
                    rediscovered = true;
                    self.discover(source, destination);
                }
                None => {
                    self.report_break(&path, destination);
                    return DataWalk { delivered: false, path, floods: self.floods - start_floods };
                }
            }
        }
    }

    /// Sends a route error back along a data packet's path.
    fn report_break(&mut self, path: &[NodeId], destination: NodeId) {
        let Some((&last, upstream)) = path.split_last() else {
            return;
        };
        let mut msg = RerrMessage { source: path[0], destination, unreachable_via: last };
        let mut from = last;
        for &node in upstream.iter().rev() {
            self.log.rerrs.push((node, msg));
            match self.routers[node.index()].handle_rerr(from, &msg) {
                RerrAction::Absorbed { .. } => return,
                RerrAction::Propagate(next) => {
                    msg = next;
                    from = node;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    /// 0 reaches 4 over a fast long path 0-1-2-4 and a slow short path 0-3-4
    /// whose relay has more energy.
    fn two_path(protocol: Protocol) -> ScriptedNetwork {
        let mut net = ScriptedNetwork::new(protocol, &[2.0, 1.0, 1.0, 4.0, 2.0]);
        net.connect(n(0), n(1), 0.01);
        net.connect(n(1), n(2), 0.01);
        net.connect(n(2), n(4), 0.01);
        net.connect(n(0), n(3), 0.05);
        net.connect(n(3), n(4), 0.05);
        net
    }

    #[test]
    fn multipath_discovery_keeps_both_routes() {
        let mut net = two_path(Protocol::E2rp);
        assert!(net.discover(n(0), n(4)));
        let e = net.router(n(0)).table().entry(n(4)).unwrap();
        let hops: Vec<NodeId> = e.route_list.iter().map(|r| r.next_hop).collect();
        assert_eq!(hops, vec![n(3), n(1)]);
        assert_eq!(e.route_list[0].max_surplus_energy, 4.0);
    }

    #[test]
    fn failover_without_rediscovery() {
        let mut net = two_path(Protocol::E2rp);
        net.discover(n(0), n(4));
        let before = net.floods();
        net.disconnect(n(0), n(3));
        let walk = net.send(n(0), n(4));
        assert!(walk.delivered);
        assert_eq!(walk.path, vec![n(0), n(1), n(2), n(4)]);
        assert_eq!(net.floods(), before);
    }

    #[test]
    fn single_path_rediscovers_after_break() {
        let mut net = two_path(Protocol::Aodv);
        net.discover(n(0), n(4));
        assert_eq!(net.router(n(0)).table().route_count(n(4)), 1);
        let used = net.router(n(0)).table().select(n(4), net.now()).unwrap().next_hop;
        net.disconnect(n(0), used);
        let walk = net.send(n(0), n(4));
        assert!(walk.delivered);
        assert_eq!(walk.floods, 1);
    }

    #[test]
    fn intermediate_break_sends_error_upstream() {
        let mut net = ScriptedNetwork::new(Protocol::Aodv, &[1.0; 4]);
        net.connect(n(0), n(1), 0.01);
        net.connect(n(1), n(2), 0.01);
        net.connect(n(2), n(3), 0.01);
        net.discover(n(0), n(3));
        net.disconnect(n(2), n(3));
        let walk = net.send(n(0), n(3));
        assert!(!walk.delivered);
        assert!(net.log().rerrs.iter().any(|(node, m)| *node == n(0) && m.destination == n(3)));
        assert!(!net.router(n(0)).has_route(n(3), net.now()));
    }
}
