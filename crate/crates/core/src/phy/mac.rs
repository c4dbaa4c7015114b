//! Slotted contention channel.
//!
//! Time is cut into `slot`-second slots. A sender picks a start slot a
//! uniform 1..=`backoff_slots` slots ahead of the current one. Two frames
//! that start in the same slot collide at every receiver that hears both
//! senders; a node cannot receive in a slot where it transmits itself.
//! Frames starting in different slots never collide, which stands in for
//! carrier sensing. Unicast frames are retried after a failed attempt up to
//! `max_retries` times; broadcasts are sent once.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacParams {
    pub slot: f64,
    pub max_retries: u32,
    pub backoff_slots: u32,
}

impl MacParams {
    pub fn slot_of(&self, t: f64) -> u64 {
        // Nudge so that exact slot boundaries land in their own slot.
        ((t / self.slot) + 1e-6).floor().max(0.0) as u64
    }

    pub fn slot_start(&self, slot: u64) -> f64 {
        slot as f64 * self.slot
    }

    pub fn draw_backoff<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(1..=u64::from(self.backoff_slots))
    }

    /// Start slot for an attempt requested at `now`; always in the future.
    pub fn start_slot<R: Rng + ?Sized>(&self, now: f64, rng: &mut R) -> u64 {
        self.slot_of(now) + self.draw_backoff(rng)
    }

    /// Decision after attempt number `attempt` (0 = first transmission) failed.
    pub fn after_failure<R: Rng + ?Sized>(&self, attempt: u32, now: f64, rng: &mut R) -> RetryDecision {
        if attempt < self.max_retries {
            RetryDecision::Retry { slot: self.start_slot(now, rng) }
        } else {
            RetryDecision::GiveUp
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reception {
    Delivered,
    Collided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetryDecision {
    Retry { slot: u64 },
    GiveUp,
}

/// Who transmits in which slot.
#[derive(Debug, Default, Clone)]
pub struct Channel {
    slots: BTreeMap<u64, Vec<NodeId>>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, slot: u64, sender: NodeId) {
        self.slots.entry(slot).or_default().push(sender);
    }

    pub fn senders_in(&self, slot: u64) -> &[NodeId] {
        self.slots.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Outcome at `receiver` of `sender`'s frame in `slot`. `hears(a, b)`
    /// tells whether `b` is within range of `a`.
    pub fn reception(
        &self,
        slot: u64,
        sender: NodeId,
        receiver: NodeId,
        hears: impl Fn(NodeId, NodeId) -> bool,
    ) -> Reception {
        let mut own_seen = false;
        for &other in self.senders_in(slot) {
            if other == sender && !own_seen {
                own_seen = true;
                continue;
            }
            if other == receiver || hears(receiver, other) {
                return Reception::Collided;
            }
        }
        Reception::Delivered
    }

    /// Per-receiver outcome of `sender`'s frame in `slot`.
    pub fn deliver(
        &self,
        slot: u64,
        sender: NodeId,
        receivers: &[NodeId],
        hears: impl Fn(NodeId, NodeId) -> bool,
    ) -> Vec<(NodeId, Reception)> {
        receivers.iter().map(|&r| (r, self.reception(slot, sender, r, &hears))).collect()
    }

    /// Forgets every slot strictly before `slot`.
    pub fn prune_before(&mut self, slot: u64) {
        self.slots = self.slots.split_off(&slot);
    }

    pub fn tracked_slots(&self) -> usize {
        self.slots.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_hear(_: NodeId, _: NodeId) -> bool {
        true
    }

    fn params(max_retries: u32) -> MacParams {
        MacParams { slot: 1e-3, max_retries, backoff_slots: 8 }
    }

    #[test]
    fn lone_sender_delivers_everywhere() {
        let mut ch = Channel::new();
        ch.register(10, NodeId(0));
        let out = ch.deliver(10, NodeId(0), &[NodeId(1), NodeId(2), NodeId(3)], all_hear);
        assert!(out.iter().all(|&(_, r)| r == Reception::Delivered));
    }

    #[test]
    fn same_slot_collides_at_common_receiver() {
        let mut ch = Channel::new();
        ch.register(10, NodeId(0));
        ch.register(10, NodeId(1));
        assert_eq!(ch.reception(10, NodeId(0), NodeId(2), all_hear), Reception::Collided);
        assert_eq!(ch.reception(10, NodeId(1), NodeId(2), all_hear), Reception::Collided);
        // A receiver out of range of the second sender still decodes the first.
        let hears = |rx: NodeId, tx: NodeId| !(rx == NodeId(3) && tx == NodeId(1));
        assert_eq!(ch.reception(10, NodeId(0), NodeId(3), hears), Reception::Delivered);
    }

    #[test]
    fn different_slots_do_not_collide() {
        let mut ch = Channel::new();
        ch.register(10, NodeId(0));
        ch.register(11, NodeId(1));
        assert_eq!(ch.reception(10, NodeId(0), NodeId(2), all_hear), Reception::Delivered);
    }

    #[test]
    fn transmitting_node_cannot_receive() {
        let mut ch = Channel::new();
        ch.register(4, NodeId(0));
        ch.register(4, NodeId(1));
        let hears = |_: NodeId, _: NodeId| false;
        assert_eq!(ch.reception(4, NodeId(0), NodeId(1), hears), Reception::Collided);
    }

    #[test]
    fn retry_exhaustion_loses_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(params(0).after_failure(0, 1.0, &mut rng), RetryDecision::GiveUp);
        match params(3).after_failure(2, 1.0, &mut rng) {
            RetryDecision::Retry { slot } => assert!((1001..=1008).contains(&slot)),
            RetryDecision::GiveUp => panic!("retries left"),
        }
        assert_eq!(params(3).after_failure(3, 1.0, &mut rng), RetryDecision::GiveUp);
    }

    #[test]
    fn slot_arithmetic() {
        let p = params(3);
        assert_eq!(p.slot_of(0.0), 0);
        assert_eq!(p.slot_of(1.0), 1000);
        assert_eq!(p.slot_of(0.0125), 12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let s = p.start_slot(2.0, &mut rng);
            assert!((2001..=2008).contains(&s));
        }
    }

    #[test]
    fn pruning() {
        let mut ch = Channel::new();
        for s in 0..10 {
            ch.register(s, NodeId(0));
        }
        ch.prune_before(7);
        assert_eq!(ch.tracked_slots(), 3);
        assert!(ch.senders_in(6).is_empty());
    }
}
