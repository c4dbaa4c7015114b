//! Virtual clock and event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("event scheduled at t={fire_time} but the clock already reads t={now}")]
pub struct ScheduleError {
    pub fire_time: f64,
    pub now: f64,
}

/// A queued event. Dispatch order is `(fire_time, sequence)` ascending.
#[derive(Debug, Clone)]
pub struct SimEvent<K> {
    pub fire_time: f64,
    pub sequence: u64,
    pub kind: K,
}

impl<K> PartialEq for SimEvent<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for SimEvent<K> {}

impl<K> PartialOrd for SimEvent<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for SimEvent<K> {
    // Reversed so that BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .total_cmp(&self.fire_time)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

#[derive(Debug)]
pub struct Scheduler<K> {
    now: f64,
    next_sequence: u64,
    heap: BinaryHeap<SimEvent<K>>,
}

impl<K> Default for Scheduler<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Scheduler<K> {
    pub fn new() -> Self {
        Scheduler { now: 0.0, next_sequence: 0, heap: BinaryHeap::new() }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Queues `kind` at absolute time `fire_time`. Returns the sequence
    /// number that breaks ties with other events at the same instant.
    pub fn schedule(&mut self, fire_time: f64, kind: K) -> Result<u64, ScheduleError> {
        if fire_time.is_nan() || fire_time < self.now {
            return Err(ScheduleError { fire_time, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(SimEvent { fire_time, sequence, kind });
        Ok(sequence)
    }

    /// Queues `kind` `delay` seconds from now.
    pub fn schedule_in(&mut self, delay: f64, kind: K) -> Result<u64, ScheduleError> {
        self.schedule(self.now + delay, kind)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.fire_time)
    }

    /// Removes the next event and advances the clock to its fire time.
    pub fn pop(&mut self) -> Option<SimEvent<K>> {
        let event = self.heap.pop()?;
        self.now = event.fire_time;
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(s: &mut Scheduler<&'static str>) -> Vec<&'static str> {
        std::iter::from_fn(|| s.pop().map(|e| e.kind)).collect()
    }

    #[test]
    fn ties_dispatch_in_insertion_order() {
        let mut s = Scheduler::new();
        s.schedule(5.0, "A").unwrap();
        s.schedule(5.0, "B").unwrap();
        assert_eq!(drain(&mut s), ["A", "B"]);
    }

    #[test]
    fn earlier_time_first() {
        let mut s = Scheduler::new();
        s.schedule(3.0, "late").unwrap();
        s.schedule(2.0, "early").unwrap();
        assert_eq!(drain(&mut s), ["early", "late"]);
    }

    #[test]
    fn event_at_current_clock_precedes_later_ones() {
        let mut s = Scheduler::new();
        s.schedule(1.0, "first").unwrap();
        s.pop();
        s.schedule(2.0, "later").unwrap();
        s.schedule(1.0, "now").unwrap();
        assert_eq!(drain(&mut s), ["now", "later"]);
    }

    #[test]
    fn past_events_are_rejected() {
        let mut s = Scheduler::new();
        s.schedule(4.0, "x").unwrap();
        s.pop();
        assert_eq!(s.schedule(3.5, "y"), Err(ScheduleError { fire_time: 3.5, now: 4.0 }));
        assert!(s.schedule(f64::NAN, "z").is_err());
    }

    proptest::proptest! {
        #[test]
        fn dispatch_is_sorted(times in proptest::collection::vec(0.0f64..100.0, 1..200)) {
            let mut s = Scheduler::new();
            for (i, t) in times.iter().enumerate() {
                s.schedule(*t, i).unwrap();
            }
            let mut last = (f64::NEG_INFINITY, 0usize);
            while let Some(e) = s.pop() {
                proptest::prop_assert!(e.fire_time >= last.0);
                if e.fire_time == last.0 {
                    proptest::prop_assert!(e.kind > last.1);
                }
                proptest::prop_assert_eq!(s.now(), e.fire_time);
                last = (e.fire_time, e.kind);
            }
        }
    }
}
