//! Random waypoint motion and the relative-mobility metric.
//!
//! A node's relative mobility is the mean absolute range-rate of every other
//! node in its scope, with the range-rate taken as a backward difference of
//! the pairwise distance over the sampling interval. Network mobility is the
//! mean of the per-node values.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Moving,
    Paused,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    pub position: Vec2,
    pub waypoint: Vec2,
    pub speed: f64,
    pub phase: Phase,
    pub pause_until: f64,
}

impl MotionState {
    /// A node parked at `position` that picks its first waypoint on the
    /// first step.
    pub fn parked(position: Vec2) -> Self {
        MotionState { position, waypoint: position, speed: 0.0, phase: Phase::Paused, pause_until: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointParams {
    pub field_side: f64,
    pub pause_time: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl WaypointParams {
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(rng.gen::<f64>() * self.field_side, rng.gen::<f64>() * self.field_side)
    }

    fn sample_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.speed_max > self.speed_min {
            rng.gen_range(self.speed_min..=self.speed_max)
        } else {
            self.speed_min
        }
    }
}

// Bounds the number of legs in one step; only reachable with pause_time = 0
// and degenerate waypoints.
const MAX_LEGS_PER_STEP: usize = 64;

/// Advances `state` from time `now` to `now + dt`.
pub fn step_motion<R: Rng + ?Sized>(
    state: &MotionState,
    now: f64,
    dt: f64,
    params: &WaypointParams,
    rng: &mut R,
) -> MotionState {
    debug_assert!(dt > 0.0);
    let mut s = *state;
    let mut t = now;
    let end = now + dt;
    for _ in 0..MAX_LEGS_PER_STEP {
        if t >= end {
            break;
        }
        match s.phase {
            Phase::Paused => {
                if s.pause_until <= t {
                    s.waypoint = params.sample_point(rng);
                    s.speed = params.sample_speed(rng);
                    s.phase = Phase::Moving;
                } else {
                    t = s.pause_until.min(end);
                }
            }
            Phase::Moving => {
                let gap = s.waypoint - s.position;
                let dist = gap.length();
                let to_arrival = dist / s.speed;
                if to_arrival <= end - t {
                    t += to_arrival;
                    s.position = s.waypoint;
                    s.phase = Phase::Paused;
                    s.speed = 0.0;
                    s.pause_until = t + params.pause_time;
                } else {
                    s.position = s.position + gap * ((end - t) * s.speed / dist);
                    t = end;
                }
            }
        }
    }
    s.position.x = s.position.x.clamp(0.0, params.field_side);
    s.position.y = s.position.y.clamp(0.0, params.field_side);
    s
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("network mobility needs at least one sample")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeMobility {
    pub value: f64,
    /// The scope held fewer than two nodes, so the metric is pinned to 0.
    pub singleton_scope: bool,
}

/// Relative mobility of `node` with respect to the other members of `scope`.
///
/// `now` and `prev` are indexed by node id; `scope` lists the node ids that
/// form the averaging population (it may include `node` itself).
pub fn relative_mobility(node: usize, scope: &[usize], now: &[Vec2], prev: &[Vec2], delta: f64) -> RelativeMobility {
    debug_assert!(delta > 0.0);
    let others = scope.iter().copied().filter(|&j| j != node);
    let n_others = others.clone().count();
    if n_others == 0 {
        return RelativeMobility { value: 0.0, singleton_scope: true };
    }
    let sum: f64 = others
        .map(|j| {
            let d_now = now[node].distance(now[j]);
            let d_prev = prev[node].distance(prev[j]);
            ((d_now - d_prev) / delta).abs()
        })
        .sum();
    RelativeMobility { value: sum / n_others as f64, singleton_scope: false }
}

pub fn network_mobility(samples: &[f64]) -> Result<f64, MobilityError> {
    if samples.is_empty() {
        return Err(MobilityError::Empty);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}
