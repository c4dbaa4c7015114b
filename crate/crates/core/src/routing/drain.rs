//! Energy drain rate, lifetime estimate and readiness.

use serde::{Deserialize, Serialize};

use super::messages::Readiness;

/// Below this surplus a node is on low battery.
pub const LOW_BATTERY_J: f64 = 1.0;
/// Below this estimated lifetime a node is short-lived.
pub const SHORT_LIFETIME_S: f64 = 10.0;
/// Above this estimated lifetime a node is long-lived.
pub const LONG_LIFETIME_S: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrainState {
    /// Smoothed drain rate in J/s.
    pub drain_rate: f64,
    /// Rate before the latest sample.
    pub prev_drain: f64,
    /// Seconds until empty at the current rate.
    pub lifetime_estimate: f64,
    pub ewma_alpha: f64,
    /// Whether any sample has been folded in yet.
    pub sampled: bool,
}

impl DrainState {
    pub fn new(ewma_alpha: f64) -> Self {
        DrainState { drain_rate: 0.0, prev_drain: 0.0, lifetime_estimate: f64::INFINITY, ewma_alpha, sampled: false }
    }
}

pub fn lifetime_estimate(surplus: f64, drain_rate: f64) -> f64 {
    if drain_rate > 0.0 {
        surplus.max(0.0) / drain_rate
    } else {
        f64::INFINITY
    }
}

/// Folds one sampling window into the EWMA. The first window seeds the
/// average directly so that the estimate does not start biased towards 0.
pub fn update_drain_rate(state: &DrainState, consumed_in_window: f64, window: f64, surplus: f64) -> DrainState {
    debug_assert!(window > 0.0);
    let sample = (consumed_in_window / window).max(0.0);
    let old = if state.sampled { state.drain_rate } else { sample };
    let a = state.ewma_alpha;
    let rate = (a * old + (1.0 - a) * sample).max(0.0);
    DrainState {
        drain_rate: rate,
        prev_drain: old,
        lifetime_estimate: lifetime_estimate(surplus, rate),
        ewma_alpha: a,
        sampled: true,
    }
}

pub fn compute_readiness(surplus: f64, lifetime: f64) -> Readiness {
    if surplus < LOW_BATTERY_J || lifetime < SHORT_LIFETIME_S {
        Readiness::Discard
    } else if lifetime > LONG_LIFETIME_S {
        Readiness::High
    } else {
        Readiness::Moderate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn readiness_bands() {
        assert_eq!(compute_readiness(0.5, 500.0), Readiness::Discard);
        assert_eq!(compute_readiness(3.0, 50.0), Readiness::Moderate);
        assert_eq!(compute_readiness(3.0, 200.0), Readiness::High);
        assert_eq!(compute_readiness(3.0, 9.9), Readiness::Discard);
        assert_eq!(compute_readiness(1.0, 100.0), Readiness::Moderate);
        assert_eq!(compute_readiness(1.0, f64::INFINITY), Readiness::High);
    }

    #[test]
    fn fixed_point_and_alpha_zero() {
        let mut s = DrainState::new(0.3);
        s = update_drain_rate(&s, 0.2, 5.0, 4.0);
        assert!((s.drain_rate - 0.04).abs() < 1e-15);
        let again = update_drain_rate(&s, 0.2, 5.0, 4.0);
        assert!((again.drain_rate - 0.04).abs() < 1e-15);

        let zero = DrainState { ewma_alpha: 0.0, ..again };
        let next = update_drain_rate(&zero, 1.0, 5.0, 4.0);
        assert_eq!(next.drain_rate, 0.2);
    }

    #[test]
    fn ewma_blend() {
        let s = DrainState { drain_rate: 0.1, prev_drain: 0.1, lifetime_estimate: 50.0, ewma_alpha: 0.3, sampled: true };
        let n = update_drain_rate(&s, 0.5, 5.0, 5.0);
        assert!((n.drain_rate - (0.3 * 0.1 + 0.7 * 0.1)).abs() < 1e-15);
        let n = update_drain_rate(&s, 1.0, 5.0, 5.0);
        assert!((n.drain_rate - (0.03 + 0.7 * 0.2)).abs() < 1e-15);
        assert_eq!(n.prev_drain, 0.1);
    }

    #[test]
    fn lifetime_examples() {
        assert!((lifetime_estimate(5.0, 0.05) - 100.0).abs() < 1e-12);
        assert_eq!(lifetime_estimate(5.0, 0.0), f64::INFINITY);
        assert_eq!(DrainState::new(0.3).lifetime_estimate, f64::INFINITY);
    }

    proptest! {
        #[test]
        fn readiness_monotone(s in 0.0f64..10.0, l in 0.0f64..1000.0, ds in 0.0f64..5.0, dl in 0.0f64..500.0) {
            let base = compute_readiness(s, l);
            prop_assert!(compute_readiness(s + ds, l) >= base);
            prop_assert!(compute_readiness(s, l + dl) >= base);
        }

        #[test]
        fn drain_rate_non_negative(prev in 0.0f64..1.0, used in 0.0f64..2.0, t in 0.1f64..10.0, a in 0.0f64..=1.0) {
            let s = DrainState { drain_rate: prev, prev_drain: prev, lifetime_estimate: 0.0, ewma_alpha: a, sampled: true };
            let n = update_drain_rate(&s, used, t, 3.0);
            prop_assert!(n.drain_rate >= 0.0);
            if n.drain_rate > 0.0 {
                prop_assert!((n.lifetime_estimate - 3.0 / n.drain_rate).abs() <= 1e-9 * n.lifetime_estimate);
            }
        }
    }
}
