//! Hybrid routing: one-hop delivery inside a precinct, reactive multipath
//! discovery between precincts, and a single-path on-demand baseline.

pub mod drain;
pub mod messages;
pub mod router;
pub mod scripted;
pub mod table;

pub use drain::{compute_readiness, update_drain_rate, DrainState};
pub use messages::{DaPacket, DataPacket, Readiness, RerrMessage, RrepMessage, RreqMessage};
pub use router::{LocalView, RerrAction, Router, RouterConfig, RrepAction, RreqAction};
pub use table::{Acceptance, RoutePath, RouteTable, RouteTableEntry, RouteUpdate, TableMode};

/// Number of aggregated packets a head emits for `k` announcements.
pub fn aggregate_count(k: usize, ratio: f64) -> usize {
    if k == 0 {
        0
    } else {
        ((k as f64 * ratio).ceil() as usize).clamp(1, k)
    }
}
