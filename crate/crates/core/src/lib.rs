//! Discrete-event simulator for mobile wireless sensor networks with
//! grid-based clustering, energy-aware multipath routing and an on-demand
//! single-path baseline.

pub mod clustering;
pub mod engine;
pub mod geom;
pub mod metrics;
pub mod mobility;
pub mod packet;
pub mod phy;
pub mod routing;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::config::{ConfigError, Protocol, ScenarioConfig};
pub use engine::sim::{run, Simulation};
pub use metrics::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn from_index(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index fits in u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}
