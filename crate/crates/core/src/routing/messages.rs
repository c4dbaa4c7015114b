//! Routing-layer payloads: data announcements, data packets and the three
//! route-control messages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::PrecinctId;
use crate::NodeId;

/// Willingness of a node to carry traffic, worst first so that `min` picks
/// the bottleneck along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Readiness {
    Discard,
    Moderate,
    High,
}

impl fmt::Display for Readiness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readiness::Discard => "Discard",
            Readiness::Moderate => "Moderate",
            Readiness::High => "High",
        })
    }
}

impl FromStr for Readiness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Discard" => Ok(Readiness::Discard),
            "Moderate" => Ok(Readiness::Moderate),
            "High" => Ok(Readiness::High),
            other => Err(format!("unknown readiness `{other}`")),
        }
    }
}

/// Detector to fusion head: "I saw something at `generated_at`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaPacket {
    pub sender: NodeId,
    pub vid: f64,
    pub generated_at: f64,
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPacket {
    pub source: NodeId,
    pub destination: NodeId,
    pub bytes: u32,
    pub generated_at: f64,
    pub id: u64,
    /// Ids of the source-generated packets this one carries. A plain data
    /// packet carries only itself.
    pub originals: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RreqMessage {
    pub source: NodeId,
    pub source_precinct: PrecinctId,
    pub sequence_no: u32,
    pub broadcast_id: u32,
    pub hop_count: u32,
    pub destination: NodeId,
    pub max_surplus_energy: f64,
}

/// Route reply travelling from `destination` back to `source`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrepMessage {
    pub source: NodeId,
    pub destination: NodeId,
    pub destination_precinct: PrecinctId,
    pub sequence_number: u32,
    /// Hops from the receiving node to `destination`.
    pub hop_count: u32,
    pub readiness: Readiness,
    pub max_surplus_energy: f64,
    /// Shortest estimated node lifetime along the path, in seconds.
    pub lifetime: f64,
}

/// `destination` can no longer be reached through `unreachable_via`; the
/// report travels back towards `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerrMessage {
    pub source: NodeId,
    pub destination: NodeId,
    pub unreachable_via: NodeId,
}
