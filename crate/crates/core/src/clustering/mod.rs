//! Precinct clustering: grid, gateways, HELLO beacons and fusion-head election.

pub mod election;
pub mod grid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeId;

pub use election::{
    compute_vid, elect_fusion_head, fusion_probability, reelection_check, score_precinct, CandidateScore, Reelection,
    Thresholds,
};
pub use grid::{build_precinct_grid, identify_gateways, Precinct, PrecinctGrid, PrecinctId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("grid dimension must be at least 1")]
    ZeroGrid,
    #[error("field side must be positive, got {0}")]
    BadField(f64),
    #[error("precinct has no members")]
    EmptyPrecinct,
    #[error("node {0} is not a member of the precinct")]
    NotMember(NodeId),
}

/// Periodic beacon carrying a member's election inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelloPacket {
    pub sender: NodeId,
    pub surplus: f64,
    pub p_fusion: f64,
    pub vid: f64,
}
