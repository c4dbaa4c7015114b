//! Fusion-head scoring and election.
//!
//! Each member is scored on three events: surplus above `e_th`, transmission
//! range above `r_th` and relative mobility below `m_th`. For every event a
//! member that passes receives its share of the passing members' total
//! (inverse mobility for the mobility event); a member that fails gets 0. The
//! three shares are averaged, so the score is a probability in [0, 1] and the
//! shares of one event sum to 1 across the precinct.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::NodeId;

/// Regulariser for the inverse-mobility share of a perfectly still node.
pub const MOBILITY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub energy: f64,
    pub range: f64,
    pub mobility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub node: NodeId,
    pub vid: f64,
    pub surplus: f64,
    pub tx_range: f64,
    pub mobility: f64,
    pub p_fusion: f64,
}

impl CandidateScore {
    pub fn new(node: NodeId, surplus: f64, tx_range: f64, mobility: f64, vid: f64) -> Self {
        CandidateScore { node, vid, surplus, tx_range, mobility, p_fusion: 0.0 }
    }
}

/// Virtual identifier: surplus spread over the precinct population. A head
/// that stepped down advertises 0.
pub fn compute_vid(surplus: f64, precinct_population: usize, retired_head: bool) -> Result<f64, ClusterError> {
    if precinct_population == 0 {
        return Err(ClusterError::EmptyPrecinct);
    }
    if retired_head {
        return Ok(0.0);
    }
    Ok(surplus / precinct_population as f64)
}

fn passes_energy(s: &CandidateScore, th: &Thresholds) -> bool {
    s.surplus > th.energy
}

fn passes_range(s: &CandidateScore, th: &Thresholds) -> bool {
    s.tx_range > th.range
}

fn passes_mobility(s: &CandidateScore, th: &Thresholds) -> bool {
    s.mobility < th.mobility
}

fn inverse_mobility(s: &CandidateScore) -> f64 {
    1.0 / (s.mobility.max(0.0) + MOBILITY_EPSILON)
}

fn share(candidate: &CandidateScore, all: &[CandidateScore], pass: impl Fn(&CandidateScore) -> bool, weight: impl Fn(&CandidateScore) -> f64) -> f64 {
    if !pass(candidate) {
        return 0.0;
    }
    let total: f64 = all.iter().filter(|s| pass(s)).map(&weight).sum();
    if total > 0.0 {
        (weight(candidate) / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Probability that `candidate` should lead the precinct described by `scores`.
pub fn fusion_probability(candidate: NodeId, scores: &[CandidateScore], thresholds: &Thresholds) -> Result<f64, ClusterError> {
    if scores.is_empty() {
        return Err(ClusterError::EmptyPrecinct);
    }
    let c = scores.iter().find(|s| s.node == candidate).ok_or(ClusterError::NotMember(candidate))?;
    let e = share(c, scores, |s| passes_energy(s, thresholds), |s| s.surplus);
    let r = share(c, scores, |s| passes_range(s, thresholds), |s| s.tx_range);
    let m = share(c, scores, |s| passes_mobility(s, thresholds), inverse_mobility);
    Ok(((e + r + m) / 3.0).clamp(0.0, 1.0))
}

/// Fills `p_fusion` for every member.
pub fn score_precinct(scores: &mut [CandidateScore], thresholds: &Thresholds) {
    let snapshot: Vec<CandidateScore> = scores.to_vec();
    for s in scores.iter_mut() {
        s.p_fusion = fusion_probability(s.node, &snapshot, thresholds).unwrap_or(0.0);
    }
}

/// Total order used to pick a head: higher probability, then higher VID,
/// then lower node id. `Greater` means `a` is the better candidate.
fn rank(a: &CandidateScore, b: &CandidateScore) -> Ordering {
    a.p_fusion
        .total_cmp(&b.p_fusion)
        .then_with(|| a.vid.total_cmp(&b.vid))
        .then_with(|| b.node.cmp(&a.node))
}

/// Member with the highest probability. When every probability is 0 this
/// falls through to the highest VID.
pub fn elect_fusion_head(scores: &[CandidateScore]) -> Option<NodeId> {
    scores.iter().max_by(|a, b| rank(a, b)).map(|s| s.node)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reelection {
    /// Head stays.
    Keep,
    /// Head fell below the threshold and hands over; `retired` must advertise VID 0.
    Handover { retired: NodeId, new_head: NodeId },
    /// The head is no longer a live member; a fresh head was chosen.
    Replaced { new_head: NodeId },
    /// No members remain; the precinct has no head.
    Cleared,
}

/// Periodic check of the sitting head against `p_threshold`.
pub fn reelection_check(head: Option<NodeId>, scores: &[CandidateScore], p_threshold: f64) -> Reelection {
    let Some(best_overall) = elect_fusion_head(scores) else {
        return Reelection::Cleared;
    };
    let Some(current) = head.and_then(|h| scores.iter().find(|s| s.node == h)) else {
        return Reelection::Replaced { new_head: best_overall };
    };
    if current.p_fusion >= p_threshold {
        return Reelection::Keep;
    }
    match scores.iter().filter(|s| s.node != current.node).max_by(|a, b| rank(a, b)) {
        Some(next) => Reelection::Handover { retired: current.node, new_head: next.node },
        None => Reelection::Keep,
    }
}
