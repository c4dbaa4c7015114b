//! Line-oriented event log.
//!
//! Every record is one line: the event time, a tag, then tag-specific fields
//! separated by spaces. Packets are embedded in their wire text, so a `TX`
//! line ends with the full packet. Parsing a printed record yields it back.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::PrecinctId;
use crate::packet::{Fields, Packet, WireError};
use crate::routing::table::{Acceptance, Rejection};
use crate::NodeId;

/// Where a frame was addressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Broadcast,
    Unicast(NodeId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Broadcast => f.write_str("*"),
            Target::Unicast(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "*" {
            Ok(Target::Broadcast)
        } else {
            s.parse().map(Target::Unicast).map_err(|e| format!("target `{s}`: {e}"))
        }
    }
}

fn acceptance_token(a: Acceptance) -> &'static str {
    match a {
        Acceptance::Created => "created",
        Acceptance::Renewed => "renewed",
        Acceptance::Added => "added",
        Acceptance::Improved => "improved",
        Acceptance::Rejected(Rejection::StaleSequence) => "rejected-stale",
        Acceptance::Rejected(Rejection::HopNotLower) => "rejected-hop",
        Acceptance::Rejected(Rejection::DuplicateNextHop) => "rejected-duplicate",
        Acceptance::Rejected(Rejection::ListFull) => "rejected-full",
    }
}

fn parse_acceptance(s: &str) -> Result<Acceptance, String> {
    Ok(match s {
        "created" => Acceptance::Created,
        "renewed" => Acceptance::Renewed,
        "added" => Acceptance::Added,
        "improved" => Acceptance::Improved,
        "rejected-stale" => Acceptance::Rejected(Rejection::StaleSequence),
        "rejected-hop" => Acceptance::Rejected(Rejection::HopNotLower),
        "rejected-duplicate" => Acceptance::Rejected(Rejection::DuplicateNextHop),
        "rejected-full" => Acceptance::Rejected(Rejection::ListFull),
        other => return Err(format!("unknown route outcome `{other}`")),
    })
}

/// Optional advertised count, printed as `-` when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaybeHops(pub Option<u32>);

impl fmt::Display for MaybeHops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(h) => write!(f, "{h}"),
            None => f.write_str("-"),
        }
    }
}

impl FromStr for MaybeHops {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-" {
            Ok(MaybeHops(None))
        } else {
            s.parse().map(|h| MaybeHops(Some(h)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    /// `TX node target packet`
    Tx { node: NodeId, target: Target, packet: Packet },
    /// `RX node from tag`
    Rx { node: NodeId, from: NodeId, tag: String },
    /// `COLL node from tag`
    Collision { node: NodeId, from: NodeId, tag: String },
    /// `DEATH node`
    Death { node: NodeId },
    /// `HOP node packet_id`: a data packet reached `node`.
    Hop { node: NodeId, packet_id: u64 },
    /// `ROUTE node destination sequence advertised_before hop outcome`
    Route {
        node: NodeId,
        destination: NodeId,
        sequence: u32,
        advertised_before: MaybeHops,
        hop_count: u32,
        outcome: Acceptance,
    },
    /// `ELECT precinct head`
    Elect { precinct: PrecinctId, head: NodeId },
    /// `GEN node packet_id`
    Generate { node: NodeId, packet_id: u64 },
    /// `DELIVER packet_id`
    Deliver { packet_id: u64 },
    /// `DROP packet_id reason`
    Drop { packet_id: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.time)?;
        match &self.event {
            TraceEvent::Tx { node, target, packet } => write!(f, "TX {node} {target} {packet}"),
            TraceEvent::Rx { node, from, tag } => write!(f, "RX {node} {from} {tag}"),
            TraceEvent::Collision { node, from, tag } => write!(f, "COLL {node} {from} {tag}"),
            TraceEvent::Death { node } => write!(f, "DEATH {node}"),
            TraceEvent::Hop { node, packet_id } => write!(f, "HOP {node} {packet_id}"),
            TraceEvent::Route { node, destination, sequence, advertised_before, hop_count, outcome } => write!(
                f,
                "ROUTE {node} {destination} {sequence} {advertised_before} {hop_count} {}",
                acceptance_token(*outcome)
            ),
            TraceEvent::Elect { precinct, head } => write!(f, "ELECT {precinct} {head}"),
            TraceEvent::Generate { node, packet_id } => write!(f, "GEN {node} {packet_id}"),
            TraceEvent::Deliver { packet_id } => write!(f, "DELIVER {packet_id}"),
            TraceEvent::Drop { packet_id, reason } => write!(f, "DROP {packet_id} {reason}"),
        }
    }
}

fn word(s: &str, what: &'static str) -> Result<String, WireError> {
    if s.is_empty() || s.contains(char::is_whitespace) {
        Err(WireError::BadField { tag: "TRACE", field: what, message: "must be a single word".into() })
    } else {
        Ok(s.to_owned())
    }
}

impl FromStr for TraceRecord {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let time_raw = it.next().ok_or(WireError::Empty)?;
        let time: f64 = time_raw.parse().map_err(|e: std::num::ParseFloatError| WireError::BadField {
            tag: "TRACE",
            field: "time",
            message: e.to_string(),
        })?;
        let tag = it.next().ok_or(WireError::Missing { tag: "TRACE", field: "tag" })?;
        let event = match tag {
            "TX" => {
                let mut f = Fields::new("TX", it);
                let node = f.next("node")?;
                let target = f.next::<Target>("target")?;
                let ptag = f.raw("packet")?;
                let packet = Packet::parse_after_tag(ptag, f.into_rest())?;
                TraceEvent::Tx { node, target, packet }
            }
            "RX" | "COLL" => {
                let t: &'static str = if tag == "RX" { "RX" } else { "COLL" };
                let mut f = Fields::new(t, it);
                let node = f.next("node")?;
                let from = f.next("from")?;
                let ptag = word(f.raw("tag")?, "tag")?;
                f.finish()?;
                if t == "RX" {
                    TraceEvent::Rx { node, from, tag: ptag }
                } else {
                    TraceEvent::Collision { node, from, tag: ptag }
                }
            }
            "DEATH" => {
                let mut f = Fields::new("DEATH", it);
                let node = f.next("node")?;
                f.finish()?;
                TraceEvent::Death { node }
            }
            "HOP" => {
                let mut f = Fields::new("HOP", it);
                let ev = TraceEvent::Hop { node: f.next("node")?, packet_id: f.next("packet_id")? };
                f.finish()?;
                ev
            }
            "ROUTE" => {
                let mut f = Fields::new("ROUTE", it);
                let node = f.next("node")?;
                let destination = f.next("destination")?;
                let sequence = f.next("sequence")?;
                let advertised_before = f.next("advertised_before")?;
                let hop_count = f.next("hop_count")?;
                let raw = f.raw("outcome")?;
                let outcome = parse_acceptance(raw).map_err(|message| WireError::BadField {
                    tag: "ROUTE",
                    field: "outcome",
                    message,
                })?;
                f.finish()?;
                TraceEvent::Route { node, destination, sequence, advertised_before, hop_count, outcome }
            }
            "ELECT" => {
                let mut f = Fields::new("ELECT", it);
                let ev = TraceEvent::Elect { precinct: f.next::<PrecinctId>("precinct")?, head: f.next("head")? };
                f.finish()?;
                ev
            }
            "GEN" => {
                let mut f = Fields::new("GEN", it);
                let ev = TraceEvent::Generate { node: f.next("node")?, packet_id: f.next("packet_id")? };
                f.finish()?;
                ev
            }
            "DELIVER" => {
                let mut f = Fields::new("DELIVER", it);
                let ev = TraceEvent::Deliver { packet_id: f.next("packet_id")? };
                f.finish()?;
                ev
            }
            "DROP" => {
                let mut f = Fields::new("DROP", it);
                let packet_id = f.next("packet_id")?;
                let reason = word(f.raw("reason")?, "reason")?;
                f.finish()?;
                TraceEvent::Drop { packet_id, reason }
            }
            other => return Err(WireError::UnknownTag(other.to_owned())),
        };
        Ok(TraceRecord { time, event })
    }
}

/// Parses a whole log, reporting the first bad line with its 1-based number.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, (usize, WireError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.parse().map_err(|e| (i + 1, e)))
        .collect()
}
