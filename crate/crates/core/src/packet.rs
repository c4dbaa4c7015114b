//! Every frame payload exchanged by nodes, with a one-line text encoding.
//!
//! The encoding is the packet tag followed by its fields separated by single
//! spaces, in the order listed on each variant. Floats use Rust's shortest
//! round-trip formatting, precinct ids are `row,col` and id lists are
//! comma-separated. `Packet::from_str(p.to_string()) == p` for every packet.

use std::fmt;
use std::str::{FromStr, SplitWhitespace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{HelloPacket, PrecinctId};
use crate::routing::messages::{DaPacket, DataPacket, Readiness, RerrMessage, RrepMessage, RreqMessage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Packet {
    /// `HELLO sender surplus p_fusion vid`
    Hello(HelloPacket),
    /// `DA sender vid generated_at id`
    Da(DaPacket),
    /// `RREQ source source_precinct sequence_no broadcast_id hop_count destination max_surplus`
    Rreq(RreqMessage),
    /// `RREP source destination destination_precinct sequence_number hop_count readiness max_surplus lifetime`
    Rrep(RrepMessage),
    /// `RERR source destination unreachable_via`
    Rerr(RerrMessage),
    /// `DATA source destination bytes generated_at id originals`
    Data(DataPacket),
}

impl Packet {
    pub fn tag(&self) -> &'static str {
        match self {
            Packet::Hello(_) => "HELLO",
            Packet::Da(_) => "DA",
            Packet::Rreq(_) => "RREQ",
            Packet::Rrep(_) => "RREP",
            Packet::Rerr(_) => "RERR",
            Packet::Data(_) => "DATA",
        }
    }

    pub fn is_control(&self) -> bool {
        !matches!(self, Packet::Data(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("empty packet")]
    Empty,
    #[error("unknown packet tag `{0}`")]
    UnknownTag(String),
    #[error("{tag}: missing field `{field}`")]
    Missing { tag: &'static str, field: &'static str },
    #[error("{tag}: field `{field}`: {message}")]
    BadField { tag: &'static str, field: &'static str, message: String },
    #[error("{tag}: unexpected trailing field `{extra}`")]
    Trailing { tag: &'static str, extra: String },
}

fn join_ids(ids: &[u64]) -> String {
    ids.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Packet::Hello(h) => write!(f, "HELLO {} {} {} {}", h.sender, h.surplus, h.p_fusion, h.vid),
            Packet::Da(d) => write!(f, "DA {} {} {} {}", d.sender, d.vid, d.generated_at, d.id),
            Packet::Rreq(r) => write!(
                f,
                "RREQ {} {} {} {} {} {} {}",
                r.source, r.source_precinct, r.sequence_no, r.broadcast_id, r.hop_count, r.destination, r.max_surplus_energy
            ),
            Packet::Rrep(r) => write!(
                f,
                "RREP {} {} {} {} {} {} {} {}",
                r.source,
                r.destination,
                r.destination_precinct,
                r.sequence_number,
                r.hop_count,
                r.readiness,
                r.max_surplus_energy,
                r.lifetime
            ),
            Packet::Rerr(r) => write!(f, "RERR {} {} {}", r.source, r.destination, r.unreachable_via),
            Packet::Data(d) => write!(
                f,
                "DATA {} {} {} {} {} {}",
                d.source,
                d.destination,
                d.bytes,
                d.generated_at,
                d.id,
                join_ids(&d.originals)
            ),
        }
    }
}

pub(crate) struct Fields<'a> {
    tag: &'static str,
    it: SplitWhitespace<'a>,
}

impl<'a> Fields<'a> {
    pub(crate) fn new(tag: &'static str, it: SplitWhitespace<'a>) -> Self {
        Fields { tag, it }
    }

    pub(crate) fn raw(&mut self, field: &'static str) -> Result<&'a str, WireError> {
        self.it.next().ok_or(WireError::Missing { tag: self.tag, field })
    }

    pub(crate) fn next<T>(&mut self, field: &'static str) -> Result<T, WireError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.raw(field)?;
        raw.parse().map_err(|e: T::Err| WireError::BadField { tag: self.tag, field, message: e.to_string() })
    }

    pub(crate) fn id_list(&mut self, field: &'static str) -> Result<Vec<u64>, WireError> {
        let raw = self.raw(field)?;
        raw.split(',')
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|e| WireError::BadField { tag: self.tag, field, message: format!("`{s}`: {e}") })
            })
            .collect()
    }

    pub(crate) fn into_rest(self) -> SplitWhitespace<'a> {
        self.it
    }

    pub(crate) fn finish(mut self) -> Result<(), WireError> {
        match self.it.next() {
            Some(extra) => Err(WireError::Trailing { tag: self.tag, extra: extra.to_owned() }),
            None => Ok(()),
        }
    }
}

impl Packet {
    /// Parses the fields following an already-consumed tag.
    pub(crate) fn parse_after_tag(tag: &str, it: SplitWhitespace<'_>) -> Result<Packet, WireError> {
        let packet = match tag {
            "HELLO" => {
                let mut f = Fields::new("HELLO", it);
                let p = HelloPacket {
                    sender: f.next("sender")?,
                    surplus: f.next("surplus")?,
                    p_fusion: f.next("p_fusion")?,
                    vid: f.next("vid")?,
                };
                f.finish()?;
                Packet::Hello(p)
            }
            "DA" => {
                let mut f = Fields::new("DA", it);
                let p = DaPacket {
                    sender: f.next("sender")?,
                    vid: f.next("vid")?,
                    generated_at: f.next("generated_at")?,
                    id: f.next("id")?,
                };
                f.finish()?;
                Packet::Da(p)
            }
            "RREQ" => {
                let mut f = Fields::new("RREQ", it);
                let p = RreqMessage {
                    source: f.next("source")?,
                    source_precinct: f.next::<PrecinctId>("source_precinct")?,
                    sequence_no: f.next("sequence_no")?,
                    broadcast_id: f.next("broadcast_id")?,
                    hop_count: f.next("hop_count")?,
                    destination: f.next("destination")?,
                    max_surplus_energy: f.next("max_surplus")?,
                };
                f.finish()?;
                Packet::Rreq(p)
            }
            "RREP" => {
                let mut f = Fields::new("RREP", it);
                let p = RrepMessage {
                    source: f.next("source")?,
                    destination: f.next("destination")?,
                    destination_precinct: f.next::<PrecinctId>("destination_precinct")?,
                    sequence_number: f.next("sequence_number")?,
                    hop_count: f.next("hop_count")?,
                    readiness: f.next::<Readiness>("readiness")?,
                    max_surplus_energy: f.next("max_surplus")?,
                    lifetime: f.next("lifetime")?,
                };
                f.finish()?;
                Packet::Rrep(p)
            }
            "RERR" => {
                let mut f = Fields::new("RERR", it);
                let p = RerrMessage {
                    source: f.next("source")?,
                    destination: f.next("destination")?,
                    unreachable_via: f.next("unreachable_via")?,
                };
                f.finish()?;
                Packet::Rerr(p)
            }
            "DATA" => {
                let mut f = Fields::new("DATA", it);
                let p = DataPacket {
                    source: f.next("source")?,
                    destination: f.next("destination")?,
                    bytes: f.next("bytes")?,
                    generated_at: f.next("generated_at")?,
                    id: f.next("id")?,
                    originals: f.id_list("originals")?,
                };
                f.finish()?;
                Packet::Data(p)
            }
            other => return Err(WireError::UnknownTag(other.to_owned())),
        };
        Ok(packet)
    }
}

impl FromStr for Packet {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let tag = it.next().ok_or(WireError::Empty)?;
        Packet::parse_after_tag(tag, it)
    }
}
