//! Delivery fraction, network lifetime, run reports and sweep summaries.

pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::config::{Protocol, ScenarioConfig};
use crate::NodeId;

pub use sweep::{summarize, SummaryRow};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("accounting bug: {delivered} delivered but only {generated} generated")]
    Inconsistent { delivered: u64, generated: u64 },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV row: {0}")]
    Csv(String),
}

/// Delivered over generated; `None` when nothing was generated.
pub fn compute_pdf(delivered: u64, generated: u64) -> Result<Option<f64>, MetricsError> {
    if delivered > generated {
        return Err(MetricsError::Inconsistent { delivered, generated });
    }
    if generated == 0 {
        return Ok(None);
    }
    Ok(Some(delivered as f64 / generated as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifetime {
    pub seconds: f64,
    /// No node died, so the value is the run length.
    pub censored: bool,
}

/// Time of the first death, or the run length if nobody died.
pub fn compute_network_lifetime(death_times: &[Option<f64>], sim_duration: f64) -> Lifetime {
    death_times
        .iter()
        .flatten()
        .copied()
        .min_by(f64::total_cmp)
        .map(|t| Lifetime { seconds: t.min(sim_duration), censored: false })
        .unwrap_or(Lifetime { seconds: sim_duration, censored: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node: NodeId,
    pub initial: f64,
    pub surplus_final: f64,
    pub consumed_tx: f64,
    pub consumed_rx: f64,
    pub consumed_sense: f64,
    pub consumed_idle: f64,
    pub death_time: Option<f64>,
}

impl NodeRecord {
    pub fn consumed(&self) -> f64 {
        self.consumed_tx + self.consumed_rx + self.consumed_sense + self.consumed_idle
    }

    pub fn conservation_error(&self) -> f64 {
        (self.initial - self.surplus_final - self.consumed()).abs() / self.initial
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub protocol: Protocol,
    pub speed_max: f64,
    /// `null` when no packet was generated.
    pub pdf: Option<f64>,
    pub network_lifetime: f64,
    pub lifetime_censored: bool,
    pub end_time: f64,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub packets_in_flight: u64,
    pub rreq_floods: u64,
    pub collisions: u64,
    pub per_node: Vec<NodeRecord>,
    pub config_echo: ScenarioConfig,
}

pub const CSV_HEADER: &str = "seed,protocol,speed_max,pdf,network_lifetime,generated,delivered";

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn csv_row(&self) -> String {
        CsvRow::from(self).to_string()
    }
}

/// The CSV projection of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub protocol: Protocol,
    pub speed_max: f64,
    pub pdf: Option<f64>,
    pub network_lifetime: f64,
    pub generated: u64,
    pub delivered: u64,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        CsvRow {
            seed: r.seed,
            protocol: r.protocol,
            speed_max: r.speed_max,
            pdf: r.pdf,
            network_lifetime: r.network_lifetime,
            generated: r.packets_generated,
            delivered: r.packets_delivered,
        }
    }
}

impl std::fmt::Display for CsvRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pdf = self.pdf.map(|p| p.to_string()).unwrap_or_default();
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.seed, self.protocol, self.speed_max, pdf, self.network_lifetime, self.generated, self.delivered
        )
    }
}

impl std::str::FromStr for CsvRow {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cells: Vec<&str> = s.trim_end().split(',').collect();
        if cells.len() != 7 {
            return Err(MetricsError::Csv(format!("expected 7 cells, found {}", cells.len())));
        }
        fn num<T: std::str::FromStr>(cell: &str, name: &str) -> Result<T, MetricsError>
        where
            T::Err: std::fmt::Display,
        {
            cell.parse().map_err(|e: T::Err| MetricsError::Csv(format!("{name}: {e}")))
        }
        Ok(CsvRow {
            seed: num(cells[0], "seed")?,
            protocol: num(cells[1], "protocol")?,
            speed_max: num(cells[2], "speed_max")?,
            pdf: if cells[3].is_empty() { None } else { Some(num(cells[3], "pdf")?) },
            network_lifetime: num(cells[4], "network_lifetime")?,
            generated: num(cells[5], "generated")?,
            delivered: num(cells[6], "delivered")?,
        })
    }
}

/// Header plus one row per report, in the given order.
pub fn write_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_examples() {
        assert_eq!(compute_pdf(50, 100).unwrap(), Some(0.5));
        assert_eq!(compute_pdf(100, 100).unwrap(), Some(1.0));
        assert_eq!(compute_pdf(0, 0).unwrap(), None);
        assert!(matches!(compute_pdf(3, 2), Err(MetricsError::Inconsistent { .. })));
    }

    #[test]
    fn lifetime_examples() {
        assert_eq!(compute_network_lifetime(&[Some(430.0), Some(210.0), None], 500.0).seconds, 210.0);
        let none = compute_network_lifetime(&[None, None], 500.0);
        assert_eq!((none.seconds, none.censored), (500.0, true));
        let zero = compute_network_lifetime(&[Some(0.0)], 500.0);
        assert_eq!((zero.seconds, zero.censored), (0.0, false));
    }

    #[test]
    fn csv_row_round_trip_with_empty_pdf() {
        let row = CsvRow {
            seed: 3,
            protocol: Protocol::Aodv,
            speed_max: 10.0,
            pdf: None,
            network_lifetime: 141.25,
            generated: 0,
            delivered: 0,
        };
        let text = row.to_string();
        assert_eq!(text, "3,aodv,10,,141.25,0,0");
        assert_eq!(text.parse::<CsvRow>().unwrap(), row);
        assert!("1,2".parse::<CsvRow>().is_err());
    }
}
