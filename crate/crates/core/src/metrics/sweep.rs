//! Per-(protocol, speed) means and standard deviations over a seed sweep.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunReport;
use crate::engine::config::Protocol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: Protocol,
    pub speed_max: f64,
    pub runs: usize,
    /// Mean over the runs that generated traffic.
    pub mean_pdf: Option<f64>,
    pub std_pdf: Option<f64>,
    pub mean_lifetime: f64,
    pub std_lifetime: f64,
}

pub const SUMMARY_HEADER: &str = "protocol,speed_max,runs,mean_pdf,std_pdf,mean_lifetime,std_lifetime";

impl SummaryRow {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.protocol,
            self.speed_max,
            self.runs,
            opt(self.mean_pdf),
            opt(self.std_pdf),
            self.mean_lifetime,
            self.std_lifetime
        )
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

/// Groups reports by protocol and max speed, ordered by both.
pub fn summarize(reports: &[RunReport]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Protocol, u64), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        // Bit patterns of non-negative floats sort like the floats themselves.
        groups.entry((r.protocol, r.speed_max.to_bits())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((protocol, speed_bits), rs)| {
            let pdfs: Vec<f64> = rs.iter().filter_map(|r| r.pdf).collect();
            let lifetimes: Vec<f64> = rs.iter().map(|r| r.network_lifetime).collect();
            let pdf = mean_std(&pdfs);
            let (mean_lifetime, std_lifetime) = mean_std(&lifetimes).unwrap_or((0.0, 0.0));
            SummaryRow {
                protocol,
                speed_max: f64::from_bits(speed_bits),
                runs: rs.len(),
                mean_pdf: pdf.map(|p| p.0),
                std_pdf: pdf.map(|p| p.1),
                mean_lifetime,
                std_lifetime,
            }
        })
        .collect()
}
