//! Replays the checked-in fuzz corpus through the fuzz targets' properties,
//! so the seeds stay meaningful on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use mwsn_core::metrics::CsvRow;
use mwsn_core::packet::Packet;
use mwsn_core::trace::TraceRecord;
use mwsn_core::{RunReport, ScenarioConfig};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds() {
    let mut parsed = 0;
    for (path, text) in seeds("fuzz_config") {
        if let Ok(cfg) = ScenarioConfig::parse(&text) {
            let printed = cfg.to_config_string();
            let again = ScenarioConfig::parse(&printed).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(again.to_config_string(), printed);
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn trace_line_seeds() {
    for (path, text) in seeds("fuzz_trace_line") {
        let record: TraceRecord = text.trim_end().parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again: TraceRecord = record.to_string().parse().unwrap();
        assert_eq!(again.to_string(), record.to_string());
    }
}

#[test]
fn packet_seeds() {
    for (path, text) in seeds("fuzz_packet") {
        let packet: Packet = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again: Packet = packet.to_string().parse().unwrap();
        assert_eq!(again.to_string(), packet.to_string());
    }
}

#[test]
fn report_seeds() {
    for (path, text) in seeds("fuzz_report") {
        if path.extension().is_some_and(|e| e == "json") {
            let report = RunReport::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(RunReport::from_json(&report.to_json()).unwrap(), report);
        } else {
            let row: CsvRow = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(row.to_string().parse::<CsvRow>().unwrap(), row);
        }
    }
}
