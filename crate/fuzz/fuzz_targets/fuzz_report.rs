#![no_main]

use libfuzzer_sys::fuzz_target;
use mwsn_core::metrics::CsvRow;
use mwsn_core::RunReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = RunReport::from_json(text) {
        let _ = report.csv_row();
        let _ = RunReport::from_json(&report.to_json());
    }
    if let Ok(row) = text.parse::<CsvRow>() {
        let printed = row.to_string();
        let again: CsvRow = printed.parse().expect("printed row reparses");
        assert_eq!(again.to_string(), printed);
    }
});
