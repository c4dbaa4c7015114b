#![no_main]

use libfuzzer_sys::fuzz_target;
use mwsn_core::trace::{parse_trace, TraceRecord};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = text.parse::<TraceRecord>() {
        let printed = record.to_string();
        let again: TraceRecord = printed.parse().expect("printed record reparses");
        assert_eq!(again.to_string(), printed);
    }
    let _ = parse_trace(text);
});
