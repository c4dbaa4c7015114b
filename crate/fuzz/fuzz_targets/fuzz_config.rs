#![no_main]

use libfuzzer_sys::fuzz_target;
use mwsn_core::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::parse(text) else {
        return;
    };
    // Printing is canonical: a printed config reparses to the same text.
    let printed = cfg.to_config_string();
    let again = ScenarioConfig::parse(&printed).expect("printed config reparses");
    assert_eq!(again.to_config_string(), printed);
    let _ = cfg.validate();
});
