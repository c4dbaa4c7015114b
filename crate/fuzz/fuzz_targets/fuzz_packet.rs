#![no_main]

use libfuzzer_sys::fuzz_target;
use mwsn_core::packet::Packet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(packet) = text.parse::<Packet>() {
        let printed = packet.to_string();
        let again: Packet = printed.parse().expect("printed packet reparses");
        assert_eq!(again.to_string(), printed);
    }
});
