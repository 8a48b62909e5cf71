#![no_main]

use insulation::io::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config(text) {
        // accepted configs survive a round trip unchanged
        let again = serde_json::to_string(&config).unwrap();
        assert_eq!(parse_config(&again).unwrap(), config);
    }
});
