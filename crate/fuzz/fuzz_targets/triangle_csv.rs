#![no_main]

use insulation::io::parse_triangle_values;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_triangle_values(text);
    }
});
