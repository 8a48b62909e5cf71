#![no_main]

use insulation::io::{parse_config_with, parse_override};
use libfuzzer_sys::fuzz_target;

const BASE: &str = r#"{"domain": {"vertices": [[0,0],[1,0],[1,1],[0,1]],
  "labels": ["neumann","insulated","neumann","dirichlet"]},
  "field": "facet_normal", "distribution": {"constant": 1.0},
  "data": {"dirichlet": {"3": 1.0}}}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let overrides: Vec<String> = text.lines().map(str::to_owned).collect();
    for o in &overrides {
        let _ = parse_override(o);
    }
    let _ = parse_config_with(BASE, &overrides);
});
