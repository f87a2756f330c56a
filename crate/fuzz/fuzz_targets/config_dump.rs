#![no_main]

use glauber_core::config::{format_config_dump, parse_config_dump};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = parse_config_dump(s) {
            assert_eq!(parse_config_dump(&format_config_dump(&c)).unwrap(), c);
        }
    }
});
