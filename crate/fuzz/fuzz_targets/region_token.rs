#![no_main]

use glauber_core::lattice::{format_region_token, parse_region_token};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = parse_region_token(s) {
            assert_eq!(parse_region_token(&format_region_token(&r)).unwrap(), r);
        }
    }
});
