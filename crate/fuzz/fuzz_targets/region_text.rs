#![no_main]

use glauber_core::lattice::{format_region, parse_region};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = parse_region(s) {
            let again = parse_region(&format_region(&r)).expect("formatted region parses");
            assert_eq!(again, r);
        }
    }
});
