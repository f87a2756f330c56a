#![no_main]

use glauber_core::gibbs::{format_bc, parse_bc};
use glauber_core::lattice::{Rect, Region};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let region = Region::from_rect(Rect::new(1, 1, 4, 3).unwrap());
    if let Ok(bc) = parse_bc(s, &region) {
        assert_eq!(parse_bc(&format_bc(&bc, &region), &region).unwrap(), bc);
    }
});
