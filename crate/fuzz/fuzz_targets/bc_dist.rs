#![no_main]

use glauber_core::gibbs::parse_bc_dist;
use glauber_core::lattice::{Rect, Region};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let region = Region::from_rect(Rect::new(1, 1, 3, 3).unwrap());
        let _ = parse_bc_dist(s, &region);
    }
});
