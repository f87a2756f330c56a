#![no_main]

use glauber_core::schedules::{format_schedule, parse_schedule};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(sched) = parse_schedule(s) {
            assert_eq!(parse_schedule(&format_schedule(&sched)).unwrap(), sched);
        }
    }
});
