#![no_main]

use glauber_core::config::ConfigFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = ConfigFile::parse(s) {
            for section in c.sections() {
                let _ = c.merged(section);
            }
        }
    }
});
