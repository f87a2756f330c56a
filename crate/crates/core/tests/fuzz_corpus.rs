//! Replays the checked-in fuzz seeds through the parsers. Every seed is a
//! valid input, so each one must parse and survive a format round trip.

use std::path::PathBuf;

use glauber_core::config::{format_config_dump, parse_config_dump, ConfigFile};
use glauber_core::gibbs::{format_bc, parse_bc, parse_bc_dist};
use glauber_core::lattice::{format_region, format_region_token, parse_region, parse_region_token, Rect, Region};
use glauber_core::schedules::{format_schedule, parse_schedule};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn region_text() {
    for (name, s) in seeds("region_text") {
        let r = parse_region(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_region(&format_region(&r)).unwrap(), r, "{name}");
    }
}

#[test]
fn region_token() {
    for (name, s) in seeds("region_token") {
        let r = parse_region_token(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_region_token(&format_region_token(&r)).unwrap(), r, "{name}");
    }
}

#[test]
fn bc_text() {
    let region = Region::from_rect(Rect::new(1, 1, 4, 3).unwrap());
    for (name, s) in seeds("bc_text") {
        let bc = parse_bc(&s, &region).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(parse_bc(&format_bc(&bc, &region), &region).unwrap() == bc, "{name}");
    }
}

#[test]
fn bc_dist() {
    let region = Region::from_rect(Rect::new(1, 1, 3, 3).unwrap());
    for (name, s) in seeds("bc_dist") {
        parse_bc_dist(&s, &region).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn schedule_text() {
    for (name, s) in seeds("schedule_text") {
        let sched = parse_schedule(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_schedule(&format_schedule(&sched)).unwrap(), sched, "{name}");
    }
}

#[test]
fn config_file() {
    for (name, s) in seeds("config_file") {
        let c = ConfigFile::parse(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.sections().count() > 0, "{name}");
    }
}

#[test]
fn config_dump() {
    for (name, s) in seeds("config_dump") {
        let c = parse_config_dump(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(parse_config_dump(&format_config_dump(&c)).unwrap() == c, "{name}");
    }
}

#[test]
fn garbage_is_rejected() {
    let region = Region::from_rect(Rect::new(1, 1, 3, 3).unwrap());
    for s in ["", "rect 1 2", "sites 1;2", "rect 0 0 100000 100000", "\u{0}"] {
        assert!(parse_region(s).is_err(), "{s:?}");
    }
    assert!(parse_region_token("rect:3,3,1,1").is_err());
    assert!(parse_bc("N:+", &region).is_err());
    assert!(parse_schedule("0 1 active=rect:1,1,2,2").is_err());
    assert!(parse_config_dump("region rect:1,1,2,2\n++\n++\n++\n").is_err());
}

mod arbitrary_text {
    use super::*;
    use proptest::prelude::*;

    fn noisy() -> impl Strategy<Value = String> {
        prop_oneof![
            any::<String>(),
            "[-+0-9a-z:,;|= .#\\[\\]\n]{0,60}",
            "(rect|sites|region|N:|pin=|active=|reset=)[-+0-9:,;| \n]{0,40}",
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn parsers_never_panic(s in noisy()) {
            let region = Region::from_rect(Rect::new(1, 1, 3, 3).unwrap());
            let _ = parse_region(&s);
            let _ = parse_region_token(&s);
            let _ = parse_bc(&s, &region);
            let _ = parse_bc_dist(&s, &region);
            let _ = parse_schedule(&s);
            let _ = ConfigFile::parse(&s);
            if let Ok(c) = parse_config_dump(&s) {
                prop_assert_eq!(parse_config_dump(&format_config_dump(&c)).unwrap(), c);
            }
        }
    }
}
