use std::io::Write;
use std::process::{Command, Output, Stdio};

fn glauber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glauber"))
        .args(args)
        .env_remove("GLAUBER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("glauber-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn single_site_gap() {
    let o = glauber(&["exact", "--L", "1", "--bc", "+"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "gap=1.0"), "{}", stdout(&o));
}

#[test]
fn verify_passes() {
    let o = glauber(&["verify", "--beta", "0.4", "--seed", "7"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 10);
    assert!(!text.contains("FAIL"));
}

#[test]
fn exit_codes() {
    assert_eq!(glauber(&["exact", "--nope"]).status.code(), Some(1));
    assert_eq!(glauber(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(glauber(&["--help"]).status.code(), Some(0));
    assert_eq!(glauber(&["simulate", "--help"]).status.code(), Some(0));
    // 25 sites is beyond the exact engine
    assert_eq!(glauber(&["exact", "--L", "5"]).status.code(), Some(2));
    assert_eq!(glauber(&["exact", "--L", "2", "--beta", "-1"]).status.code(), Some(1));
    assert_eq!(glauber(&["exact", "--L", "2", "--bc", "N:+ E:?"]).status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--L", "8", "--eps", "0.25", "--beta", "0.6", "--bc", "N:- E:- S:+ W:-", "--t", "100", "--seed", "1"];
    let a = glauber(&args);
    let b = glauber(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# seed=1\n") && text.contains("# beta=0.6\n") && text.contains("# L=8\n"));
    assert!(text.contains("t,magnetization,magnetization_se,plus_fraction\n"));
}

#[test]
fn results_do_not_depend_on_jobs() {
    let a = glauber(&["couple", "--L", "5", "--replicas", "12", "--seed", "4", "--jobs", "1"]);
    let b = glauber(&["couple", "--L", "5", "--replicas", "12", "--seed", "4", "--jobs", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_overrides() {
    let cfg = tmp("run.cfg");
    std::fs::write(&cfg, "seed = 11\nbeta = 0.2\n[exact]\nL = 2\nbeta = 0.7\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = stdout(&glauber(&["exact", "--config", c]));
    assert!(o.contains("# beta=0.7\n") && o.contains("# width=2\n"), "{o}");
    let o = stdout(&glauber(&["exact", "--config", c, "--beta", "0.3"]));
    assert!(o.contains("# beta=0.3\n"));
    let o = stdout(&glauber(&["couple", "--config", c, "--L", "3", "--replicas", "1"]));
    assert!(o.contains("# seed=11\n") && o.contains("# beta=0.2\n"), "{o}");
}

#[test]
fn seed_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_glauber"))
        .args(["couple", "--L", "3", "--replicas", "1"])
        .env("GLAUBER_SEED", "42")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# seed=42\n"));
    let o = Command::new(env!("CARGO_BIN_EXE_glauber"))
        .args(["couple", "--L", "3", "--replicas", "1", "--seed", "5"])
        .env("GLAUBER_SEED", "42")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# seed=5\n"));
}

#[test]
fn output_file() {
    let out = tmp("surface.csv");
    let o = glauber(&["surface-tension", "--L", "6", "--beta", "10", "--phi", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().last().unwrap();
    let est: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((1.8..=2.0).contains(&est));
}

#[test]
fn contour_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_glauber"))
        .args(["contour", "--bc", "+"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"region rect:1,1,3,3\n+++\n+-+\n+++\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("count_closed,count_open,lengths,max_height\n1,0,4,2.5\n"), "{}", stdout(&o));
}

#[test]
fn dump_roundtrips_through_contour() {
    let dump = tmp("final.txt");
    let d = dump.to_str().unwrap();
    let o = glauber(&["simulate", "--L", "5", "--bc", "N:- E:- S:+ W:-", "--t", "5", "--dump", d]);
    assert!(o.status.success());
    let o = glauber(&["contour", "--input", d, "--bc", "N:- E:- S:+ W:-"]);
    assert!(o.status.success());
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert_eq!(last.split(',').nth(1), Some("1"));
}

#[test]
fn censor_exact_fixtures() {
    let o = stdout(&glauber(&["censor", "--exact", "--beta", "0.4"]));
    let rows: Vec<&str> = o.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let c: Vec<&str> = r.split(',').collect();
        assert!(c[2].parse::<f64>().unwrap() <= c[3].parse::<f64>().unwrap());
        assert_eq!(c[4], "true");
    }
}

#[test]
fn other_subcommands_run() {
    for args in [
        &["scaling", "--sizes", "3,4", "--families", "all-plus,free", "--replicas", "5", "--t-cap", "100"][..],
        &["autocorr", "--L", "2", "--replicas", "4", "--window", "20", "--exact"],
        &["kbox", "--L", "6", "--ells", "1,6", "--replicas", "10", "--t", "2"],
        &["couple", "--mode", "profile", "--L", "4", "--replicas", "10", "--t", "4"],
        &["couple", "--mode", "a", "--L", "3", "--replicas", "10", "--t", "1"],
        &["censor", "--schedule", "stacked", "--L", "9", "--replicas", "4", "--t", "3"],
        &["exact", "--L", "2", "--t-taps", "0.5,1,2"],
    ] {
        let o = glauber(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
