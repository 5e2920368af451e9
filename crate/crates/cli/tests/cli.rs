use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reccoord::planner::{DaySchedule, DayStart};
use reccoord::scenario::load_scenario;

fn reccoord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reccoord")).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, extra: &[&str]) -> Output {
    run_seeded(out, "5", extra)
}

fn run_seeded(out: &Path, seed: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--generate",
        "members=3,days=2,steps=24",
        "--seed",
        seed,
        "--modes",
        "solofix,ecflex,ecflexit",
        "--key",
        "equal",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    reccoord(&args)
}

const FILES: [&str; 4] = ["summary.csv", "benefits.csv", "schedules.csv", "trace.jsonl"];

#[test]
fn run_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--trace"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("metric,SoloFix,ECFlex,ECFlexIt\n"), "{stdout}");
    for f in FILES {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let trace = fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["mode"], "ECFlexIt");
    }
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--generate", "members=2", "--modes", "ecflexit", "--key", "lottery", "--out", d],
        &["run", "--generate", "members=2", "--modes", "ecflexit", "--out", d],
        &["run", "--generate", "members=2", "--modes", "solofix,teleport", "--out", d],
        &["run", "--generate", "mebers=2", "--modes", "solofix", "--out", d],
        &["run", "--generate", "members=2", "--dt", "0.7", "--modes", "solofix", "--out", d],
    ];
    for args in cases {
        let out = reccoord(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let missing = reccoord(&["run", "--scenario", "/nonexistent.json", "--modes", "solofix", "--out", d]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), &["--trace"]).status.success());
    assert!(run_in(b.path(), &["--trace"]).status.success());
    for f in FILES {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resumes_from_a_partial_checkpoint() {
    let full = tempfile::tempdir().unwrap();
    assert!(run_in(full.path(), &[]).status.success());

    // Rewind every checkpoint to the end of day 0 and run again in place.
    let scenario_json = reccoord(&["generate", "--generate", "members=3,days=2,steps=24", "--seed", "5"]).stdout;
    let s = load_scenario(&scenario_json).unwrap();
    let resumed = tempfile::tempdir().unwrap();
    assert!(run_in(resumed.path(), &[]).status.success());
    let checkpoints = resumed.path().join("checkpoints");
    let mut rewound = 0;
    for entry in fs::read_dir(&checkpoints).unwrap() {
        let path = entry.unwrap().path();
        let mut c: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        let first: DaySchedule = serde_json::from_value(c["days"][0].clone()).unwrap();
        c["next_start"] = serde_json::to_value(first.end_state(&DayStart::initial(&s))).unwrap();
        c["days"].as_array_mut().unwrap().truncate(1);
        c["traces"].as_array_mut().unwrap().retain(|t| t["day"] == 0);
        fs::write(&path, serde_json::to_vec(&c).unwrap()).unwrap();
        rewound += 1;
    }
    assert_eq!(rewound, 3);
    for f in FILES {
        fs::remove_file(resumed.path().join(f)).unwrap();
    }
    assert!(run_in(resumed.path(), &[]).status.success());
    for f in FILES {
        assert_eq!(fs::read(full.path().join(f)).unwrap(), fs::read(resumed.path().join(f)).unwrap(), "{f}");
    }

    // A different seed must not reuse the stored days.
    let other = run_seeded(resumed.path(), "6", &[]);
    assert!(other.status.success());
    assert_ne!(fs::read(full.path().join("summary.csv")).unwrap(), other.stdout);
}

#[test]
fn generate_writes_a_loadable_scenario() {
    let out = reccoord(&["generate", "--generate", "members=4,ev=1", "--days", "1", "--dt", "1", "--compact"]);
    assert!(out.status.success());
    assert_eq!(out.stdout.iter().filter(|&&b| b == b'\n').count(), 1);
    let s = load_scenario(&out.stdout).unwrap();
    assert_eq!(s.members.len(), 4);
    assert_eq!(s.horizon.steps_per_day, 24);
    assert!(s.members.iter().all(|m| m.ev.is_some()));
}
