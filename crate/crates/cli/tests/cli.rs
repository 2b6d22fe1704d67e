use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mfgsim_cli::{parse_duration, run};
use proptest::prelude::*;

const PILOT_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/pilot");

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn mfgsim(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("mfgsim").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

/// A scratch copy of the pilot workspace.
fn pilot_copy() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    for e in fs::read_dir(PILOT_DIR).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), dir.path().join(e.file_name())).unwrap();
    }
    let main = dir.path().join("pilot.mim");
    (dir, main)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_is_silent_on_the_pilot() {
    let (_d, pilot) = pilot_copy();
    let r = mfgsim(&["check", s(&pilot)]);
    assert_eq!((r.code, r.out.as_str(), r.err.as_str()), (0, "", ""));
}

#[test]
fn check_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.mim");
    fs::write(&f, "sortset a {\n  sort X\n").unwrap();
    let r = mfgsim(&["check", s(&f)]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("bad.mim:"), "{}", r.err);
    assert!(r.out.is_empty());
}

#[test]
fn verify_flags_a_deleted_speed() {
    let (d, pilot) = pilot_copy();
    let detailed = d.path().join("detailed.mim");
    let text = fs::read_to_string(&detailed).unwrap();
    let cut = text.replacen("    attr speed : Speed = 1.0 m/s;\n", "", 1);
    assert_ne!(text, cut);
    fs::write(&detailed, cut).unwrap();
    let r = mfgsim(&[
        "verify",
        s(&pilot),
        "--ontology",
        "mfg_profile",
        "--model",
        "pilot_detailed",
    ]);
    assert_eq!(r.code, 1);
    assert!(
        r.err
            .lines()
            .any(|l| l.starts_with("pilot_detailed: ") && l.contains("AGV1") && l.contains("speed")),
        "{}",
        r.err
    );
    assert!(!r.out.contains("pilot_detailed"));
}

#[test]
fn simulate_writes_a_repeatable_report() {
    let (d, pilot) = pilot_copy();
    let run_once = |tag: &str| {
        let (csv, trace) = (
            d.path().join(format!("{tag}.csv")),
            d.path().join(format!("{tag}.jsonl")),
        );
        let r = mfgsim(&[
            "simulate",
            s(&pilot),
            "--scenario",
            "base",
            "--mode",
            "detailed",
            "--seed",
            "42",
            "--horizon",
            "8h",
            "--report",
            s(&csv),
            "--trace",
            s(&trace),
        ]);
        assert_eq!((r.code, r.out.as_str(), r.err.as_str()), (0, "", ""));
        (fs::read(csv).unwrap(), fs::read(trace).unwrap())
    };
    let (a, b) = (run_once("a"), run_once("b"));
    assert_eq!(a, b);
    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.starts_with("metric,entity,value,unit\n"));
    assert!(csv.lines().any(|l| l == "conservation,run,ok,check"));
    assert!(csv.lines().all(|l| l.split(',').count() == 4));
}

#[test]
fn seed_ranges_fan_out_to_files() {
    let (d, pilot) = pilot_copy();
    let report = d.path().join("r.csv");
    let r = mfgsim(&[
        "simulate",
        s(&pilot),
        "--scenario",
        "poisson",
        "--seeds",
        "1..3",
        "--horizon",
        "2h",
        "--report",
        s(&report),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let files: Vec<String> = (1..=3)
        .map(|n| fs::read_to_string(d.path().join(format!("r.seed{n}.csv"))).unwrap())
        .collect();
    assert_ne!(files[0], files[1]);
    // Same bytes as the single-seed run.
    let single = mfgsim(&[
        "simulate",
        s(&pilot),
        "--scenario",
        "poisson",
        "--seed",
        "2",
        "--horizon",
        "2h",
    ]);
    assert_eq!(single.out, files[1]);
    let r = mfgsim(&["simulate", s(&pilot), "--scenario", "poisson", "--seeds", "1..3"]);
    assert_eq!(r.code, 2);
}

#[test]
fn usage_errors_exit_2_with_a_hint() {
    let r = mfgsim(&["simulate", "x.mim", "--scenario", "base", "--bogus"]);
    assert_eq!(r.code, 2);
    let lines: Vec<&str> = r.err.lines().collect();
    assert_eq!(lines.len(), 2, "{}", r.err);
    assert!(lines[0].starts_with("error:") && lines[1].starts_with("Usage: mfgsim simulate"));
    assert_eq!(
        mfgsim(&["simulate", "x.mim", "--scenario", "b", "--horizon", "90"]).code,
        2
    );
    assert_eq!(
        mfgsim(&["simulate", "x.mim", "--scenario", "b", "--horizon", "1.5h"]).code,
        2
    );
    assert_eq!(mfgsim(&["frobnicate"]).code, 2);
    assert_eq!(mfgsim(&[]).code, 2);
    let help = mfgsim(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("simulate") && help.err.is_empty());
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let (d, pilot) = pilot_copy();
    let csv = d.path().join("missing/dir/r.csv");
    let r = mfgsim(&[
        "simulate",
        s(&pilot),
        "--scenario",
        "base",
        "--horizon",
        "1h",
        "--report",
        s(&csv),
    ]);
    assert_eq!(r.code, 3, "{}", r.err);
}

#[test]
fn unknown_names_are_diagnostics() {
    let (_d, pilot) = pilot_copy();
    for args in [
        vec!["simulate", s(&pilot), "--scenario", "nope"],
        vec!["verify", s(&pilot), "--ontology", "nope"],
        vec!["abstract", s(&pilot), "--map", "nope"],
        vec!["estimate", s(&pilot), "--scenario", "nope"],
    ] {
        let r = mfgsim(&args);
        assert_eq!(r.code, 1, "{args:?}");
        assert!(r.err.starts_with("error: ") && r.err.contains("nope"), "{}", r.err);
    }
}

#[test]
fn abstract_refine_and_view_outputs_parse() {
    let (d, pilot) = pilot_copy();
    let (a, r, v) = (d.path().join("a.mim"), d.path().join("r.mim"), d.path().join("v.mim"));
    assert_eq!(
        mfgsim(&["abstract", s(&pilot), "--map", "coarse_layout", "--out", s(&a)]).code,
        0
    );
    let text = fs::read_to_string(&a).unwrap();
    assert!(!text.contains(": Length ="), "lengths should fold into route metrics");
    let refine = mfgsim(&[
        "refine",
        s(&a),
        "--map",
        "timed_route",
        "--expansion",
        "agv_motion",
        "--out",
        s(&r),
    ]);
    assert_eq!(refine.code, 0, "{}", refine.err);
    assert!(refine.err.starts_with("note: "));
    assert!(fs::read_to_string(&r)
        .unwrap()
        .contains("attr curve_speed : SpeedLimit"));
    assert_eq!(
        mfgsim(&["view", s(&pilot), "--sortset", "cost_view", "--out", s(&v)]).code,
        0
    );
    for f in [&a, &r, &v] {
        let c = mfgsim(&["check", s(f)]);
        assert_eq!(c.code, 0, "{}: {}", f.display(), c.err);
    }
}

#[test]
fn lattice_formats() {
    let (_d, pilot) = pilot_copy();
    let dot = mfgsim(&["lattice", s(&pilot), "--model", "pilot_abstract", "--out", "dot"]);
    assert_eq!(dot.code, 0);
    assert!(dot.out.trim_start().starts_with("digraph"));
    let text = mfgsim(&["lattice", s(&pilot)]);
    assert!(text.out.contains("# pilot_abstract") && text.out.contains("# pilot_detailed"));
    assert_eq!(mfgsim(&["lattice", s(&pilot), "--out", "svg"]).code, 2);
}

#[test]
fn coordinate_needs_model_names_for_multi_model_files() {
    let (_d, pilot) = pilot_copy();
    let a = format!("{}:pilot_abstract", s(&pilot));
    let det = format!("{}:pilot_detailed", s(&pilot));
    let r = mfgsim(&["coordinate", &a, &det, "--mapping", "transfer_modes"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(!r.err.contains("error:"));
    let r = mfgsim(&["coordinate", s(&pilot), &det, "--mapping", "transfer_modes"]);
    assert_eq!(r.code, 2);
}

#[test]
fn estimate_and_compare() {
    let (d, pilot) = pilot_copy();
    let e = mfgsim(&["estimate", s(&pilot), "--scenario", "base"]);
    assert_eq!(e.code, 0);
    assert!(e.out.lines().any(|l| l == "required_agvs 3"), "{}", e.out);
    assert!(e.out.contains("offered_load 103/50"));

    let csv = d.path().join("c.csv");
    let c = mfgsim(&[
        "compare",
        s(&pilot),
        "--scenario",
        "base",
        "--seed",
        "42",
        "--out",
        s(&csv),
    ]);
    assert_eq!((c.code, c.err.as_str()), (0, ""));
    assert!(c.out.starts_with("metric"));
    assert!(fs::read_to_string(&csv)
        .unwrap()
        .starts_with("metric,abstract,detailed,gap,flagged\n"));

    let tight = mfgsim(&[
        "compare",
        s(&pilot),
        "--scenario",
        "base",
        "--seed",
        "42",
        "--threshold",
        "0.001",
    ]);
    assert_eq!(tight.code, 1);
    assert!(tight.err.contains("throughput_per_hour: gap"));
}

#[test]
fn lib_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("lib");
    let payload = dir.path().join("p.txt");
    fs::write(&payload, "payload").unwrap();
    let bin = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_mfgsim"))
            .args(args)
            .env("MFGSIM_LIB_ROOT", &root)
            .output()
            .unwrap()
    };
    let add = bin(&["lib", "add", "--kind", "conceptualization", "--name", "c1", s(&payload)]);
    assert!(add.status.success());
    assert!(String::from_utf8_lossy(&add.stdout).starts_with("conceptualization c1 v1 "));
    let get = bin(&["lib", "get", "--kind", "conceptualization", "--name", "c1"]);
    assert_eq!(get.stdout, b"payload");
    let list = bin(&["lib", "list"]);
    assert_eq!(String::from_utf8_lossy(&list.stdout).lines().count(), 1);
    let bad = bin(&["lib", "list", "--kind", "widget"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = bin(&["lib", "get", "--kind", "model", "--name", "c1"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn simulate_can_record_results() {
    let (d, pilot) = pilot_copy();
    let root = d.path().join("lib");
    let r = mfgsim(&[
        "simulate",
        s(&pilot),
        "--scenario",
        "base",
        "--horizon",
        "1h",
        "--record",
        "--root",
        s(&root),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let lib = mfgsim(&[
        "lib",
        "get",
        "--root",
        s(&root),
        "--kind",
        "result",
        "--name",
        "pilot.base.detailed.seed42",
    ]);
    assert_eq!(lib.out, r.out);
}

proptest! {
    #[test]
    fn durations_scale_exactly(n in 0u64..1_000_000, unit in 0usize..5) {
        let (suffix, per) = [("us", 1u64), ("ms", 1_000), ("s", 1_000_000), ("m", 60_000_000), ("h", 3_600_000_000)][unit];
        prop_assert_eq!(parse_duration(&format!("{n}{suffix}")), Ok(n * per));
    }
}
