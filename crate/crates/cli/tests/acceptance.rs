//! One line per acceptance criterion. Runs without the test harness so the
//! lines always reach the terminal; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mfgsim_core::abstraction::coordinate_modes;
use mfgsim_core::testgen;
use mfgsim_core::{parse_file, Demand, TransferMode, Workspace};
use mfgsim_engine::Trace;
use mfgsim_factory::catalog::violation_catalog;
use mfgsim_factory::*;
use mfgsim_library::{Kind, Library, FAILPOINT_ENV};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

const S: u64 = 1_000_000;
const HOUR: u64 = 3600 * S;
const PILOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/pilot/pilot.mim");

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn pilot() -> Workspace {
    parse_file(PILOT).expect("pilot parses").workspace
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs `cases` generated values through `check` with a fixed RNG.
fn cases<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Result<(), String>) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&strategy, |v| check(v).map_err(TestCaseError::fail))
        .map_err(|e| e.to_string())
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn sort_laws() -> Check {
    let t = Instant::now();
    cases(1000, testgen::hierarchy(), |h| testgen::check_sort_laws(&h))?;
    Ok(format!(
        "1000 hierarchies in {:.2?}",
        within(Duration::from_secs(5), t)?
    ))
}

fn abstraction() -> Check {
    let t = Instant::now();
    cases(
        500,
        (testgen::abstraction_case(), proptest::num::u64::ANY),
        |(c, seed)| testgen::check_abstraction(&c, seed),
    )?;
    Ok(format!(
        "500 entity/map pairs in {:.2?}",
        within(Duration::from_secs(5), t)?
    ))
}

fn views() -> Check {
    cases(200, testgen::view_case(), |(sorts, model)| {
        testgen::check_view(&sorts, &model)
    })?;
    Ok("200 models".into())
}

fn lattice() -> Check {
    let t = Instant::now();
    cases(100, testgen::incidence(), |inc| {
        ensure(inc.len() <= 8 && inc.iter().flatten().all(|a| *a < 8), || {
            "case exceeds 8x8".into()
        })?;
        testgen::check_lattice(&inc)
    })?;
    Ok(format!("100 contexts in {:.2?}", within(Duration::from_secs(10), t)?))
}

fn round_trip() -> Check {
    cases(500, testgen::workspace(), |ws| testgen::check_roundtrip(&ws))?;
    cases(500, testgen::mutated_text(), |text| testgen::check_spans(&text))?;
    Ok("500 workspaces, 500 damaged texts".into())
}

fn catalog() -> Check {
    let ws = pilot();
    let profile = ws.ontology("mfg_profile").ok_or("no mfg_profile")?;
    for mode in [TransferMode::Abstract, TransferMode::Detailed] {
        let mut cfg = ws.scenarios["base"].clone();
        cfg.mode = mode;
        let m = ws.model(cfg.bound_model().unwrap()).unwrap();
        let found = audit(m, profile, &ws.sorts, &cfg);
        ensure(found.is_empty(), || {
            format!("false positives in {mode} pilot: {found:?}")
        })?;
    }
    let cases = violation_catalog(&ws, "base");
    ensure(cases.len() == 10, || format!("{} catalog cases", cases.len()))?;
    for c in &cases {
        let found = audit(&c.model, profile, &ws.sorts, &c.config);
        ensure(found.first() == Some(&c.expected), || {
            format!("{}: expected {:?}, found {:?}", c.name, c.expected, found.first())
        })?;
    }
    Ok("10/10 injected defects, 0 false positives".into())
}

fn kinematics() -> Check {
    let ws = pilot();
    // 100 parts through a 10 s machine.
    let mut s = instantiate_scenario(&ws, "base", None).map_err(|e| e.to_string())?;
    s.routes.clear();
    s.demand.clear();
    s.machining_lines.truncate(1);
    s.machining_lines[0].cycle_us = 10 * S;
    s.machining_lines[0].input_buffer = 100;
    s.demand.insert("ML1".into(), Demand::Batch { count: 100, at_us: 0 });
    let r = simulate(&s, 0, HOUR).map_err(|e| e.to_string())?;
    let last = r
        .trace
        .records()
        .iter()
        .filter(|t| t.ev == "complete")
        .map(|t| t.t_us)
        .max();
    ensure(r.completed == 100 && last == Some(100 * 10 * S), || {
        format!("{} parts, last at {last:?}", r.completed)
    })?;

    // One AGV on a 60 m track at 1 m/s.
    let (length_m, speed_mps, load, unload) = (60u64, 1u64, 30 * S, 20 * S);
    let mut s = instantiate_scenario(&ws, "base", None).map_err(|e| e.to_string())?;
    let stop = |name: &str| Node {
        name: name.into(),
        kind: NodeKind::Stop { dwell_us: 0 },
        serves: vec![],
    };
    s.transfer = Transfer::Detailed(DetailedTransfer {
        nodes: [("A".to_string(), stop("A")), ("B".to_string(), stop("B"))].into(),
        edges: vec![Edge {
            name: "T".into(),
            a: "A".into(),
            b: "B".into(),
            length: Q::from_integer(length_m as i128),
            kind: EdgeKind::Straight { limit: None },
        }],
        paths: BTreeMap::from([("P".to_string(), vec!["A".to_string(), "B".to_string()])]),
        home: HomeStation {
            name: "A".into(),
            policy: "wait-at-home".into(),
        },
        agvs: vec![Vehicle {
            name: "V".into(),
            speed: Q::from_integer(speed_mps as i128),
            home: "A".into(),
            load_us: load,
            unload_us: unload,
        }],
    });
    s.demand.clear();
    s.routes.clear();
    let probe = Probe {
        at_us: 0,
        from: "A".into(),
        to: "B".into(),
    };
    let r = simulate_with_probes(&s, 1, HOUR, &[probe]).map_err(|e| e.to_string())?;
    let want = length_m / speed_mps * S + load + unload;
    let got = r.transfers.first().and_then(|t| t.delivered_us);
    ensure(got == Some(want), || {
        format!("60 m track: delivered at {got:?}, want {want}")
    })?;
    Ok("100 x 10 s = 1000 s; 60 m track = 60 s + load + unload".into())
}

/// Most AGVs ever inside `res` at once, replayed from acquire/release events.
fn peak_holders(trace: &Trace, res: &str) -> usize {
    let (mut now, mut peak) = (0usize, 0usize);
    for r in trace.records().iter().filter(|r| r.res.as_deref() == Some(res)) {
        match r.ev.as_str() {
            "acquire" => {
                now += 1;
                peak = peak.max(now);
            }
            "release" => now = now.saturating_sub(1),
            _ => {}
        }
    }
    peak
}

fn conservation() -> Check {
    let ws = pilot();
    let s = instantiate_scenario(&ws, "base", Some(TransferMode::Detailed)).map_err(|e| e.to_string())?;
    let Transfer::Detailed(d) = &s.transfer else {
        return Err("base scenario is not detailed".into());
    };
    let crossings: Vec<String> = d.crossings().map(|n| n.name.clone()).collect();
    ensure(!crossings.is_empty(), || "pilot layout has no crossings".into())?;
    let mut slowest = Duration::ZERO;
    for seed in [1, 42, 7] {
        let t = Instant::now();
        let a = simulate(&s, seed, 8 * HOUR).map_err(|e| e.to_string())?;
        slowest = slowest.max(within(Duration::from_secs(10), t)?);
        let b = simulate(&s, seed, 8 * HOUR).map_err(|e| e.to_string())?;
        ensure(a.released == a.completed + a.wip, || {
            format!("seed {seed}: {} != {} + {}", a.released, a.completed, a.wip)
        })?;
        ensure(a.trace.to_jsonl() == b.trace.to_jsonl(), || {
            format!("seed {seed}: traces differ")
        })?;
        for x in &crossings {
            let peak = peak_holders(&a.trace, x);
            ensure(peak <= 1, || format!("seed {seed}: {peak} AGVs on {x}"))?;
        }
    }
    Ok(format!("seeds 1, 42, 7 over 8 h; slowest run {slowest:.2?}"))
}

fn coordination() -> Check {
    let ws = pilot();
    let (a, d) = (ws.model("pilot_abstract").unwrap(), ws.model("pilot_detailed").unwrap());
    let mapping = &ws.mode_mappings["transfer_modes"];
    let report = coordinate_modes(a, d, mapping, &ws.sorts);
    ensure(report.passes(), || report.to_text())?;
    for entity in mapping.entries.keys() {
        let mut cut = mapping.clone();
        cut.entries.remove(entity);
        let r = coordinate_modes(a, d, &cut, &ws.sorts);
        let want = format!("abstract entity uncovered: {entity}");
        ensure(r.errors == [want.clone()], || {
            format!("without {entity}: {:?}", r.errors)
        })?;
    }
    Ok(format!(
        "mapping passes; each of {} entries is necessary",
        mapping.entries.len()
    ))
}

fn estimate_vs_simulation() -> Check {
    let ws = pilot();
    let abs = instantiate_scenario(&ws, "base", Some(TransferMode::Abstract)).map_err(|e| e.to_string())?;
    let det = instantiate_scenario(&ws, "base", Some(TransferMode::Detailed)).map_err(|e| e.to_string())?;
    let est = estimate_transfer_capacity(&abs, &od_demand(&abs)).map_err(|e| e.to_string())?;
    ensure(est.utilization_at_required <= Q::new(7, 10), || {
        format!("offered utilization {} is congested", est.utilization_at_required)
    })?;
    let fleet = est.required_agvs as usize;
    let run = simulate(&det.with_fleet(fleet), 42, det.horizon_us).map_err(|e| e.to_string())?;
    let predicted = {
        let q = est.throughput_with(est.required_agvs);
        *q.numer() as f64 / *q.denom() as f64
    };
    let simulated = run.delivered_per_hour();
    let gap = (predicted - simulated).abs() / simulated;
    ensure(gap <= 0.10, || format!("throughput gap {:.2}%", gap * 100.0))?;
    let (delivered, requested) = (run.delivered(), run.transfers.len() as u64);
    ensure(delivered * 100 >= requested * 95, || {
        format!("delivered {delivered}/{requested}")
    })?;
    let by_fleet: Vec<u64> = (1..=5)
        .map(|n| simulate(&det.with_fleet(n), 42, det.horizon_us).map(|r| r.delivered()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(by_fleet.windows(2).all(|w| w[0] <= w[1]), || {
        format!("not monotone: {by_fleet:?}")
    })?;
    Ok(format!(
        "fleet {fleet}: gap {:.2}%, delivered {delivered}/{requested}; fleet 1..5 delivers {by_fleet:?}",
        gap * 100.0
    ))
}

fn mfgsim(root: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mfgsim"))
        .arg("lib")
        .args(args)
        .arg("--root")
        .arg(root)
        .env_remove(FAILPOINT_ENV)
        .output()
        .expect("mfgsim runs")
}

fn library_integrity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("lib");
    let file = |name: &str, body: &[u8]| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let payloads: [&[u8]; 3] = [b"model one", b"model two", b"model three"];
    for (i, p) in payloads.iter().enumerate() {
        let f = file("payload", p);
        let out = mfgsim(&root, &["add", "--kind", "model", "--name", "pilot", &f]);
        let line = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success() && line.contains(&format!(" v{} ", i + 1)), || {
            format!("add #{}: {line}", i + 1)
        })?;
    }
    let lib = Library::open(&root).map_err(|e| e.to_string())?;
    for (i, p) in payloads.iter().enumerate() {
        let v = (i + 1).to_string();
        let out = mfgsim(&root, &["get", "--kind", "model", "--name", "pilot", "--version", &v]);
        ensure(out.stdout == *p, || format!("version {v} does not round-trip"))?;
    }
    let versions: Vec<u32> = lib
        .list(Some(Kind::Model))
        .map_err(|e| e.to_string())?
        .iter()
        .map(|m| m.version)
        .collect();
    ensure(versions == [1, 2, 3], || format!("versions {versions:?}"))?;

    let again = file("again", payloads[2]);
    let out = mfgsim(&root, &["add", "--kind", "model", "--name", "pilot", &again]);
    ensure(String::from_utf8_lossy(&out.stdout).contains(" v3 "), || {
        "identical payload got a new version".into()
    })?;

    std::fs::write(root.join("model/pilot/2.payload"), b"tampered").map_err(|e| e.to_string())?;
    let out = mfgsim(&root, &["get", "--kind", "model", "--name", "pilot", "--version", "2"]);
    let msg = String::from_utf8_lossy(&out.stderr);
    ensure(
        out.status.code() == Some(1) && msg.contains("does not match manifest hash"),
        || format!("tampered payload: {:?} {msg}", out.status.code()),
    )?;

    for point in ["after-payload", "before-manifest-rename"] {
        let root = dir.path().join(point);
        let first = file("first", b"first");
        mfgsim(&root, &["add", "--kind", "model", "--name", "m", &first]);
        let lib = Library::open(&root).map_err(|e| e.to_string())?;
        let before = lib.list(None).map_err(|e| e.to_string())?;
        let second = file("second", b"second");
        let killed = Command::new(env!("CARGO_BIN_EXE_mfgsim"))
            .args(["lib", "add", "--kind", "model", "--name", "m", &second, "--root"])
            .arg(&root)
            .env(FAILPOINT_ENV, point)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(killed.status.code().is_none_or(|c| c > 3), || {
            format!("{point}: writer was not killed")
        })?;
        ensure(lib.list(None).map_err(|e| e.to_string())? == before, || {
            format!("{point}: manifest changed")
        })?;
        let latest = lib.load(Kind::Model, "m", None).map_err(|e| e.to_string())?;
        ensure(latest.version == 1 && latest.payload == b"first", || {
            format!("{point}: wrong latest")
        })?;
        let third = file("third", b"third");
        let out = mfgsim(&root, &["add", "--kind", "model", "--name", "m", &third]);
        ensure(String::from_utf8_lossy(&out.stdout).contains(" v2 "), || {
            format!("{point}: next version not 2")
        })?;
    }
    Ok("identity, gapless v1..3, dedup, tamper detected, 2 kill points survived".into())
}

fn guarded(f: impl FnOnce() -> Check + UnwindSafe) -> Check {
    catch_unwind(f).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("sort-order laws", sort_laws),
        ("abstraction soundness", abstraction),
        ("view idempotence", views),
        ("lattice oracle equivalence", lattice),
        ("DSL round trip", round_trip),
        ("verification catalog", catalog),
        ("deterministic kinematics", kinematics),
        ("conservation and determinism", conservation),
        ("abstract/detailed coordination", coordination),
        ("estimate vs simulation", estimate_vs_simulation),
        ("library integrity", library_integrity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let (mark, detail) = match guarded(f) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{mark} {:>2} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
