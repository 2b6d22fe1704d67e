mod common;

use common::*;
use mfgsim_core::{Demand, TransferMode};
use mfgsim_factory::*;

const S: u64 = 1_000_000;
const HOUR: u64 = 3600 * S;

fn probe(at_us: u64, from: &str, to: &str) -> Probe {
    Probe {
        at_us,
        from: from.into(),
        to: to.into(),
    }
}

#[test]
fn one_agv_one_track() {
    let s = with_layout(
        vec![stop("A", 0), stop("B", 0)],
        vec![straight("T", "A", "B", q(60, 1), None)],
        &[("P", &["A", "B"])],
        vec![vehicle("V", "A", q(1, 1), 30 * S, 20 * S)],
    );
    let r = simulate_with_probes(&s, 1, HOUR, &[probe(0, "A", "B")]).unwrap();
    assert_eq!(r.transfers[0].delivered_us, Some(60 * S + 30 * S + 20 * S));
    let ins: Vec<_> = r.trace.records().iter().filter(|t| t.ev.starts_with("edge_")).collect();
    // out, then home again along the same track
    assert_eq!(ins.len(), 4);
    assert_eq!((ins[0].t_us, ins[1].t_us), (30 * S, 90 * S));
    assert_eq!(ins[3].t_us, 110 * S + 60 * S);
}

#[test]
fn speed_limit_and_curve_factor() {
    let mut curve = straight("C", "B", "C", q(20, 1), None);
    curve.kind = EdgeKind::Curve { factor: q(1, 2) };
    let s = with_layout(
        vec![stop("A", 0), stop("B", 0), stop("C", 5 * S)],
        vec![straight("T", "A", "B", q(48, 1), Some(q(4, 5))), curve],
        &[("P", &["A", "B", "C"])],
        vec![vehicle("V", "A", q(2, 1), 0, 0)],
    );
    let r = simulate_with_probes(&s, 1, HOUR, &[probe(0, "A", "C")]).unwrap();
    // 48 m at 0.8 m/s, 20 m at 1 m/s, then the 5 s dwell at C
    assert_eq!(r.transfers[0].delivered_us, Some(60 * S + 20 * S + 5 * S));
}

/// Two vehicles reach crossing X at t = 10 s. The first one dispatched was
/// scheduled first and crosses first; the other waits out the 4 s traversal.
#[test]
fn crossing_tie_follows_event_order() {
    let s = with_layout(
        vec![stop("A", 0), stop("B", 0), stop("C", 0), crossing("X", q(4, 1))],
        vec![
            straight("AX", "A", "X", q(10, 1), None),
            straight("BX", "B", "X", q(10, 1), None),
            straight("XC", "X", "C", q(10, 1), None),
        ],
        &[("PA", &["A", "X", "C"]), ("PB", &["B", "X", "C"])],
        vec![vehicle("V1", "A", q(1, 1), 0, 0), vehicle("V2", "B", q(1, 1), 0, 0)],
    );
    let r = simulate_with_probes(&s, 1, HOUR, &[probe(0, "A", "C"), probe(0, "B", "C")]).unwrap();
    assert_eq!(r.transfers[0].agv.as_deref(), Some("V1"));
    assert_eq!(r.transfers[0].delivered_us, Some(24 * S));
    assert_eq!(r.transfers[1].agv.as_deref(), Some("V2"));
    assert_eq!(r.transfers[1].delivered_us, Some(28 * S));
    let at_x: Vec<_> = r
        .trace
        .records()
        .iter()
        .filter(|t| t.res.as_deref() == Some("X"))
        .map(|t| (t.t_us / S, t.ev.as_str(), t.who.as_str()))
        .take(5)
        .collect();
    assert_eq!(
        at_x,
        [
            (10, "acquire", "V1"),
            (10, "wait", "V2"),
            (14, "release", "V1"),
            (14, "acquire", "V2"),
            (18, "release", "V2"),
        ]
    );
    assert_eq!(r.trace.max_concurrent_holders("X"), 1);
}

#[test]
fn pilot_conserves_parts_and_repeats() {
    let s = instantiate_scenario(&pilot(), "base", None).unwrap();
    let a = simulate(&s, 42, s.horizon_us).unwrap();
    let b = simulate(&s, 42, s.horizon_us).unwrap();
    assert!(a.conservation_holds());
    assert!(a.released > 0 && a.completed > 0);
    assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.to_csv().contains("\nconservation,run,ok,check\n"));
    for x in ["X1", "X2"] {
        assert!(a.trace.max_concurrent_holders(x) <= 1);
    }
}

#[test]
fn exponential_demand_depends_on_seed() {
    let s = instantiate_scenario(&pilot(), "poisson", None).unwrap();
    let a = simulate(&s, 1, s.horizon_us).unwrap();
    let b = simulate(&s, 2, s.horizon_us).unwrap();
    assert!(a.conservation_holds() && b.conservation_holds());
    assert_ne!(a.trace.hash(), b.trace.hash());
    assert_eq!(a.trace.hash(), simulate(&s, 1, s.horizon_us).unwrap().trace.hash());
}

#[test]
fn single_line_serial_cycles() {
    let mut s = instantiate_scenario(&pilot(), "base", None).unwrap();
    s.routes.clear();
    s.demand.clear();
    s.machining_lines.truncate(1);
    s.machining_lines[0].cycle_us = 10 * S;
    s.machining_lines[0].input_buffer = 100;
    s.demand.insert("ML1".into(), Demand::Batch { count: 100, at_us: 0 });
    let r = simulate(&s, 0, HOUR).unwrap();
    assert_eq!(r.completed, 100);
    let last = r.trace.records().iter().rev().find(|t| t.ev == "complete").unwrap();
    assert_eq!(last.t_us, 1000 * S);
}

#[test]
fn full_warehouse_is_a_deadlock() {
    let mut s = instantiate_scenario(&pilot(), "base", None).unwrap();
    s.demand.clear();
    for l in ["ML1", "ML2"] {
        s.demand.insert(l.into(), Demand::Batch { count: 2, at_us: 0 });
    }
    s.warehouse.capacity = 1;
    let err = simulate(&s, 0, 8 * HOUR).unwrap_err();
    let FactoryError::DeadlockDetected { waits, .. } = err else {
        panic!("{err}")
    };
    assert_eq!(waits.len(), 1);
    assert_eq!(waits[0].resource, "WH.slots");
}

#[test]
fn estimate_arithmetic() {
    let mut s = instantiate_scenario(&pilot(), "base", Some(TransferMode::Abstract)).unwrap();
    let Transfer::Abstract(a) = &mut s.transfer else {
        unreachable!()
    };
    a.agv.load_us = 25 * S;
    a.agv.unload_us = 25 * S;
    let (h, o, d) = (
        a.station_index("Home").unwrap(),
        a.station_index("ML1").unwrap(),
        a.station_index("ASM").unwrap(),
    );
    a.travel_us[h][o] = 0;
    a.travel_us[o][d] = 50 * S;
    a.travel_us[d][h] = 50 * S;
    let demand = [OdDemand {
        from: "ML1".into(),
        to: "ASM".into(),
        per_hour: q(60, 1),
    }];
    let e = estimate_transfer_capacity(&s, &demand).unwrap();
    assert_eq!(e.pairs[0].busy_us, 150 * S);
    assert_eq!(e.offered_load, q(5, 2));
    assert_eq!(e.required_agvs, 3);
    let none = estimate_transfer_capacity(&s, &[]).unwrap();
    assert_eq!(none.required_agvs, 0);
    assert_eq!(none.utilization_at_required, q(0, 1));
}

#[test]
fn pilot_estimate() {
    let s = instantiate_scenario(&pilot(), "base", Some(TransferMode::Abstract)).unwrap();
    let demand = od_demand(&s);
    assert!(demand.iter().all(|d| d.per_hour == q(6, 1)));
    let e = estimate_transfer_capacity(&s, &demand).unwrap();
    // ML1->ASM: 74 + 30 + 138 + 30 + 128; ML2->ASM: 128 + 30 + 84 + 30 + 128; ASM->WH: 128 + 30 + 60 + 30 + 188
    let busy: Vec<_> = e.pairs.iter().map(|p| (p.from.as_str(), p.busy_us / S)).collect();
    assert_eq!(busy, [("ASM", 436), ("ML1", 400), ("ML2", 400)]);
    assert_eq!(e.offered_load, q(6 * (400 + 400 + 436), 3600));
    assert_eq!(e.required_agvs, 3);
    assert!(e.utilization_at_required <= q(7, 10));
    let detailed = instantiate_scenario(&pilot(), "base", None).unwrap();
    assert!(matches!(
        estimate_transfer_capacity(&detailed, &demand),
        Err(FactoryError::ModeMismatch { .. })
    ));
}

#[test]
fn comparisons() {
    let ws = pilot();
    let d = instantiate_scenario(&ws, "base", None).unwrap();
    let r = simulate(&d, 42, d.horizon_us).unwrap();
    let same = compare_metrics(&r.metrics(), &r.metrics(), DEFAULT_GAP_THRESHOLD).unwrap();
    assert!(same.rows.iter().all(|g| g.gap == 0.0));
    let mut other = r.metrics();
    other.model = "elsewhere".into();
    assert!(matches!(
        compare_metrics(&other, &r.metrics(), DEFAULT_GAP_THRESHOLD),
        Err(FactoryError::ModelMismatch { .. })
    ));
    let a = instantiate_scenario(&ws, "base", Some(TransferMode::Abstract)).unwrap();
    let e = estimate_transfer_capacity(&a, &od_demand(&a)).unwrap();
    let c = compare_modes(&e, &r, DEFAULT_GAP_THRESHOLD).unwrap();
    assert!(!c.any_flagged(), "{}", c.to_table());
    assert_eq!(c.to_csv().lines().count(), 4);
    assert!(c.to_table().starts_with("metric"));
}
