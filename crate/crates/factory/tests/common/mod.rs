#![allow(dead_code)]

use std::collections::BTreeMap;

use mfgsim_core::{parse_file, Workspace};
use mfgsim_factory::*;

pub fn pilot() -> Workspace {
    parse_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/pilot/pilot.mim"))
        .expect("pilot parses")
        .workspace
}

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn stop(name: &str, dwell_us: u64) -> Node {
    Node {
        name: name.into(),
        kind: NodeKind::Stop { dwell_us },
        serves: vec![],
    }
}

pub fn crossing(name: &str, length: Q) -> Node {
    Node {
        name: name.into(),
        kind: NodeKind::Crossing { length },
        serves: vec![],
    }
}

pub fn straight(name: &str, a: &str, b: &str, length: Q, limit: Option<Q>) -> Edge {
    Edge {
        name: name.into(),
        a: a.into(),
        b: b.into(),
        length,
        kind: EdgeKind::Straight { limit },
    }
}

pub fn vehicle(name: &str, home: &str, speed: Q, load_us: u64, unload_us: u64) -> Vehicle {
    Vehicle {
        name: name.into(),
        speed,
        home: home.into(),
        load_us,
        unload_us,
    }
}

/// The detailed pilot plant with its transfer system replaced and no demand,
/// for driving the AGVs with probes alone.
pub fn with_layout(
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    paths: &[(&str, &[&str])],
    agvs: Vec<Vehicle>,
) -> ExecutableScenario {
    let ws = pilot();
    let mut s = instantiate_scenario(&ws, "base", None).unwrap();
    let home = agvs[0].home.clone();
    s.transfer = Transfer::Detailed(DetailedTransfer {
        nodes: nodes.into_iter().map(|n| (n.name.clone(), n)).collect(),
        edges,
        paths: paths
            .iter()
            .map(|(n, seq)| (n.to_string(), seq.iter().map(|s| s.to_string()).collect()))
            .collect(),
        home: HomeStation {
            name: home,
            policy: "wait-at-home".into(),
        },
        agvs,
    });
    if let Transfer::Detailed(d) = &s.transfer {
        d.validate().unwrap();
    }
    s.demand = BTreeMap::new();
    s.routes = BTreeMap::new();
    s
}
