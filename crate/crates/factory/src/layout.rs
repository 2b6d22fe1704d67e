//! Detailed transfer geometry: stop stations, crossings, tracks, curves and
//! the explicit route data the AGVs drive along.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::plant::{HomeStation, Q};
use crate::FactoryError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Stop {
        dwell_us: u64,
    },
    /// Capacity-1 resource; `length` is driven at vehicle speed.
    Crossing {
        length: Q,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Components this stop station serves.
    pub serves: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Straight { limit: Option<Q> },
    Curve { factor: Q },
}

/// Undirected track segment between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub name: String,
    pub a: String,
    pub b: String,
    pub length: Q,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn joins(&self, x: &str, y: &str) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }

    /// Effective speed of a vehicle with top speed `speed` on this edge.
    pub fn speed_for(&self, speed: Q) -> Q {
        match &self.kind {
            EdgeKind::Straight { limit: Some(l) } => speed.min(*l),
            EdgeKind::Straight { limit: None } => speed,
            EdgeKind::Curve { factor } => speed * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vehicle {
    pub name: String,
    pub speed: Q,
    pub home: String,
    pub load_us: u64,
    pub unload_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetailedTransfer {
    pub nodes: BTreeMap<String, Node>,
    pub edges: Vec<Edge>,
    /// Route data by name: node sequences, each a connected edge walk.
    pub paths: BTreeMap<String, Vec<String>>,
    pub home: HomeStation,
    pub agvs: Vec<Vehicle>,
}

/// Smallest whole number of microseconds not shorter than `length / speed`.
pub fn traversal_us(length: Q, speed: Q) -> u64 {
    let t = length * Q::from_integer(1_000_000) / speed;
    t.ceil().to_integer() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Step {
    Edge { edge: String, us: u64 },
    Crossing { node: String, us: u64 },
    Dwell { node: String, us: u64 },
}

impl Step {
    pub fn us(&self) -> u64 {
        match self {
            Step::Edge { us, .. } | Step::Crossing { us, .. } | Step::Dwell { us, .. } => *us,
        }
    }
}

/// A drive from one node to another along one route-data path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan {
    pub path: Option<String>,
    pub reversed: bool,
    pub steps: Vec<Step>,
}

impl Plan {
    /// Uncontended driving time.
    pub fn duration_us(&self) -> u64 {
        self.steps.iter().map(Step::us).sum()
    }
}

impl DetailedTransfer {
    pub fn validate(&self) -> Result<(), FactoryError> {
        let bad = |entity: &str, attr: &str, reason: String| FactoryError::InvalidParameter {
            entity: entity.to_string(),
            attr: attr.to_string(),
            reason,
        };
        for e in &self.edges {
            if e.a == e.b {
                return Err(bad(&e.name, "to", "a track must join two different nodes".into()));
            }
        }
        for (name, seq) in &self.paths {
            if seq.len() < 2 {
                return Err(bad(name, "nodes", "a path needs at least two nodes".into()));
            }
            for end in [&seq[0], &seq[seq.len() - 1]] {
                if matches!(self.nodes[end].kind, NodeKind::Crossing { .. }) {
                    return Err(bad(
                        name,
                        "nodes",
                        format!("path may not start or end on crossing `{end}`"),
                    ));
                }
            }
            for w in seq.windows(2) {
                let n = self.edges.iter().filter(|e| e.joins(&w[0], &w[1])).count();
                if n != 1 {
                    return Err(bad(
                        name,
                        "nodes",
                        format!(
                            "`{}` and `{}` are joined by {n} tracks, expected exactly one",
                            w[0], w[1]
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The stop station serving `component`, or the node of that name.
    pub fn location_of(&self, component: &str) -> Option<&String> {
        self.nodes
            .values()
            .find(|n| n.serves.iter().any(|s| s == component))
            .map(|n| &n.name)
            .or_else(|| self.nodes.get(component).map(|n| &n.name))
    }

    pub fn crossings(&self) -> impl Iterator<Item = &Node> {
        self.nodes
            .values()
            .filter(|n| matches!(n.kind, NodeKind::Crossing { .. }))
    }

    fn edge_between(&self, x: &str, y: &str) -> &Edge {
        self.edges.iter().find(|e| e.joins(x, y)).expect("validated walk")
    }

    /// Drive plan for `v` from `from` to `to`. A path declared from `to` to
    /// `from` is driven backwards when no forward path exists.
    pub fn plan(&self, v: &Vehicle, from: &str, to: &str) -> Option<Plan> {
        if from == to {
            return Some(Plan {
                path: None,
                reversed: false,
                steps: Vec::new(),
            });
        }
        let ends = |seq: &[String], a: &str, b: &str| {
            seq.first().is_some_and(|f| f == a) && seq.last().is_some_and(|l| l == b)
        };
        let (name, seq, reversed) = self
            .paths
            .iter()
            .find(|(_, seq)| ends(seq, from, to))
            .map(|(n, s)| (n, s.clone(), false))
            .or_else(|| {
                self.paths.iter().find(|(_, seq)| ends(seq, to, from)).map(|(n, s)| {
                    let mut s = s.clone();
                    s.reverse();
                    (n, s, true)
                })
            })?;
        let mut steps = Vec::new();
        for (i, w) in seq.windows(2).enumerate() {
            if i > 0 {
                let node = &self.nodes[&w[0]];
                match &node.kind {
                    NodeKind::Crossing { length } => steps.push(Step::Crossing {
                        node: node.name.clone(),
                        us: traversal_us(*length, v.speed),
                    }),
                    NodeKind::Stop { dwell_us } if *dwell_us > 0 => steps.push(Step::Dwell {
                        node: node.name.clone(),
                        us: *dwell_us,
                    }),
                    NodeKind::Stop { .. } => {}
                }
            }
            let e = self.edge_between(&w[0], &w[1]);
            steps.push(Step::Edge {
                edge: e.name.clone(),
                us: traversal_us(e.length, e.speed_for(v.speed)),
            });
        }
        if let NodeKind::Stop { dwell_us } = self.nodes[to].kind {
            if dwell_us > 0 {
                steps.push(Step::Dwell {
                    node: to.to_string(),
                    us: dwell_us,
                });
            }
        }
        Some(Plan {
            path: Some(name.clone()),
            reversed,
            steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    fn stop(name: &str) -> (String, Node) {
        (
            name.into(),
            Node {
                name: name.into(),
                kind: NodeKind::Stop { dwell_us: 0 },
                serves: vec![],
            },
        )
    }

    fn layout() -> DetailedTransfer {
        let mut nodes: BTreeMap<_, _> = [stop("A"), stop("B")].into_iter().collect();
        nodes.insert(
            "X".into(),
            Node {
                name: "X".into(),
                kind: NodeKind::Crossing { length: q(4, 1) },
                serves: vec![],
            },
        );
        DetailedTransfer {
            nodes,
            edges: vec![
                Edge {
                    name: "T".into(),
                    a: "A".into(),
                    b: "X".into(),
                    length: q(30, 1),
                    kind: EdgeKind::Straight { limit: Some(q(1, 2)) },
                },
                Edge {
                    name: "C".into(),
                    a: "X".into(),
                    b: "B".into(),
                    length: q(20, 1),
                    kind: EdgeKind::Curve { factor: q(1, 2) },
                },
            ],
            paths: [("P".to_string(), vec!["A".to_string(), "X".into(), "B".into()])].into(),
            home: HomeStation {
                name: "A".into(),
                policy: "wait-at-home".into(),
            },
            agvs: vec![Vehicle {
                name: "V".into(),
                speed: q(2, 1),
                home: "A".into(),
                load_us: 0,
                unload_us: 0,
            }],
        }
    }

    #[test]
    fn limits_factors_and_crossings() {
        let d = layout();
        d.validate().unwrap();
        let p = d.plan(&d.agvs[0], "A", "B").unwrap();
        // 30 m at min(2, 0.5) = 60 s; crossing 4 m at 2 = 2 s; curve 20 m at 1 = 20 s
        assert_eq!(p.duration_us(), 82_000_000);
        assert!(!p.reversed);
        assert!(matches!(&p.steps[1], Step::Crossing { node, .. } if node == "X"));
        let back = d.plan(&d.agvs[0], "B", "A").unwrap();
        assert!(back.reversed);
        assert_eq!(back.duration_us(), 82_000_000);
        assert!(d.plan(&d.agvs[0], "A", "X").is_none());
    }

    #[test]
    fn ceil_to_microseconds() {
        assert_eq!(traversal_us(q(1, 1), q(3, 1)), 333_334);
        assert_eq!(traversal_us(q(60, 1), q(1, 1)), 60_000_000);
    }

    #[test]
    fn broken_walk_is_rejected() {
        let mut d = layout();
        d.paths.insert("Q".into(), vec!["A".into(), "B".into()]);
        assert!(matches!(d.validate(), Err(FactoryError::InvalidParameter { attr, .. }) if attr == "nodes"));
    }
}
