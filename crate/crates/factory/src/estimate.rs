//! Fleet sizing on the abstract transfer model, and comparison of the
//! estimate against a detailed run.
//!
//! A transfer from `o` to `d` keeps one AGV busy for
//!
//! ```text
//! busy(o, d) = travel(home, o) + load + travel(o, d) + unload + travel(d, home)
//! ```
//!
//! because idle vehicles wait at home. With `r(o, d)` transfers per hour the
//! offered load is `W = Σ r(o, d) · busy(o, d) / 3600 s` vehicles, and the
//! fleet needed is `ceil(W)`.

use std::fmt::Write as _;

use mfgsim_core::{Demand, TransferMode};
use serde::Serialize;

use crate::plant::{AbstractTransfer, ExecutableScenario, Transfer, Q};
use crate::report::SimReport;
use crate::FactoryError;

const US_PER_HOUR: i128 = 3_600_000_000;

/// Transfers per hour between two components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OdDemand {
    pub from: String,
    pub to: String,
    pub per_hour: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairEstimate {
    pub from: String,
    pub to: String,
    pub per_hour: Q,
    pub busy_us: u64,
    /// Request to delivery with an idle vehicle waiting at home.
    pub latency_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferEstimate {
    pub model: String,
    /// Fleet size declared in the abstract model.
    pub fleet: u64,
    pub pairs: Vec<PairEstimate>,
    /// Mean number of vehicles kept busy.
    pub offered_load: Q,
    pub required_agvs: u64,
    pub utilization_at_required: Q,
}

fn rate(d: &Demand) -> Q {
    match *d {
        Demand::Every { interval_us, .. } => Q::new(US_PER_HOUR, interval_us as i128),
        Demand::Exponential { mean_us, .. } => Q::new(US_PER_HOUR, mean_us as i128),
        Demand::Batch { .. } => Q::from_integer(0),
    }
}

fn capacity(cycle_us: u64) -> Q {
    Q::new(US_PER_HOUR, cycle_us as i128)
}

/// Transfer demand implied by the release schedule and routing table. Line
/// output is capped by line capacity; assembly output by its slowest input.
pub fn od_demand(s: &ExecutableScenario) -> Vec<OdDemand> {
    let zero = Q::from_integer(0);
    let line_out = |name: &str| -> Q {
        s.line(name).map_or(zero, |l| {
            let r = s.demand.get(name).map_or(zero, rate);
            r.min(capacity(l.cycle_us))
        })
    };
    let asm = &s.assembly_line;
    let asm_out = if asm.inputs.is_empty() {
        zero
    } else {
        asm.inputs
            .iter()
            .map(|(src, need)| {
                let fed = if s.routes.get(src) == Some(&asm.name) {
                    line_out(src)
                } else {
                    zero
                };
                fed / Q::from_integer(*need as i128)
            })
            .fold(capacity(asm.assembly_us), Q::min)
    };
    s.routes
        .iter()
        .map(|(from, to)| OdDemand {
            from: from.clone(),
            to: to.clone(),
            per_hour: if *from == asm.name { asm_out } else { line_out(from) },
        })
        .collect()
}

fn abstract_of(s: &ExecutableScenario) -> Result<&AbstractTransfer, FactoryError> {
    match &s.transfer {
        Transfer::Abstract(a) => Ok(a),
        Transfer::Detailed(_) => Err(FactoryError::ModeMismatch {
            model: s.source_model.clone(),
            mode: TransferMode::Detailed,
            reason: "capacity estimation needs the abstract transfer model".into(),
        }),
    }
}

pub fn estimate_transfer_capacity(
    s: &ExecutableScenario,
    demand: &[OdDemand],
) -> Result<TransferEstimate, FactoryError> {
    let a = abstract_of(s)?;
    let home = &a.home.name;
    let travel = |x: &str, y: &str| {
        a.travel(x, y).ok_or_else(|| FactoryError::MissingComponent {
            model: s.source_model.clone(),
            component: format!(
                "route station for `{}`",
                if a.station_index(x).is_none() { x } else { y }
            ),
        })
    };
    let mut pairs = Vec::new();
    let mut offered = Q::from_integer(0);
    for d in demand {
        let (ho, od, dh) = (travel(home, &d.from)?, travel(&d.from, &d.to)?, travel(&d.to, home)?);
        let busy_us = ho + a.agv.load_us + od + a.agv.unload_us + dh;
        offered += d.per_hour * Q::from_integer(busy_us as i128) / Q::from_integer(US_PER_HOUR);
        pairs.push(PairEstimate {
            from: d.from.clone(),
            to: d.to.clone(),
            per_hour: d.per_hour,
            busy_us,
            latency_us: ho + a.agv.load_us + od + a.agv.unload_us,
        });
    }
    let required = offered.ceil().to_integer() as u64;
    Ok(TransferEstimate {
        model: s.model.clone(),
        fleet: a.agv.count,
        pairs,
        offered_load: offered,
        required_agvs: required,
        utilization_at_required: if required == 0 {
            Q::from_integer(0)
        } else {
            offered / Q::from_integer(required as i128)
        },
    })
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

impl TransferEstimate {
    pub fn demand_per_hour(&self) -> Q {
        self.pairs.iter().map(|p| p.per_hour).sum()
    }

    /// Transfers per hour a fleet of `n` can carry: all demand when the
    /// offered load fits, otherwise demand scaled by `n / W`.
    pub fn throughput_with(&self, n: u64) -> Q {
        let demand = self.demand_per_hour();
        let n = Q::from_integer(n as i128);
        if self.offered_load <= n {
            demand
        } else {
            demand * n / self.offered_load
        }
    }

    pub fn utilization_with(&self, n: u64) -> Q {
        if n == 0 {
            return Q::from_integer(0);
        }
        (self.offered_load / Q::from_integer(n as i128)).min(Q::from_integer(1))
    }

    /// Demand-weighted mean latency in seconds.
    pub fn mean_latency_s(&self) -> Option<f64> {
        let total = self.demand_per_hour();
        if total == Q::from_integer(0) {
            return None;
        }
        let w: Q = self
            .pairs
            .iter()
            .map(|p| p.per_hour * Q::from_integer(p.latency_us as i128))
            .sum();
        Some(to_f64(w / total) / 1e6)
    }

    pub fn metrics(&self) -> ModeMetrics {
        ModeMetrics {
            model: self.model.clone(),
            throughput_per_hour: to_f64(self.throughput_with(self.fleet)),
            agv_utilization: to_f64(self.utilization_with(self.fleet)),
            latency_s: self.mean_latency_s(),
        }
    }
}

/// The quantities both modes can report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeMetrics {
    pub model: String,
    pub throughput_per_hour: f64,
    pub agv_utilization: f64,
    pub latency_s: Option<f64>,
}

impl SimReport {
    pub fn metrics(&self) -> ModeMetrics {
        ModeMetrics {
            model: self.model.clone(),
            throughput_per_hour: self.delivered_per_hour(),
            agv_utilization: self.agv_utilization().value(),
            latency_s: self.mean_latency_s(),
        }
    }
}

pub const DEFAULT_GAP_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricGap {
    pub metric: String,
    pub abstract_value: f64,
    pub detailed_value: f64,
    /// |abstract - detailed| / detailed.
    pub gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub threshold: f64,
    pub rows: Vec<MetricGap>,
}

fn relative_gap(a: f64, d: f64) -> f64 {
    if d == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - d).abs() / d.abs()
    }
}

/// Gaps between an abstract-side and a detailed-side set of metrics.
pub fn compare_metrics(a: &ModeMetrics, d: &ModeMetrics, threshold: f64) -> Result<ComparisonReport, FactoryError> {
    if a.model != d.model {
        return Err(FactoryError::ModelMismatch {
            left: a.model.clone(),
            right: d.model.clone(),
        });
    }
    let mut rows = Vec::new();
    let mut push = |metric: &str, av: f64, dv: f64| {
        let gap = relative_gap(av, dv);
        rows.push(MetricGap {
            metric: metric.to_string(),
            abstract_value: av,
            detailed_value: dv,
            gap,
            flagged: gap > threshold,
        });
    };
    push("throughput_per_hour", a.throughput_per_hour, d.throughput_per_hour);
    push("agv_utilization", a.agv_utilization, d.agv_utilization);
    if let (Some(al), Some(dl)) = (a.latency_s, d.latency_s) {
        push("transfer_latency_s", al, dl);
    }
    Ok(ComparisonReport {
        model: a.model.clone(),
        threshold,
        rows,
    })
}

pub fn compare_modes(
    estimate: &TransferEstimate,
    detailed: &SimReport,
    threshold: f64,
) -> Result<ComparisonReport, FactoryError> {
    compare_metrics(&estimate.metrics(), &detailed.metrics(), threshold)
}

impl ComparisonReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn to_table(&self) -> String {
        let head = ["metric", "abstract", "detailed", "gap", "flag"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.metric.clone(),
                    format!("{:.4}", r.abstract_value),
                    format!("{:.4}", r.detailed_value),
                    format!("{:.2}%", r.gap * 100.0),
                    if r.flagged { "GAP".into() } else { "ok".into() },
                ]
            })
            .collect();
        let mut width = head.map(str::len);
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let mut l = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i == 0 {
                    let _ = write!(l, "{c:<w$}", w = width[i]);
                } else {
                    let _ = write!(l, "  {c:>w$}", w = width[i]);
                }
            }
            out.push_str(l.trim_end());
            out.push('\n');
        };
        line(&head.map(String::from));
        for row in &body {
            line(row);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,abstract,detailed,gap,flagged\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{}",
                r.metric, r.abstract_value, r.detailed_value, r.gap, r.flagged
            );
        }
        out
    }
}
