//! Run reports and their CSV form.

use std::collections::BTreeMap;

use mfgsim_core::TransferMode;
use mfgsim_engine::{Fraction, RunStats, Trace};
use serde::Serialize;

pub const CSV_HEADER: &str = "metric,entity,value,unit";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferRecord {
    pub id: u64,
    pub job: Option<String>,
    pub from: String,
    pub to: String,
    pub requested_us: u64,
    pub agv: Option<String>,
    pub assigned_us: Option<u64>,
    pub loaded_us: Option<u64>,
    pub delivered_us: Option<u64>,
}

impl TransferRecord {
    pub fn latency_us(&self) -> Option<u64> {
        self.delivered_us.map(|d| d - self.requested_us)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub scenario: String,
    pub model: String,
    pub mode: TransferMode,
    pub seed: u64,
    pub horizon_us: u64,
    /// Parts released at the machining lines.
    pub released: u64,
    /// Parts that left the system (stored, or finished with no onward route).
    pub completed: u64,
    /// Parts still inside the system at the horizon.
    pub wip: u64,
    pub transfers: Vec<TransferRecord>,
    /// Busy time per AGV, from assignment until idle at home again.
    pub agv_busy_us: Vec<(String, u64)>,
    pub trace: Trace,
    pub stats: RunStats,
}

impl SimReport {
    pub fn conservation_holds(&self) -> bool {
        self.released == self.completed + self.wip
    }

    pub fn delivered(&self) -> u64 {
        self.transfers.iter().filter(|t| t.delivered_us.is_some()).count() as u64
    }

    /// Delivered transfers per hour of horizon.
    pub fn delivered_per_hour(&self) -> f64 {
        self.delivered() as f64 * 3.6e9 / self.horizon_us as f64
    }

    /// Completed cycles per component.
    pub fn throughput(&self) -> BTreeMap<String, u64> {
        self.stats
            .counters
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("throughput.").map(|c| (c.to_string(), *v)))
            .collect()
    }

    /// Fleet busy time over fleet size times horizon.
    pub fn agv_utilization(&self) -> Fraction {
        let busy: u128 = self.agv_busy_us.iter().map(|(_, b)| *b as u128).sum();
        Fraction::new(busy, self.agv_busy_us.len() as u128 * self.horizon_us as u128)
    }

    /// Mean request-to-delivery time of delivered transfers, in seconds.
    pub fn mean_latency_s(&self) -> Option<f64> {
        let l: Vec<u64> = self.transfers.iter().filter_map(TransferRecord::latency_us).collect();
        (!l.is_empty()).then(|| l.iter().sum::<u64>() as f64 / l.len() as f64 / 1e6)
    }

    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        let row = |m: &str, e: &str, v: String, u: &str| [m.to_string(), e.to_string(), v, u.to_string()];
        let mut rows = vec![
            row("released", "run", self.released.to_string(), "parts"),
            row("completed", "run", self.completed.to_string(), "parts"),
            row("wip", "run", self.wip.to_string(), "parts"),
            row(
                "conservation",
                "run",
                if self.conservation_holds() { "ok" } else { "violated" }.to_string(),
                "check",
            ),
        ];
        for (c, n) in self.throughput() {
            rows.push(row("throughput", &c, n.to_string(), "cycles"));
        }
        rows.push(row(
            "transfers_requested",
            "run",
            self.transfers.len().to_string(),
            "transfers",
        ));
        rows.push(row(
            "transfers_delivered",
            "run",
            self.delivered().to_string(),
            "transfers",
        ));
        rows.push(row(
            "delivered_rate",
            "run",
            format!("{:.6}", self.delivered_per_hour()),
            "1/h",
        ));
        if let Some(l) = self.mean_latency_s() {
            rows.push(row("mean_transfer_latency", "run", format!("{l:.6}"), "s"));
        }
        for (a, busy) in &self.agv_busy_us {
            rows.push(row(
                "agv_utilization",
                a,
                Fraction::new(*busy as u128, self.horizon_us as u128).decimal(),
                "fraction",
            ));
        }
        rows.push(row(
            "agv_utilization",
            "fleet",
            self.agv_utilization().decimal(),
            "fraction",
        ));
        rows.extend(
            self.stats
                .csv_rows()
                .into_iter()
                .filter(|r| r[0] != "count" || !r[1].starts_with("throughput.")),
        );
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in self.csv_rows() {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}
