use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::resource::Resource;
use crate::time::SimTime;

/// Exact non-negative fraction, always reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Fraction(Ratio<u128>);

impl Fraction {
    pub fn new(numer: u128, denom: u128) -> Fraction {
        if denom == 0 {
            return Fraction(Ratio::from_integer(0));
        }
        Fraction(Ratio::new(numer, denom))
    }

    pub fn zero() -> Fraction {
        Fraction(Ratio::from_integer(0))
    }

    pub fn numer(&self) -> u128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u128 {
        *self.0.denom()
    }

    pub fn value(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Decimal with six places, rounded half up.
    pub fn decimal(&self) -> String {
        let scaled = (self.numer() * 1_000_000 * 2 + self.denom()) / (2 * self.denom());
        format!("{}.{:06}", scaled / 1_000_000, scaled % 1_000_000)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

#[derive(Debug, Clone, Default)]
struct Levels {
    since: u64,
    busy: u128,
    queued: u128,
    holders: u64,
    queue: u64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Collector {
    levels: Vec<Levels>,
    pub(crate) counters: BTreeMap<String, u64>,
    pub(crate) events: u64,
    wip: Vec<(u64, u64)>,
}

impl Collector {
    pub(crate) fn add_resource(&mut self, now: SimTime) {
        self.levels.push(Levels {
            since: now.0,
            ..Levels::default()
        });
    }

    /// Integrates the current levels up to `now`, then applies the deltas.
    pub(crate) fn level_change<A>(
        &mut self,
        id: usize,
        now: SimTime,
        holders: &[String],
        queue: &VecDeque<(String, i32, A)>,
        d_hold: i64,
        d_queue: i64,
    ) {
        let l = &mut self.levels[id];
        debug_assert_eq!((l.holders, l.queue), (holders.len() as u64, queue.len() as u64));
        let dt = (now.0 - l.since) as u128;
        l.busy += dt * l.holders as u128;
        l.queued += dt * l.queue as u128;
        l.since = now.0;
        l.holders = l
            .holders
            .checked_add_signed(d_hold)
            .expect("holder count stays non-negative");
        l.queue = l
            .queue
            .checked_add_signed(d_queue)
            .expect("queue length stays non-negative");
    }

    pub(crate) fn record_wip(&mut self, now: SimTime, wip: u64) {
        match self.wip.last_mut() {
            Some(last) if last.1 == wip => {}
            Some(last) if last.0 == now.0 => last.1 = wip,
            _ => self.wip.push((now.0, wip)),
        }
    }

    pub(crate) fn finish<A>(&self, horizon: SimTime, resources: &[Resource<A>]) -> RunStats {
        let h = horizon.0 as u128;
        let resources = resources
            .iter()
            .zip(&self.levels)
            .map(|(r, l)| {
                let tail = h.saturating_sub(l.since as u128);
                let busy = l.busy + tail * l.holders as u128;
                let queued = l.queued + tail * l.queue as u128;
                ResourceStats {
                    name: r.name.clone(),
                    capacity: r.capacity,
                    busy_us: busy,
                    utilization: Fraction::new(busy, h * r.capacity as u128),
                    mean_queue: Fraction::new(queued, h),
                    acquisitions: r.acquisitions,
                    releases: r.releases,
                    holders_at_end: r.holders.len() as u64,
                    queue_at_end: r.queue.len() as u64,
                }
            })
            .collect();
        RunStats {
            horizon_us: horizon.0,
            events: self.events,
            resources,
            counters: self.counters.clone(),
            wip: self.wip.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceStats {
    pub name: String,
    pub capacity: usize,
    /// Unit-microseconds held over the run.
    pub busy_us: u128,
    /// busy_us / (capacity × horizon).
    pub utilization: Fraction,
    /// Time-weighted mean queue length.
    pub mean_queue: Fraction,
    pub acquisitions: u64,
    pub releases: u64,
    pub holders_at_end: u64,
    pub queue_at_end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub horizon_us: u64,
    pub events: u64,
    pub resources: Vec<ResourceStats>,
    pub counters: BTreeMap<String, u64>,
    /// (time µs, WIP) at every change.
    pub wip: Vec<(u64, u64)>,
}

impl RunStats {
    pub fn resource(&self, name: &str) -> Option<&ResourceStats> {
        self.resources.iter().find(|r| r.name == name)
    }

    /// Rows in `metric,entity,value,unit` order, without a header.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        let mut rows = vec![
            ["horizon".into(), "run".into(), self.horizon_us.to_string(), "us".into()],
            ["events".into(), "run".into(), self.events.to_string(), "count".into()],
        ];
        for r in &self.resources {
            rows.push([
                "utilization".into(),
                r.name.clone(),
                r.utilization.decimal(),
                "fraction".into(),
            ]);
            rows.push([
                "utilization_exact".into(),
                r.name.clone(),
                r.utilization.to_string(),
                "fraction".into(),
            ]);
            rows.push([
                "mean_queue".into(),
                r.name.clone(),
                r.mean_queue.decimal(),
                "count".into(),
            ]);
            rows.push([
                "acquisitions".into(),
                r.name.clone(),
                r.acquisitions.to_string(),
                "count".into(),
            ]);
            rows.push([
                "releases".into(),
                r.name.clone(),
                r.releases.to_string(),
                "count".into(),
            ]);
            rows.push([
                "holders_at_end".into(),
                r.name.clone(),
                r.holders_at_end.to_string(),
                "count".into(),
            ]);
        }
        for (name, n) in &self.counters {
            rows.push(["count".into(), name.clone(), n.to_string(), "count".into()]);
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,entity,value,unit\n");
        for row in self.csv_rows() {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
