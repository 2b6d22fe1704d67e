//! Deterministic discrete-event simulation kernel.
//!
//! Time is an integer count of microseconds. Events fire in
//! `(time, priority, seq)` order, where `seq` is the insertion counter, so
//! no two events ever compare equal. Randomness comes from named streams
//! derived from the engine seed.
//!
//! ```
//! use mfgsim_engine::{Engine, SimTime};
//!
//! let mut engine: Engine<&str> = Engine::new(7);
//! engine.schedule(SimTime::from_secs(2), 0, "b").unwrap();
//! engine.schedule(SimTime::from_secs(1), 0, "a").unwrap();
//! let mut fired = Vec::new();
//! engine
//!     .run_until(SimTime::from_secs(10), |eng, ev| {
//!         fired.push((eng.now(), ev.action));
//!         Ok(())
//!     })
//!     .unwrap();
//! assert_eq!(fired, vec![(SimTime::from_secs(1), "a"), (SimTime::from_secs(2), "b")]);
//! ```

mod resource;
mod rng;
mod stats;
mod time;
mod trace;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Debug;
use std::panic::{catch_unwind, AssertUnwindSafe};

use thiserror::Error;

pub use resource::{Resource, ResourceId, WaitEdge};
pub use rng::Stream;
pub use stats::{Fraction, ResourceStats, RunStats};
pub use time::SimTime;
pub use trace::{Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("cannot schedule at {at} before the current time {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("action `{action}` failed at {at} after {events} event(s): {message}")]
    ActionPanic {
        at: SimTime,
        action: String,
        events: u64,
        pending: usize,
        message: String,
    },
    #[error("the engine has already finished its run")]
    AlreadyFinished,
    #[error("unknown resource #{0}")]
    UnknownResource(usize),
    #[error("`{who}` does not hold resource `{resource}`")]
    NotHolder { who: String, resource: String },
}

impl From<EngineError> for String {
    fn from(e: EngineError) -> String {
        e.to_string()
    }
}

/// Identifier of a scheduled event (its insertion sequence number).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<A> {
    pub time: SimTime,
    pub priority: i32,
    pub seq: u64,
    pub action: A,
}

struct Entry<A> {
    key: (SimTime, i32, u64),
    action: A,
}

impl<A> PartialEq for Entry<A> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<A> Eq for Entry<A> {}

impl<A> PartialOrd for Entry<A> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<A> Ord for Entry<A> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

/// Error a handler returns to abort the run.
pub type ActionResult = Result<(), String>;

pub struct Engine<A> {
    seed: u64,
    now: SimTime,
    fel: BinaryHeap<Reverse<Entry<A>>>,
    next_seq: u64,
    streams: BTreeMap<String, Stream>,
    resources: Vec<Resource<A>>,
    stats: stats::Collector,
    trace: Option<Trace>,
    finished: bool,
}

impl<A: Clone + Debug> Engine<A> {
    pub fn new(seed: u64) -> Engine<A> {
        Engine {
            seed,
            now: SimTime::ZERO,
            fel: BinaryHeap::new(),
            next_seq: 0,
            streams: BTreeMap::new(),
            resources: Vec::new(),
            stats: stats::Collector::default(),
            trace: None,
            finished: false,
        }
    }

    /// Keeps a JSON-lines event trace for the run.
    pub fn with_trace(mut self) -> Engine<A> {
        self.trace = Some(Trace::default());
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.fel.len()
    }

    pub fn schedule(&mut self, at: SimTime, priority: i32, action: A) -> Result<EventId, EngineError> {
        if at < self.now {
            return Err(EngineError::ScheduleInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.fel.push(Reverse(Entry {
            key: (at, priority, seq),
            action,
        }));
        Ok(EventId(seq))
    }

    pub fn schedule_in(&mut self, delay_us: u64, priority: i32, action: A) -> EventId {
        self.schedule(self.now + delay_us, priority, action)
            .expect("a non-negative delay is never in the past")
    }

    /// The named random stream, created on first use.
    pub fn stream(&mut self, label: &str) -> &mut Stream {
        let seed = self.seed;
        self.streams
            .entry(label.to_string())
            .or_insert_with(|| Stream::new(seed, label))
    }

    /// Appends a record to the trace (when tracing).
    pub fn log(&mut self, ev: &str, who: &str, res: Option<&str>) {
        if let Some(t) = &mut self.trace {
            t.push(TraceRecord {
                t_us: self.now.0,
                ev: ev.to_string(),
                who: who.to_string(),
                res: res.map(String::from),
            });
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    pub fn add_resource(&mut self, name: &str, capacity: usize) -> ResourceId {
        assert!(capacity >= 1, "resource capacity must be positive");
        self.resources.push(Resource::new(name, capacity));
        self.stats.add_resource(self.now);
        ResourceId(self.resources.len() - 1)
    }

    pub fn resource(&self, id: ResourceId) -> Result<&Resource<A>, EngineError> {
        self.resources.get(id.0).ok_or(EngineError::UnknownResource(id.0))
    }

    pub fn resources(&self) -> &[Resource<A>] {
        &self.resources
    }

    /// Requests one unit of `id` for `who`. When a unit is free, `on_grant`
    /// is scheduled immediately (at the current time); otherwise the request
    /// waits in FIFO order. Returns whether the grant was immediate.
    pub fn request(&mut self, id: ResourceId, who: &str, priority: i32, on_grant: A) -> Result<bool, EngineError> {
        let now = self.now;
        let res = self.resources.get_mut(id.0).ok_or(EngineError::UnknownResource(id.0))?;
        if res.holders.len() < res.capacity {
            self.stats.level_change(id.0, now, &res.holders, &res.queue, 1, 0);
            res.holders.push(who.to_string());
            res.acquisitions += 1;
            let name = res.name.clone();
            self.log("acquire", who, Some(&name));
            self.schedule(now, priority, on_grant)?;
            Ok(true)
        } else {
            self.stats.level_change(id.0, now, &res.holders, &res.queue, 0, 1);
            res.queue.push_back((who.to_string(), priority, on_grant));
            let name = res.name.clone();
            self.log("wait", who, Some(&name));
            Ok(false)
        }
    }

    /// Releases one unit held by `who`; the longest waiting request, if any,
    /// is granted at the current time.
    pub fn release(&mut self, id: ResourceId, who: &str) -> Result<(), EngineError> {
        let now = self.now;
        let res = self.resources.get_mut(id.0).ok_or(EngineError::UnknownResource(id.0))?;
        let Some(pos) = res.holders.iter().position(|h| h == who) else {
            return Err(EngineError::NotHolder {
                who: who.to_string(),
                resource: res.name.clone(),
            });
        };
        self.stats.level_change(id.0, now, &res.holders, &res.queue, -1, 0);
        res.holders.remove(pos);
        res.releases += 1;
        let name = res.name.clone();
        if !res.queue.is_empty() {
            self.stats.level_change(id.0, now, &res.holders, &res.queue, 1, -1);
        }
        let next = res.queue.pop_front();
        self.log("release", who, Some(&name));
        if let Some((waiter, priority, on_grant)) = next {
            let res = &mut self.resources[id.0];
            res.holders.push(waiter.clone());
            res.acquisitions += 1;
            self.log("acquire", &waiter, Some(&name));
            self.schedule(now, priority, on_grant)?;
        }
        Ok(())
    }

    /// Who waits for which resource and who holds it.
    pub fn wait_graph(&self) -> Vec<WaitEdge> {
        self.resources
            .iter()
            .flat_map(|r| {
                r.queue.iter().map(move |(waiter, _, _)| WaitEdge {
                    waiter: waiter.clone(),
                    resource: r.name.clone(),
                    holders: r.holders.clone(),
                })
            })
            .collect()
    }

    /// Adds `by` to a named counter (e.g. a line's throughput).
    pub fn count(&mut self, name: &str, by: u64) {
        *self.stats.counters.entry(name.to_string()).or_default() += by;
    }

    /// Records the current work-in-process level.
    pub fn record_wip(&mut self, wip: u64) {
        self.stats.record_wip(self.now, wip);
    }

    /// Runs until the event list is empty or the next event lies beyond
    /// `horizon`. Statistics are closed at `horizon`.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> Result<RunStats, EngineError>
    where
        F: FnMut(&mut Engine<A>, Event<A>) -> ActionResult,
    {
        if self.finished {
            return Err(EngineError::AlreadyFinished);
        }
        while let Some(Reverse(top)) = self.fel.peek() {
            if top.key.0 > horizon {
                break;
            }
            let Reverse(entry) = self.fel.pop().expect("peeked");
            let (time, priority, seq) = entry.key;
            debug_assert!(time >= self.now, "clock went backwards");
            self.now = time;
            self.stats.events += 1;
            let event = Event {
                time,
                priority,
                seq,
                action: entry.action,
            };
            let label = format!("{:?}", event.action);
            let outcome = catch_unwind(AssertUnwindSafe(|| handler(self, event)));
            let message = match outcome {
                Ok(Ok(())) => continue,
                Ok(Err(m)) => m,
                Err(payload) => payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".to_string()),
            };
            self.finished = true;
            return Err(EngineError::ActionPanic {
                at: self.now,
                action: label,
                events: self.stats.events,
                pending: self.fel.len(),
                message,
            });
        }
        self.finished = true;
        let stats = self.stats.finish(horizon, &self.resources);
        self.now = horizon.max(self.now);
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    enum Act {
        Arrive(u32),
        Start(u32),
        Done(u32),
    }

    #[test]
    fn ties_fire_in_insertion_order() {
        let mut e: Engine<u32> = Engine::new(0);
        for i in 0..5 {
            e.schedule(SimTime(10), 1, i).unwrap();
        }
        e.schedule(SimTime(10), 0, 99).unwrap();
        e.schedule(SimTime(5), 7, 50).unwrap();
        let mut order = Vec::new();
        e.run_until(SimTime(100), |_, ev| {
            order.push(ev.action);
            Ok(())
        })
        .unwrap();
        assert_eq!(order, vec![50, 99, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn schedule_in_past_rejected() {
        let mut e: Engine<u32> = Engine::new(0);
        e.schedule(SimTime(10), 0, 1).unwrap();
        let mut err = None;
        e.run_until(SimTime(100), |eng, _| {
            err = Some(eng.schedule(SimTime(9), 0, 2).unwrap_err());
            Ok(())
        })
        .unwrap();
        assert_eq!(
            err,
            Some(EngineError::ScheduleInPast {
                at: SimTime(9),
                now: SimTime(10)
            })
        );
    }

    #[test]
    fn now_events_precede_later_ones() {
        let mut e: Engine<u32> = Engine::new(0);
        e.schedule(SimTime(10), 0, 1).unwrap();
        e.schedule(SimTime(11), -5, 3).unwrap();
        let mut order = Vec::new();
        e.run_until(SimTime(100), |eng, ev| {
            order.push(ev.action);
            if ev.action == 1 {
                eng.schedule(eng.now(), 9, 2).unwrap();
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(order, vec![1, 2, 3]);
    }

    #[test]
    fn empty_run_returns_immediately() {
        let mut e: Engine<u32> = Engine::new(0);
        let m = e.add_resource("m", 1);
        let stats = e.run_until(SimTime::from_secs(100), |_, _| Ok(())).unwrap();
        assert_eq!(stats.events, 0);
        assert_eq!(stats.resources[m.0].utilization.value(), 0.0);
        assert!(matches!(
            e.run_until(SimTime::from_secs(1), |_, _| Ok(())),
            Err(EngineError::AlreadyFinished)
        ));
    }

    /// 100 parts at t=0 through a capacity-1 machine with a 10 s cycle.
    #[test]
    fn serial_machine_completes_at_1000s() {
        let mut e: Engine<Act> = Engine::new(1).with_trace();
        let machine = e.add_resource("machine", 1);
        for p in 0..100 {
            e.schedule(SimTime::ZERO, 0, Act::Arrive(p)).unwrap();
        }
        let mut last = SimTime::ZERO;
        let stats = e
            .run_until(SimTime::from_secs(2000), |eng, ev| {
                match ev.action {
                    Act::Arrive(p) => {
                        eng.request(machine, &format!("part{p}"), 0, Act::Start(p))?;
                    }
                    Act::Start(p) => {
                        eng.schedule_in(10_000_000, 0, Act::Done(p));
                    }
                    Act::Done(p) => {
                        eng.release(machine, &format!("part{p}"))?;
                        eng.count("machine", 1);
                        last = eng.now();
                    }
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(last, SimTime::from_secs(1000));
        assert_eq!(stats.counters["machine"], 100);
        let r = &stats.resources[machine.0];
        assert_eq!(r.utilization, Fraction::new(1000, 2000));
        assert_eq!((r.acquisitions, r.releases, r.holders_at_end), (100, 100, 0));
        let trace = e.trace().unwrap();
        assert!(trace
            .to_jsonl()
            .starts_with("{\"t_us\":0,\"ev\":\"acquire\",\"who\":\"part0\",\"res\":\"machine\"}\n"));
    }

    #[test]
    fn horizon_cuts_the_run() {
        let mut e: Engine<u32> = Engine::new(0);
        e.schedule(SimTime(5), 0, 1).unwrap();
        e.schedule(SimTime(50), 0, 2).unwrap();
        let mut seen = Vec::new();
        let stats = e
            .run_until(SimTime(10), |eng, ev| {
                seen.push((eng.now(), ev.action));
                Ok(())
            })
            .unwrap();
        assert_eq!(seen, vec![(SimTime(5), 1)]);
        assert_eq!(stats.horizon_us, 10);
        assert_eq!(e.pending(), 1);
    }

    #[test]
    fn panicking_action_aborts_with_state() {
        let mut e: Engine<u32> = Engine::new(0);
        e.schedule(SimTime(3), 0, 1).unwrap();
        e.schedule(SimTime(4), 0, 2).unwrap();
        let err = e
            .run_until(SimTime(10), |_, ev| {
                if ev.action == 1 {
                    panic!("boom");
                }
                Ok(())
            })
            .unwrap_err();
        match err {
            EngineError::ActionPanic {
                at,
                events,
                pending,
                message,
                ..
            } => {
                assert_eq!((at, events, pending), (SimTime(3), 1, 1));
                assert_eq!(message, "boom");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn release_by_non_holder_is_an_error() {
        let mut e: Engine<u32> = Engine::new(0);
        let r = e.add_resource("x", 1);
        assert!(matches!(e.release(r, "nobody"), Err(EngineError::NotHolder { .. })));
        assert!(matches!(
            e.release(ResourceId(9), "a"),
            Err(EngineError::UnknownResource(9))
        ));
    }

    #[test]
    fn waiting_requests_form_the_wait_graph() {
        let mut e: Engine<u32> = Engine::new(0);
        let r = e.add_resource("crossing", 1);
        assert!(e.request(r, "agv1", 0, 1).unwrap());
        assert!(!e.request(r, "agv2", 0, 2).unwrap());
        let g = e.wait_graph();
        assert_eq!(
            g,
            vec![WaitEdge {
                waiter: "agv2".into(),
                resource: "crossing".into(),
                holders: vec!["agv1".into()]
            }]
        );
    }
}
