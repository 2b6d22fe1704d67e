//! Runs an executable scenario on the event engine.
//!
//! Each machining line is three resources: `L.in` (input buffer), `L` (the
//! machine) and `L.out` (output buffer). A part holds its input slot until the
//! machine takes it, and holds the machine until an output slot frees up, so a
//! full output buffer blocks the line. Output slots are freed when an AGV
//! finishes loading.

use std::collections::{BTreeMap, VecDeque};

use mfgsim_core::Demand;
use mfgsim_engine::{Engine, EngineError, ResourceId, SimTime};

use crate::layout::{DetailedTransfer, Step};
use crate::plant::{AbstractTransfer, ExecutableScenario, Transfer};
use crate::report::{SimReport, TransferRecord};
use crate::FactoryError;

/// A transfer injected directly between two locations (stop stations in
/// detailed mode, route stations in abstract mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub at_us: u64,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Line(usize),
    Asm,
}

#[derive(Debug, Clone)]
enum Action {
    Release { line: usize, n: u64 },
    Retrieve { n: u64 },
    InGranted { line: usize, job: u64 },
    MachineGranted { st: Stage, job: u64 },
    CycleDone { st: Stage, job: u64 },
    OutGranted { st: Stage, job: u64 },
    SlotGranted { job: u64 },
    CraneStore { job: u64 },
    StoreDone { job: u64 },
    CraneRetrieve,
    RetrieveDone,
    Probe { from: String, to: String },
    CrossGranted { agv: usize },
    AgvDone { agv: usize },
}

#[derive(Debug, Clone)]
struct Job {
    name: String,
    parts: u64,
    /// Component the job last left.
    at: String,
}

#[derive(Debug, Clone)]
enum Move {
    Edge { edge: Option<String>, us: u64 },
    Cross { node: String, us: u64 },
    Dwell { us: u64 },
    Arrive { loc: String },
    Load { t: usize },
    Unload { t: usize },
}

#[derive(Debug)]
struct Agv {
    name: String,
    home: String,
    loc: String,
    moves: VecDeque<Move>,
    current: Option<Move>,
    idle: bool,
    busy_since: Option<SimTime>,
    busy_us: u64,
}

#[derive(Debug)]
struct Request {
    t: usize,
    origin: String,
    dest: String,
    /// Stage whose output slot the job occupies until loaded.
    from_stage: Option<Stage>,
    job: Option<u64>,
}

struct LineRes {
    input: ResourceId,
    machine: ResourceId,
    output: ResourceId,
}

enum Fleet<'s> {
    Abstract(&'s AbstractTransfer),
    Detailed(&'s DetailedTransfer),
}

impl Fleet<'_> {
    fn location(&self, component: &str) -> Option<String> {
        match self {
            Fleet::Abstract(a) => a.station_index(component).map(|_| component.to_string()),
            Fleet::Detailed(d) => d.location_of(component).cloned(),
        }
    }

    fn handling(&self, agv: usize) -> (u64, u64) {
        match self {
            Fleet::Abstract(a) => (a.agv.load_us, a.agv.unload_us),
            Fleet::Detailed(d) => (d.agvs[agv].load_us, d.agvs[agv].unload_us),
        }
    }

    /// Moves that take `agv` from `from` to `to`, ending with an arrival.
    fn drive(&self, agv: usize, from: &str, to: &str) -> Option<(u64, Vec<Move>)> {
        let mut moves = Vec::new();
        let total;
        match self {
            Fleet::Abstract(a) => {
                total = a.travel(from, to)?;
                if from != to {
                    moves.push(Move::Edge { edge: None, us: total });
                }
            }
            Fleet::Detailed(d) => {
                let plan = d.plan(&d.agvs[agv], from, to)?;
                total = plan.duration_us();
                moves.extend(plan.steps.into_iter().map(|s| match s {
                    Step::Edge { edge, us } => Move::Edge { edge: Some(edge), us },
                    Step::Crossing { node, us } => Move::Cross { node, us },
                    Step::Dwell { us, .. } => Move::Dwell { us },
                }));
            }
        }
        moves.push(Move::Arrive { loc: to.to_string() });
        Some((total, moves))
    }

    /// Direct drive, or via the vehicle's home when no direct route exists.
    fn drive_via_home(&self, agv: usize, home: &str, from: &str, to: &str) -> Option<(u64, Vec<Move>)> {
        self.drive(agv, from, to).or_else(|| {
            let (t1, mut m1) = self.drive(agv, from, home)?;
            let (t2, m2) = self.drive(agv, home, to)?;
            m1.extend(m2);
            Some((t1 + t2, m1))
        })
    }
}

struct World<'s> {
    s: &'s ExecutableScenario,
    fleet: Fleet<'s>,
    lines: Vec<LineRes>,
    asm_machine: ResourceId,
    asm_out: ResourceId,
    wh_slots: ResourceId,
    wh_crane: ResourceId,
    crossings: BTreeMap<String, ResourceId>,
    jobs: BTreeMap<u64, Job>,
    next_job: u64,
    stock: BTreeMap<String, VecDeque<u64>>,
    stored: VecDeque<String>,
    released: u64,
    completed: u64,
    queue: VecDeque<Request>,
    /// Assigned requests by transfer index.
    pending: BTreeMap<usize, Request>,
    transfers: Vec<TransferRecord>,
    agvs: Vec<Agv>,
}

type Outcome = Result<(), String>;

impl<'s> World<'s> {
    fn new(s: &'s ExecutableScenario, eng: &mut Engine<Action>) -> World<'s> {
        let lines = s
            .machining_lines
            .iter()
            .map(|l| LineRes {
                input: eng.add_resource(&format!("{}.in", l.name), l.input_buffer as usize),
                machine: eng.add_resource(&l.name, 1),
                output: eng.add_resource(&format!("{}.out", l.name), l.output_buffer as usize),
            })
            .collect();
        let a = &s.assembly_line;
        let asm_machine = eng.add_resource(&a.name, 1);
        let asm_out = eng.add_resource(&format!("{}.out", a.name), a.output_buffer as usize);
        let w = &s.warehouse;
        let wh_slots = eng.add_resource(&format!("{}.slots", w.name), w.capacity as usize);
        let wh_crane = eng.add_resource(&format!("{}.crane", w.name), 1);
        let (fleet, agvs, crossings) = match &s.transfer {
            Transfer::Abstract(t) => {
                let agvs = (1..=t.agv.count)
                    .map(|i| Agv::new(format!("AGV{i}"), &t.home.name))
                    .collect();
                (Fleet::Abstract(t), agvs, BTreeMap::new())
            }
            Transfer::Detailed(d) => {
                let agvs = d.agvs.iter().map(|v| Agv::new(v.name.clone(), &v.home)).collect();
                let crossings = d
                    .crossings()
                    .map(|n| (n.name.clone(), eng.add_resource(&n.name, 1)))
                    .collect();
                (Fleet::Detailed(d), agvs, crossings)
            }
        };
        World {
            s,
            fleet,
            lines,
            asm_machine,
            asm_out,
            wh_slots,
            wh_crane,
            crossings,
            jobs: BTreeMap::new(),
            next_job: 0,
            stock: BTreeMap::new(),
            stored: VecDeque::new(),
            released: 0,
            completed: 0,
            queue: VecDeque::new(),
            pending: BTreeMap::new(),
            transfers: Vec::new(),
            agvs,
        }
    }

    fn stage_name(&self, st: Stage) -> &'s str {
        match st {
            Stage::Line(i) => &self.s.machining_lines[i].name,
            Stage::Asm => &self.s.assembly_line.name,
        }
    }

    fn new_job(&mut self, at: &str, parts: u64) -> u64 {
        let id = self.next_job;
        self.next_job += 1;
        self.jobs.insert(
            id,
            Job {
                name: format!("{at}#{id}"),
                parts,
                at: at.to_string(),
            },
        );
        id
    }

    fn job_name(&self, job: u64) -> Result<String, String> {
        self.jobs
            .get(&job)
            .map(|j| j.name.clone())
            .ok_or_else(|| format!("unknown job {job}"))
    }

    fn wip(&self) -> u64 {
        self.jobs.values().map(|j| j.parts).sum()
    }

    fn complete(&mut self, eng: &mut Engine<Action>, job: u64) {
        let j = self.jobs.remove(&job).expect("live job");
        self.completed += j.parts;
        eng.log("complete", &j.name, None);
        eng.record_wip(self.wip());
    }

    fn schedule_demand(eng: &mut Engine<Action>, d: &Demand, first: bool, action: impl Fn(u64) -> Action) -> Outcome {
        match *d {
            Demand::Every { interval_us, offset_us } => {
                let at = if first { offset_us } else { eng.now().0 + interval_us };
                eng.schedule(SimTime(at), 0, action(1))?;
            }
            Demand::Batch { count, at_us } => {
                if first && count > 0 {
                    eng.schedule(SimTime(at_us), 0, action(count))?;
                }
            }
            Demand::Exponential { mean_us, offset_us } => {
                let u = eng.stream("demand").uniform();
                let gap = (-(1.0 - u).ln() * mean_us as f64).round() as u64;
                let base = if first { offset_us } else { eng.now().0 };
                eng.schedule(SimTime(base + gap), 0, action(1))?;
            }
        }
        Ok(())
    }

    fn start(&mut self, eng: &mut Engine<Action>, probes: &[Probe]) -> Outcome {
        for (i, l) in self.s.machining_lines.iter().enumerate() {
            if let Some(d) = self.s.demand.get(&l.name) {
                Self::schedule_demand(eng, d, true, |n| Action::Release { line: i, n })?;
            }
        }
        if let Some(d) = self.s.demand.get(&self.s.warehouse.name) {
            Self::schedule_demand(eng, d, true, |n| Action::Retrieve { n })?;
        }
        for p in probes {
            eng.schedule(
                SimTime(p.at_us),
                0,
                Action::Probe {
                    from: p.from.clone(),
                    to: p.to.clone(),
                },
            )?;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<Action>, action: Action) -> Outcome {
        match action {
            Action::Release { line, n } => {
                let name = &self.s.machining_lines[line].name;
                for _ in 0..n {
                    let job = self.new_job(name, 1);
                    self.released += 1;
                    eng.count(&format!("released.{name}"), 1);
                    let who = self.job_name(job)?;
                    eng.log("release", &who, Some(name));
                    eng.request(self.lines[line].input, &who, 0, Action::InGranted { line, job })?;
                }
                eng.record_wip(self.wip());
                if let Some(d) = self.s.demand.get(name) {
                    Self::schedule_demand(eng, d, false, |n| Action::Release { line, n })?;
                }
            }
            Action::InGranted { line, job } => {
                let who = self.job_name(job)?;
                eng.request(
                    self.lines[line].machine,
                    &who,
                    0,
                    Action::MachineGranted {
                        st: Stage::Line(line),
                        job,
                    },
                )?;
            }
            Action::MachineGranted { st, job } => {
                let who = self.job_name(job)?;
                let us = match st {
                    Stage::Line(i) => {
                        eng.release(self.lines[i].input, &who)?;
                        self.s.machining_lines[i].cycle_us
                    }
                    Stage::Asm => self.s.assembly_line.assembly_us,
                };
                eng.schedule_in(us, 0, Action::CycleDone { st, job });
            }
            Action::CycleDone { st, job } => {
                let name = self.stage_name(st);
                eng.count(&format!("throughput.{name}"), 1);
                let who = self.job_name(job)?;
                if self.s.routes.contains_key(name) {
                    let out = match st {
                        Stage::Line(i) => self.lines[i].output,
                        Stage::Asm => self.asm_out,
                    };
                    eng.request(out, &who, 0, Action::OutGranted { st, job })?;
                } else {
                    eng.release(self.machine(st), &who)?;
                    self.complete(eng, job);
                }
            }
            Action::OutGranted { st, job } => {
                let who = self.job_name(job)?;
                eng.release(self.machine(st), &who)?;
                let from = self.stage_name(st);
                let to = &self.s.routes[from];
                let origin = self
                    .fleet
                    .location(from)
                    .ok_or_else(|| format!("no transfer location for `{from}`"))?;
                let dest = self
                    .fleet
                    .location(to)
                    .ok_or_else(|| format!("no transfer location for `{to}`"))?;
                self.request_transfer(eng, Some(job), Some(st), from, to, origin, dest)?;
            }
            Action::SlotGranted { job } => {
                let who = self.job_name(job)?;
                eng.request(self.wh_crane, &who, 0, Action::CraneStore { job })?;
            }
            Action::CraneStore { job } => {
                eng.schedule_in(self.s.warehouse.store_us, 0, Action::StoreDone { job });
            }
            Action::StoreDone { job } => {
                let who = self.job_name(job)?;
                eng.release(self.wh_crane, &who)?;
                self.stored.push_back(who);
                eng.count("stored", 1);
                self.complete(eng, job);
            }
            Action::Retrieve { n } => {
                let wh = &self.s.warehouse.name;
                for _ in 0..n {
                    eng.request(self.wh_crane, &format!("{wh}.retrieve"), 0, Action::CraneRetrieve)?;
                }
                if let Some(d) = self.s.demand.get(wh) {
                    Self::schedule_demand(eng, d, false, |n| Action::Retrieve { n })?;
                }
            }
            Action::CraneRetrieve => {
                eng.schedule_in(self.s.warehouse.retrieve_us, 0, Action::RetrieveDone);
            }
            Action::RetrieveDone => {
                let wh = &self.s.warehouse.name;
                eng.release(self.wh_crane, &format!("{wh}.retrieve"))?;
                match self.stored.pop_front() {
                    Some(item) => {
                        eng.release(self.wh_slots, &item)?;
                        eng.count("retrieved", 1);
                    }
                    None => eng.count("retrieve_misses", 1),
                }
            }
            Action::Probe { from, to } => {
                self.request_transfer(eng, None, None, &from, &to, from.clone(), to.clone())?;
            }
            Action::CrossGranted { agv } => {
                let Some(Move::Cross { us, .. }) = &self.agvs[agv].current else {
                    return Err(format!(
                        "{} was granted a crossing it is not waiting for",
                        self.agvs[agv].name
                    ));
                };
                eng.schedule_in(*us, 0, Action::AgvDone { agv });
            }
            Action::AgvDone { agv } => {
                self.finish_move(eng, agv)?;
                self.advance(eng, agv)?;
            }
        }
        Ok(())
    }

    fn machine(&self, st: Stage) -> ResourceId {
        match st {
            Stage::Line(i) => self.lines[i].machine,
            Stage::Asm => self.asm_machine,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn request_transfer(
        &mut self,
        eng: &mut Engine<Action>,
        job: Option<u64>,
        from_stage: Option<Stage>,
        from: &str,
        to: &str,
        origin: String,
        dest: String,
    ) -> Outcome {
        let t = self.transfers.len();
        self.transfers.push(TransferRecord {
            id: t as u64,
            job: job.map(|j| self.jobs[&j].name.clone()),
            from: from.to_string(),
            to: to.to_string(),
            requested_us: eng.now().0,
            agv: None,
            assigned_us: None,
            loaded_us: None,
            delivered_us: None,
        });
        self.queue.push_back(Request {
            t,
            origin,
            dest,
            from_stage,
            job,
        });
        self.dispatch(eng)
    }

    /// Serves the queue in FIFO order with the nearest idle vehicle.
    fn dispatch(&mut self, eng: &mut Engine<Action>) -> Outcome {
        while let Some(req) = self.queue.front() {
            let best = self
                .agvs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.idle)
                .filter_map(|(i, a)| self.fleet.drive(i, &a.loc, &req.origin).map(|(us, _)| (us, i)))
                .min();
            let Some((_, agv)) = best else { break };
            let req = self.queue.pop_front().expect("front exists");
            self.assign(eng, agv, req)?;
        }
        Ok(())
    }

    fn assign(&mut self, eng: &mut Engine<Action>, agv: usize, req: Request) -> Outcome {
        let a = &self.agvs[agv];
        let unreachable = |x: &str, y: &str| format!("{} has no route data from `{x}` to `{y}`", a.name);
        let (_, to_origin) = self
            .fleet
            .drive_via_home(agv, &a.home, &a.loc, &req.origin)
            .ok_or_else(|| unreachable(&a.loc, &req.origin))?;
        let (_, carry) = self
            .fleet
            .drive(agv, &req.origin, &req.dest)
            .ok_or_else(|| unreachable(&req.origin, &req.dest))?;
        let rec = &mut self.transfers[req.t];
        rec.agv = Some(a.name.clone());
        rec.assigned_us = Some(eng.now().0);
        let a = &mut self.agvs[agv];
        a.moves.extend(to_origin);
        a.moves.push_back(Move::Load { t: req.t });
        a.moves.extend(carry);
        a.moves.push_back(Move::Unload { t: req.t });
        if a.idle {
            a.idle = false;
            a.busy_since = Some(eng.now());
        }
        eng.log("assign", &a.name.clone(), Some(&req.origin));
        self.pending.insert(req.t, req);
        self.advance(eng, agv)
    }

    /// Starts the next move of `agv`, or decides what it does next.
    fn advance(&mut self, eng: &mut Engine<Action>, agv: usize) -> Outcome {
        loop {
            let Some(m) = self.agvs[agv].moves.pop_front() else {
                return self.next_task(eng, agv);
            };
            let name = self.agvs[agv].name.clone();
            let (load_us, unload_us) = self.fleet.handling(agv);
            match &m {
                Move::Arrive { loc } => {
                    self.agvs[agv].loc = loc.clone();
                    eng.log("arrive", &name, Some(loc));
                    continue;
                }
                Move::Edge { edge, us } => {
                    if let Some(e) = edge {
                        eng.log("edge_in", &name, Some(e));
                    }
                    eng.schedule_in(*us, 0, Action::AgvDone { agv });
                }
                Move::Cross { node, .. } => {
                    let res = self.crossings[node];
                    eng.request(res, &name, 0, Action::CrossGranted { agv })?;
                }
                Move::Dwell { us } => {
                    eng.schedule_in(*us, 0, Action::AgvDone { agv });
                }
                Move::Load { .. } => {
                    eng.schedule_in(load_us, 0, Action::AgvDone { agv });
                }
                Move::Unload { .. } => {
                    eng.schedule_in(unload_us, 0, Action::AgvDone { agv });
                }
            }
            self.agvs[agv].current = Some(m);
            return Ok(());
        }
    }

    fn finish_move(&mut self, eng: &mut Engine<Action>, agv: usize) -> Outcome {
        let name = self.agvs[agv].name.clone();
        let m = self.agvs[agv]
            .current
            .take()
            .ok_or_else(|| format!("{name} finished a move it never started"))?;
        match m {
            Move::Edge { edge: Some(e), .. } => eng.log("edge_out", &name, Some(&e)),
            Move::Edge { edge: None, .. } | Move::Dwell { .. } | Move::Arrive { .. } => {}
            Move::Cross { node, .. } => eng.release(self.crossings[&node], &name)?,
            Move::Load { t } => {
                let req = &self.pending[&t];
                if let (Some(job), Some(st)) = (req.job, req.from_stage) {
                    let who = self.job_name(job)?;
                    let out = match st {
                        Stage::Line(i) => self.lines[i].output,
                        Stage::Asm => self.asm_out,
                    };
                    eng.release(out, &who)?;
                }
                self.transfers[t].loaded_us = Some(eng.now().0);
                eng.log("load", &name, Some(&self.transfers[t].from.clone()));
            }
            Move::Unload { t } => {
                let req = self.pending.remove(&t).expect("assigned request");
                self.transfers[t].delivered_us = Some(eng.now().0);
                let to = self.transfers[t].to.clone();
                eng.log("unload", &name, Some(&to));
                if let Some(job) = req.job {
                    self.deliver(eng, job, &to)?;
                }
            }
        }
        Ok(())
    }

    fn next_task(&mut self, eng: &mut Engine<Action>, agv: usize) -> Outcome {
        if let Some(req) = self.queue.pop_front() {
            return self.assign(eng, agv, req);
        }
        let a = &mut self.agvs[agv];
        if a.loc == a.home {
            a.idle = true;
            if let Some(since) = a.busy_since.take() {
                a.busy_us += eng.now().saturating_sub(since);
            }
            eng.log("idle", &a.name.clone(), Some(&a.home.clone()));
            return self.dispatch(eng);
        }
        let (_, home) = self
            .fleet
            .drive(agv, &a.loc, &a.home)
            .ok_or_else(|| format!("{} has no route data from `{}` home", a.name, a.loc))?;
        self.agvs[agv].moves.extend(home);
        self.advance(eng, agv)
    }

    fn deliver(&mut self, eng: &mut Engine<Action>, job: u64, to: &str) -> Outcome {
        let from = std::mem::replace(&mut self.jobs.get_mut(&job).expect("live job").at, to.to_string());
        let who = self.job_name(job)?;
        if to == self.s.assembly_line.name {
            self.stock.entry(from).or_default().push_back(job);
            self.try_kit(eng)
        } else if to == self.s.warehouse.name {
            eng.request(self.wh_slots, &who, 0, Action::SlotGranted { job })?;
            Ok(())
        } else if let Some(line) = self.s.machining_lines.iter().position(|l| l.name == to) {
            eng.request(self.lines[line].input, &who, 0, Action::InGranted { line, job })?;
            Ok(())
        } else {
            Err(format!("no component `{to}` to deliver to"))
        }
    }

    /// Forms assembly kits while every input has enough stock.
    fn try_kit(&mut self, eng: &mut Engine<Action>) -> Outcome {
        let inputs = &self.s.assembly_line.inputs;
        while inputs
            .iter()
            .all(|(src, need)| self.stock.get(src).map_or(0, |q| q.len() as u64) >= *need)
        {
            let mut parts = 0;
            for (src, need) in inputs {
                let q = self.stock.get_mut(src).expect("checked");
                for _ in 0..*need {
                    let j = q.pop_front().expect("checked");
                    parts += self.jobs.remove(&j).expect("live job").parts;
                }
            }
            let asm = &self.s.assembly_line.name;
            let kit = self.new_job(asm, parts);
            let who = self.job_name(kit)?;
            eng.log("kit", &who, Some(asm));
            eng.request(
                self.asm_machine,
                &who,
                0,
                Action::MachineGranted {
                    st: Stage::Asm,
                    job: kit,
                },
            )?;
        }
        Ok(())
    }
}

impl Agv {
    fn new(name: String, home: &str) -> Agv {
        Agv {
            name,
            home: home.to_string(),
            loc: home.to_string(),
            moves: VecDeque::new(),
            current: None,
            idle: true,
            busy_since: None,
            busy_us: 0,
        }
    }
}

/// Runs `scenario` for `horizon_us` with engine seed `seed`.
pub fn simulate(scenario: &ExecutableScenario, seed: u64, horizon_us: u64) -> Result<SimReport, FactoryError> {
    simulate_with_probes(scenario, seed, horizon_us, &[])
}

/// Like [`simulate`], with extra transfers injected at fixed times.
pub fn simulate_with_probes(
    scenario: &ExecutableScenario,
    seed: u64,
    horizon_us: u64,
    probes: &[Probe],
) -> Result<SimReport, FactoryError> {
    let mut eng = Engine::new(seed).with_trace();
    let mut world = World::new(scenario, &mut eng);
    world
        .start(&mut eng, probes)
        .map_err(|message| EngineError::ActionPanic {
            at: SimTime::ZERO,
            action: "start".into(),
            events: 0,
            pending: eng.pending(),
            message,
        })?;
    let horizon = SimTime(horizon_us);
    let stats = eng.run_until(horizon, |eng, ev| world.handle(eng, ev.action))?;
    if eng.pending() == 0 {
        let waits = eng.wait_graph();
        if !waits.is_empty() || !world.queue.is_empty() {
            return Err(FactoryError::DeadlockDetected { at: eng.now(), waits });
        }
    }
    let wip = world.wip();
    let agv_busy = world
        .agvs
        .iter()
        .map(|a| {
            let open = a.busy_since.map_or(0, |s| horizon.saturating_sub(s));
            (a.name.clone(), a.busy_us + open)
        })
        .collect();
    Ok(SimReport {
        scenario: scenario.scenario.clone(),
        model: scenario.model.clone(),
        mode: scenario.mode(),
        seed,
        horizon_us,
        released: world.released,
        completed: world.completed,
        wip,
        transfers: world.transfers,
        agv_busy_us: agv_busy,
        trace: eng.take_trace().expect("tracing enabled"),
        stats,
    })
}
