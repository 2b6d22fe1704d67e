//! Executable scenarios and the vertical interface that builds them.

use std::collections::{BTreeMap, BTreeSet};

use mfgsim_core::entity::DataValue;
use mfgsim_core::sorts::SortSet;
use mfgsim_core::{
    check_wellformed, verify_model, AttributeValue, Demand, EntitySpec, InformationModel, Number, Ontology,
    ScenarioConfig, SortSystem, TransferMode, Unit,
};
use num_rational::Ratio;
use serde::Serialize;

use crate::layout::{DetailedTransfer, Edge, EdgeKind, Node, NodeKind};
use crate::FactoryError;

/// Exact rational used for lengths, speeds and factors.
pub type Q = Ratio<i128>;

pub(crate) fn q(n: &Number) -> Q {
    Q::new(n.mantissa() as i128, 10i128.pow(n.scale()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachiningLine {
    pub name: String,
    pub cycle_us: u64,
    pub input_buffer: u64,
    pub output_buffer: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssemblyLine {
    pub name: String,
    pub assembly_us: u64,
    /// Parts consumed per cycle, by source component.
    pub inputs: BTreeMap<String, u64>,
    pub output_buffer: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warehouse {
    pub name: String,
    pub store_us: u64,
    pub retrieve_us: u64,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomeStation {
    pub name: String,
    pub policy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgvFleet {
    pub count: u64,
    pub speed: Q,
    pub load_us: u64,
    pub unload_us: u64,
}

/// Route as an origin-destination travel-time matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractTransfer {
    pub route: String,
    pub stations: Vec<String>,
    pub travel_us: Vec<Vec<u64>>,
    pub home: HomeStation,
    pub agv: AgvFleet,
}

impl AbstractTransfer {
    pub fn station_index(&self, name: &str) -> Option<usize> {
        self.stations.iter().position(|s| s == name)
    }

    pub fn travel(&self, from: &str, to: &str) -> Option<u64> {
        Some(self.travel_us[self.station_index(from)?][self.station_index(to)?])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Transfer {
    Abstract(AbstractTransfer),
    Detailed(DetailedTransfer),
}

impl Transfer {
    pub fn mode(&self) -> TransferMode {
        match self {
            Transfer::Abstract(_) => TransferMode::Abstract,
            Transfer::Detailed(_) => TransferMode::Detailed,
        }
    }

    pub fn fleet_size(&self) -> usize {
        match self {
            Transfer::Abstract(a) => a.agv.count as usize,
            Transfer::Detailed(d) => d.agvs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutableScenario {
    /// Logical model name shared by both modes.
    pub model: String,
    pub scenario: String,
    /// The information model the scenario was compiled from.
    pub source_model: String,
    pub machining_lines: Vec<MachiningLine>,
    pub assembly_line: AssemblyLine,
    pub warehouse: Warehouse,
    pub transfer: Transfer,
    pub demand: BTreeMap<String, Demand>,
    /// Downstream component of each component with a transfer out.
    pub routes: BTreeMap<String, String>,
    pub horizon_us: u64,
    pub seed: u64,
}

impl ExecutableScenario {
    pub fn mode(&self) -> TransferMode {
        self.transfer.mode()
    }

    pub fn line(&self, name: &str) -> Option<&MachiningLine> {
        self.machining_lines.iter().find(|l| l.name == name)
    }

    /// A copy with `n` AGVs. Detailed fleets are cut back, or grown by
    /// copying the last vehicle.
    pub fn with_fleet(&self, n: usize) -> ExecutableScenario {
        let mut s = self.clone();
        match &mut s.transfer {
            Transfer::Abstract(a) => a.agv.count = n as u64,
            Transfer::Detailed(d) => {
                let template = d.agvs.last().cloned().expect("a detailed fleet has a vehicle");
                d.agvs.truncate(n);
                while d.agvs.len() < n {
                    let mut v = template.clone();
                    v.name = format!("{}_{}", template.name, d.agvs.len() + 1);
                    d.agvs.push(v);
                }
            }
        }
        s
    }
}

fn is_a(set: &SortSet, e: &EntitySpec, sort: &str) -> bool {
    set.contains(sort)
        && e.result_sort
            .iter()
            .any(|b| set.contains(b) && set.leq(b, sort).unwrap_or(false))
}

/// Typed attribute access with parameter errors that name the location.
pub(crate) struct Params<'a> {
    pub(crate) e: &'a EntitySpec,
}

impl<'a> Params<'a> {
    fn err(&self, attr: &str, reason: impl Into<String>) -> FactoryError {
        FactoryError::InvalidParameter {
            entity: self.e.name.clone(),
            attr: attr.to_string(),
            reason: reason.into(),
        }
    }

    fn value(&self, attr: &str) -> Result<&'a AttributeValue, FactoryError> {
        self.e
            .attribute(attr)
            .map(|a| &a.value)
            .ok_or_else(|| self.err(attr, "missing"))
    }

    fn number_in(&self, v: &AttributeValue, attr: &str, units: &[Unit]) -> Result<Number, FactoryError> {
        match v {
            AttributeValue::Data(DataValue::Number(n, u)) if units.contains(u) => Ok(*n),
            _ => Err(self.err(attr, format!("expected a number in {units:?}"))),
        }
    }

    pub(crate) fn has(&self, attr: &str) -> bool {
        self.e.attribute(attr).is_some()
    }

    fn duration_of(&self, v: &AttributeValue, attr: &str) -> Result<u64, FactoryError> {
        let n = self.number_in(v, attr, &[Unit::Second])?;
        n.seconds_to_micros().map_err(|e| self.err(attr, e.to_string()))
    }

    pub(crate) fn duration(&self, attr: &str) -> Result<u64, FactoryError> {
        self.duration_of(self.value(attr)?, attr)
    }

    pub(crate) fn positive_duration(&self, attr: &str) -> Result<u64, FactoryError> {
        match self.duration(attr)? {
            0 => Err(self.err(attr, "must be positive")),
            us => Ok(us),
        }
    }

    fn count_of(&self, v: &AttributeValue, attr: &str) -> Result<u64, FactoryError> {
        let n = self.number_in(v, attr, &[Unit::Count, Unit::None])?;
        n.to_count()
            .ok_or_else(|| self.err(attr, "expected a non-negative integer"))
    }

    pub(crate) fn count(&self, attr: &str) -> Result<u64, FactoryError> {
        self.count_of(self.value(attr)?, attr)
    }

    pub(crate) fn capacity(&self, attr: &str) -> Result<u64, FactoryError> {
        match self.count(attr)? {
            0 => Err(self.err(attr, "must be at least 1")),
            c => Ok(c),
        }
    }

    /// A strictly positive quantity in the given unit.
    pub(crate) fn positive(&self, attr: &str, unit: Unit) -> Result<Q, FactoryError> {
        let v = q(&self.number_in(self.value(attr)?, attr, &[unit])?);
        if v <= Q::from_integer(0) {
            return Err(self.err(attr, "must be positive"));
        }
        Ok(v)
    }

    pub(crate) fn text(&self, attr: &str) -> Result<String, FactoryError> {
        match self.value(attr)? {
            AttributeValue::Data(DataValue::Text(t)) => Ok(t.clone()),
            _ => Err(self.err(attr, "expected text")),
        }
    }

    pub(crate) fn reference(&self, attr: &str) -> Result<String, FactoryError> {
        match self.value(attr)? {
            AttributeValue::Ref(r) => Ok(r.clone()),
            _ => Err(self.err(attr, "expected an entity reference")),
        }
    }

    /// A reference or list of references (empty when absent).
    pub(crate) fn references(&self, attr: &str) -> Result<Vec<String>, FactoryError> {
        let Some(a) = self.e.attribute(attr) else {
            return Ok(Vec::new());
        };
        match &a.value {
            AttributeValue::Ref(r) => Ok(vec![r.clone()]),
            AttributeValue::List(items) => items
                .iter()
                .map(|i| match i {
                    AttributeValue::Ref(r) => Ok(r.clone()),
                    _ => Err(self.err(attr, "expected a list of entity references")),
                })
                .collect(),
            _ => Err(self.err(attr, "expected entity references")),
        }
    }

    fn counts(&self, attr: &str) -> Result<Vec<u64>, FactoryError> {
        match self.value(attr)? {
            AttributeValue::List(items) => items.iter().map(|i| self.count_of(i, attr)).collect(),
            v => Ok(vec![self.count_of(v, attr)?]),
        }
    }

    fn duration_matrix(&self, attr: &str) -> Result<Vec<Vec<u64>>, FactoryError> {
        let AttributeValue::List(rows) = self.value(attr)? else {
            return Err(self.err(attr, "expected a list of rows"));
        };
        rows.iter()
            .map(|row| match row {
                AttributeValue::List(cells) => cells.iter().map(|c| self.duration_of(c, attr)).collect(),
                _ => Err(self.err(attr, "expected a list of rows")),
            })
            .collect()
    }
}

fn single<'a>(model: &str, found: Vec<&'a EntitySpec>, what: &str) -> Result<&'a EntitySpec, FactoryError> {
    match found.as_slice() {
        [] => Err(FactoryError::MissingComponent {
            model: model.to_string(),
            component: what.to_string(),
        }),
        [one] => Ok(one),
        many => Err(FactoryError::Ambiguous {
            model: model.to_string(),
            component: what.to_string(),
            candidates: many.iter().map(|e| e.name.clone()).collect(),
        }),
    }
}

/// The vertical interface: checks `model` (well-formedness, then the
/// profile's commitments) and compiles it for `config.mode`.
pub fn instantiate(
    model: &InformationModel,
    profile: Option<&Ontology>,
    sorts: &SortSystem,
    config: &ScenarioConfig,
) -> Result<ExecutableScenario, FactoryError> {
    config
        .validate()
        .map_err(|e| FactoryError::InvalidScenario(e.to_string()))?;
    let not_wellformed = || {
        let wf = check_wellformed(model, sorts);
        FactoryError::NotWellFormed {
            model: model.name.clone(),
            diagnostics: wf.errors().cloned().collect(),
        }
    };
    let set = sorts.sort_set(&model.sort_set).map_err(|_| not_wellformed())?;
    let of = |sort: &str| -> Vec<&EntitySpec> { model.entities.values().filter(|e| is_a(set, e, sort)).collect() };
    let mname = &model.name;
    require_components(mname, config.mode, &of)?;
    if check_wellformed(model, sorts).has_errors() {
        return Err(not_wellformed());
    }
    if let Some(profile) = profile {
        let report = verify_model(model, profile, sorts).map_err(|e| FactoryError::InvalidScenario(e.to_string()))?;
        if !report.is_empty() {
            return Err(FactoryError::VerificationFailed(report));
        }
    }

    let mut machining_lines = Vec::new();
    for e in of("MachiningLine") {
        let p = Params { e };
        machining_lines.push(MachiningLine {
            name: e.name.clone(),
            cycle_us: p.positive_duration("cycle_time")?,
            input_buffer: p.capacity("input_buffer")?,
            output_buffer: p.capacity("output_buffer")?,
        });
    }
    if machining_lines.is_empty() {
        return Err(FactoryError::MissingComponent {
            model: mname.clone(),
            component: "machining line".into(),
        });
    }

    let asm = single(mname, of("AssemblyLine"), "assembly line")?;
    let wh = single(mname, of("Warehouse"), "warehouse")?;
    let components: BTreeSet<&str> = machining_lines
        .iter()
        .map(|l| l.name.as_str())
        .chain([asm.name.as_str(), wh.name.as_str()])
        .collect();

    let mut routes = BTreeMap::new();
    for r in &config.routes {
        for c in [&r.from, &r.to] {
            if !components.contains(c.as_str()) {
                return Err(FactoryError::UnknownComponent {
                    scenario: config.name.clone(),
                    component: c.clone(),
                });
            }
        }
        if r.from == wh.name || r.from == r.to {
            return Err(FactoryError::InvalidScenario(format!(
                "route {} -> {} is not allowed",
                r.from, r.to
            )));
        }
        if routes.insert(r.from.clone(), r.to.clone()).is_some() {
            return Err(FactoryError::InvalidScenario(format!(
                "`{}` has two outgoing routes",
                r.from
            )));
        }
    }
    for line in config.demand.keys() {
        if !machining_lines.iter().any(|l| &l.name == line) && *line != wh.name {
            return Err(FactoryError::UnknownComponent {
                scenario: config.name.clone(),
                component: line.clone(),
            });
        }
    }

    let p = Params { e: asm };
    let sources = p.references("inputs")?;
    let inputs: BTreeMap<String, u64> = if sources.is_empty() {
        routes
            .iter()
            .filter(|(_, to)| **to == asm.name)
            .map(|(from, _)| (from.clone(), 1))
            .collect()
    } else {
        let counts = if p.has("input_counts") {
            p.counts("input_counts")?
        } else {
            vec![1; sources.len()]
        };
        if counts.len() != sources.len() || counts.contains(&0) {
            return Err(FactoryError::InvalidParameter {
                entity: asm.name.clone(),
                attr: "input_counts".into(),
                reason: "needs one positive count per input".into(),
            });
        }
        sources.into_iter().zip(counts).collect()
    };
    let assembly_line = AssemblyLine {
        name: asm.name.clone(),
        assembly_us: p.positive_duration("assembly_time")?,
        inputs,
        output_buffer: p.capacity("output_buffer")?,
    };

    let p = Params { e: wh };
    let warehouse = Warehouse {
        name: wh.name.clone(),
        store_us: p.positive_duration("store_time")?,
        retrieve_us: p.positive_duration("retrieve_time")?,
        capacity: p.capacity("capacity")?,
    };

    let transfer = match config.mode {
        TransferMode::Abstract => Transfer::Abstract(abstract_transfer(mname, set, model, &of)?),
        TransferMode::Detailed => Transfer::Detailed(detailed_transfer(mname, model, &of)?),
    };

    let scenario = ExecutableScenario {
        model: config.model.clone(),
        scenario: config.name.clone(),
        source_model: model.name.clone(),
        machining_lines,
        assembly_line,
        warehouse,
        transfer,
        demand: config.demand.clone(),
        routes,
        horizon_us: config.horizon_us,
        seed: config.seed,
    };
    check_reachability(&scenario)?;
    Ok(scenario)
}

/// Checks that `model` has every component `mode` needs.
pub(crate) fn presence(model: &InformationModel, sorts: &SortSystem, mode: TransferMode) -> Result<(), FactoryError> {
    let Ok(set) = sorts.sort_set(&model.sort_set) else {
        return Ok(());
    };
    let of = |sort: &str| -> Vec<&EntitySpec> { model.entities.values().filter(|e| is_a(set, e, sort)).collect() };
    require_components(&model.name, mode, &of)
}

/// Presence of every component the plant needs, checked before anything
/// else so that an omission is reported as such.
fn require_components<'m>(
    mname: &str,
    mode: TransferMode,
    of: &dyn Fn(&str) -> Vec<&'m EntitySpec>,
) -> Result<(), FactoryError> {
    let missing = |component: &str| FactoryError::MissingComponent {
        model: mname.to_string(),
        component: component.to_string(),
    };
    if of("MachiningLine").is_empty() {
        return Err(missing("machining line"));
    }
    single(mname, of("AssemblyLine"), "assembly line")?;
    single(mname, of("Warehouse"), "warehouse")?;
    let has_detailed = !of("RouteData").is_empty() || !of("Track").is_empty();
    let has_abstract = !of("Route").is_empty();
    let mismatch = |reason: &str| FactoryError::ModeMismatch {
        model: mname.to_string(),
        mode,
        reason: reason.to_string(),
    };
    match mode {
        TransferMode::Abstract if !has_abstract && has_detailed => Err(mismatch(
            "the model describes a detailed transfer system (no Route entity)",
        )),
        TransferMode::Abstract if !has_abstract => Err(missing("route")),
        TransferMode::Detailed if !has_detailed && has_abstract => Err(mismatch(
            "the model describes an abstract transfer system (no route data)",
        )),
        TransferMode::Detailed if !has_detailed => Err(missing("route data")),
        _ => {
            if of("AGV").is_empty() {
                return Err(missing("AGV"));
            }
            Ok(())
        }
    }
}

fn abstract_transfer<'m>(
    mname: &str,
    set: &SortSet,
    model: &'m InformationModel,
    of: &dyn Fn(&str) -> Vec<&'m EntitySpec>,
) -> Result<AbstractTransfer, FactoryError> {
    let route = single(mname, of("Route"), "route")?;
    let fleet = single(mname, of("AGV"), "AGV fleet")?;
    let p = Params { e: fleet };
    if !p.has("count") {
        return Err(FactoryError::ModeMismatch {
            model: mname.to_string(),
            mode: TransferMode::Abstract,
            reason: format!("AGV `{}` has no fleet count", fleet.name),
        });
    }
    let agv = AgvFleet {
        count: p.count("count")?,
        speed: p.positive("speed", Unit::MeterPerSecond)?,
        load_us: p.duration("load_time")?,
        unload_us: p.duration("unload_time")?,
    };
    let home_name = p.reference("home")?;
    let home_entity = model
        .entities
        .get(&home_name)
        .filter(|e| is_a(set, e, "HomeStation"))
        .ok_or_else(|| FactoryError::MissingComponent {
            model: mname.to_string(),
            component: format!("home station `{home_name}`"),
        })?;
    let home = home_station(home_entity)?;

    let rp = Params { e: route };
    let stations = rp.references("stations")?;
    let travel_us = rp.duration_matrix("travel_times")?;
    let bad = |reason: &str| FactoryError::InvalidParameter {
        entity: route.name.clone(),
        attr: "travel_times".into(),
        reason: reason.to_string(),
    };
    if travel_us.len() != stations.len() || travel_us.iter().any(|r| r.len() != stations.len()) {
        return Err(bad("matrix must be square over the stations"));
    }
    if (0..stations.len()).any(|i| travel_us[i][i] != 0) {
        return Err(bad("diagonal must be zero"));
    }
    if !stations.contains(&home.name) {
        return Err(FactoryError::MissingComponent {
            model: mname.to_string(),
            component: format!("route station for home `{}`", home.name),
        });
    }
    Ok(AbstractTransfer {
        route: route.name.clone(),
        stations,
        travel_us,
        home,
        agv,
    })
}

fn home_station(e: &EntitySpec) -> Result<HomeStation, FactoryError> {
    let p = Params { e };
    let policy = p.text("policy")?;
    if policy != "wait-at-home" {
        return Err(FactoryError::InvalidParameter {
            entity: e.name.clone(),
            attr: "policy".into(),
            reason: format!("unsupported dispatch policy `{policy}`"),
        });
    }
    Ok(HomeStation {
        name: e.name.clone(),
        policy,
    })
}

fn detailed_transfer<'m>(
    mname: &str,
    model: &'m InformationModel,
    of: &dyn Fn(&str) -> Vec<&'m EntitySpec>,
) -> Result<DetailedTransfer, FactoryError> {
    let mut nodes = BTreeMap::new();
    for e in of("StopStation") {
        let p = Params { e };
        let dwell_us = if p.has("dwell") { p.duration("dwell")? } else { 0 };
        nodes.insert(
            e.name.clone(),
            Node {
                name: e.name.clone(),
                kind: NodeKind::Stop { dwell_us },
                serves: p.references("serves")?,
            },
        );
    }
    for e in of("Crossing") {
        let p = Params { e };
        nodes.insert(
            e.name.clone(),
            Node {
                name: e.name.clone(),
                kind: NodeKind::Crossing {
                    length: p.positive("length", Unit::Meter)?,
                },
                serves: Vec::new(),
            },
        );
    }
    let node_ref = |p: &Params<'_>, attr: &str| -> Result<String, FactoryError> {
        let r = p.reference(attr)?;
        if nodes.contains_key(&r) {
            Ok(r)
        } else {
            Err(FactoryError::InvalidParameter {
                entity: p.e.name.clone(),
                attr: attr.to_string(),
                reason: format!("`{r}` is not a stop station or crossing"),
            })
        }
    };

    let mut edges = Vec::new();
    for e in of("Track") {
        let p = Params { e };
        let kind = if p.has("speed_factor") {
            let factor = p.positive("speed_factor", Unit::None)?;
            if factor > Q::from_integer(1) {
                return Err(FactoryError::InvalidParameter {
                    entity: e.name.clone(),
                    attr: "speed_factor".into(),
                    reason: "must lie in (0, 1]".into(),
                });
            }
            EdgeKind::Curve { factor }
        } else {
            EdgeKind::Straight {
                limit: if p.has("speed_limit") {
                    Some(p.positive("speed_limit", Unit::MeterPerSecond)?)
                } else {
                    None
                },
            }
        };
        edges.push(Edge {
            name: e.name.clone(),
            a: node_ref(&p, "from")?,
            b: node_ref(&p, "to")?,
            length: p.positive("length", Unit::Meter)?,
            kind,
        });
    }

    let mut paths = BTreeMap::new();
    for e in of("RouteData") {
        let p = Params { e };
        let seq = p.references("nodes")?;
        for n in &seq {
            if !nodes.contains_key(n) {
                return Err(FactoryError::InvalidParameter {
                    entity: e.name.clone(),
                    attr: "nodes".into(),
                    reason: format!("`{n}` is not a stop station or crossing"),
                });
            }
        }
        paths.insert(e.name.clone(), seq);
    }

    let mut agvs = Vec::new();
    let mut home = None;
    for e in of("AGV") {
        let p = Params { e };
        if p.has("count") {
            return Err(FactoryError::ModeMismatch {
                model: mname.to_string(),
                mode: TransferMode::Detailed,
                reason: format!("AGV `{}` is a fleet count, not a vehicle", e.name),
            });
        }
        let home_node = node_ref(&p, "home")?;
        if home.is_none() {
            let h = &model.entities[&home_node];
            home = Some(home_station(h)?);
        }
        agvs.push(crate::layout::Vehicle {
            name: e.name.clone(),
            speed: p.positive("speed", Unit::MeterPerSecond)?,
            home: home_node,
            load_us: p.duration("load_time")?,
            unload_us: p.duration("unload_time")?,
        });
    }
    let home = home.ok_or_else(|| FactoryError::MissingComponent {
        model: mname.to_string(),
        component: "AGV".into(),
    })?;
    let transfer = DetailedTransfer {
        nodes,
        edges,
        paths,
        home,
        agvs,
    };
    transfer.validate()?;
    Ok(transfer)
}

/// Every transfer the routing table implies must be drivable.
fn check_reachability(s: &ExecutableScenario) -> Result<(), FactoryError> {
    let missing = |component: String| FactoryError::MissingComponent {
        model: s.source_model.clone(),
        component,
    };
    for (from, to) in &s.routes {
        match &s.transfer {
            Transfer::Abstract(a) => {
                for c in [from, to] {
                    if a.station_index(c).is_none() {
                        return Err(missing(format!("route station for `{c}`")));
                    }
                }
            }
            Transfer::Detailed(d) => {
                let o = d
                    .location_of(from)
                    .ok_or_else(|| missing(format!("stop station serving `{from}`")))?;
                let t = d
                    .location_of(to)
                    .ok_or_else(|| missing(format!("stop station serving `{to}`")))?;
                for v in &d.agvs {
                    for (a, b) in [(&v.home, o), (o, t), (t, &v.home)] {
                        if d.plan(v, a, b).is_none() {
                            return Err(missing(format!("route data from `{a}` to `{b}`")));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
