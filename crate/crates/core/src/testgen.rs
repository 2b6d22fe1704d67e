//! Random model generators and reference oracles for property tests.
//!
//! Only built with the `testgen` feature. Generators are seeded builders;
//! proptest supplies the seeds, so failures reproduce from the printed seed.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use crate::abstraction::{
    AttrLink, AttrPath, EntityExpansion, Expansion, MapDirection, ModeMapping, SortMap, SortMapEntry,
};
use crate::dsl::Workspace;
use crate::entity::{
    Attribute, AttributeValue, DataValue, EntityKind, EntitySpec, Functor, FunctorFunction, FunctorMode,
    InformationModel, Rule,
};
use crate::expr::{CmpOp, Expr};
use crate::lattice::FormalContext;
use crate::number::{Number, Unit};
use crate::ontology::{AttrSelector, Commitment, Ontology, Requirement};
use crate::scenario::{Demand, RouteEntry, ScenarioConfig, TransferMode};
use crate::sorts::{SortAssignment, SortSet, SortSystem};

pub struct Gen {
    rng: StdRng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("non-empty choice")
    }

    pub fn u64(&mut self) -> u64 {
        self.rng.random()
    }
}

/// Sort names plus a sequence of subsort declarations to attempt, some of
/// which close cycles.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub sorts: Vec<String>,
    pub attempts: Vec<(usize, usize)>,
}

pub fn hierarchy() -> impl Strategy<Value = Hierarchy> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |attempts| Hierarchy {
            sorts: (0..n).map(|i| format!("S{i}")).collect(),
            attempts,
        })
    })
}

/// A sort set whose edges only go from lower to higher index, so it is
/// acyclic by construction.
pub fn dag_sort_set(g: &mut Gen, name: &str, prefix: &str, n: usize, density: f64) -> SortSet {
    let mut set = SortSet::new(name);
    for i in 0..n {
        set.declare_sort(&format!("{prefix}{i}")).unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if g.chance(density) {
                set.declare_subsort(&format!("{prefix}{i}"), &format!("{prefix}{j}"))
                    .unwrap();
            }
        }
    }
    set
}

fn downset(set: &SortSet, sort: &str) -> Vec<String> {
    set.sorts()
        .filter(|t| set.leq(t, sort).unwrap_or(false))
        .map(String::from)
        .collect()
}

fn number(g: &mut Gen) -> Number {
    let m = g.rng.random_range(-1_000_000_000i64..1_000_000_000);
    Number::new(m, g.range(0, 6) as u32).unwrap()
}

const UNITS: [Unit; 5] = [Unit::None, Unit::Meter, Unit::MeterPerSecond, Unit::Second, Unit::Count];
const TEXT_CHARS: [char; 12] = ['a', 'Z', '0', ' ', '"', '\\', '\n', '\t', 'é', '_', '-', '/'];

fn text(g: &mut Gen) -> String {
    let n = g.range(0, 8);
    (0..n).map(|_| *g.pick(&TEXT_CHARS)).collect()
}

fn data(g: &mut Gen) -> DataValue {
    match g.below(3) {
        0 => DataValue::Number(number(g), *g.pick(&UNITS)),
        1 => DataValue::Text(text(g)),
        _ => DataValue::Bool(g.chance(0.5)),
    }
}

fn value(g: &mut Gen, entities: &[String], depth: usize) -> AttributeValue {
    match g.below(if depth == 0 { 4 } else { 5 }) {
        0 if !entities.is_empty() => AttributeValue::Ref(g.pick(entities).clone()),
        1 => AttributeValue::External(format!("Ext{}", g.below(5))),
        4 => {
            let n = g.range(0, 3);
            AttributeValue::List((0..n).map(|_| value(g, entities, depth - 1)).collect())
        }
        _ => AttributeValue::Data(data(g)),
    }
}

/// Expressions over the given attribute names and sorts.
pub fn expr(g: &mut Gen, attrs: &[String], sorts: &[String], depth: usize) -> Expr {
    let leaf = |g: &mut Gen| -> Expr {
        match g.below(4) {
            0 if !attrs.is_empty() => Expr::Attr(g.pick(attrs).clone()),
            1 if !attrs.is_empty() => Expr::Has(g.pick(attrs).clone()),
            2 if !attrs.is_empty() && !sorts.is_empty() => Expr::SortAtMost {
                attr: g.pick(attrs).clone(),
                sort: g.pick(sorts).clone(),
            },
            _ => Expr::Literal(data(g)),
        }
    };
    if depth == 0 {
        return leaf(g);
    }
    match g.below(6) {
        0 => Expr::and(expr(g, attrs, sorts, depth - 1), expr(g, attrs, sorts, depth - 1)),
        1 => Expr::or(expr(g, attrs, sorts, depth - 1), expr(g, attrs, sorts, depth - 1)),
        2 => Expr::not(expr(g, attrs, sorts, depth - 1)),
        3 => {
            let op = *g.pick(&[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
            Expr::cmp(op, expr(g, attrs, sorts, depth - 1), expr(g, attrs, sorts, depth - 1))
        }
        _ => leaf(g),
    }
}

const MODES: [FunctorMode; 4] = [
    FunctorMode::Aggregate,
    FunctorMode::Compose,
    FunctorMode::Derive,
    FunctorMode::Identity,
];
const KINDS: [EntityKind; 4] = [
    EntityKind::Object,
    EntityKind::Operation,
    EntityKind::Situation,
    EntityKind::Process,
];

/// A random entity. Attribute names are `x_<i>`, rule ids unique.
pub fn entity(g: &mut Gen, name: &str, sorts: &[String], entities: &[String]) -> EntitySpec {
    let mut e = EntitySpec::new(name, &[]);
    e.kind = *g.pick(&KINDS);
    for _ in 0..g.range(1, 2) {
        let s = g.pick(sorts).clone();
        if !e.result_sort.contains(&s) {
            e.result_sort.push(s);
        }
    }
    for i in 0..g.range(0, 5) {
        e.attributes.push(Attribute {
            name: format!("x_{i}"),
            sort: g.pick(sorts).clone(),
            value: value(g, entities, 2),
        });
    }
    let names: Vec<String> = e.attributes.iter().map(|a| a.name.clone()).collect();
    if g.chance(0.5) {
        let mut functions = Vec::new();
        for k in 0..g.range(0, 2) {
            let domain: Vec<String> = names.iter().filter(|_| g.chance(0.5)).cloned().collect();
            let body = g.chance(0.5).then(|| expr(g, &domain, sorts, 2));
            functions.push(FunctorFunction {
                name: format!("f{k}"),
                domain,
                codomain: g.pick(sorts).clone(),
                body,
            });
        }
        e.functor = Some(Functor {
            mode: *g.pick(&MODES),
            functions,
        });
    }
    for i in 0..g.range(0, 3) {
        e.rules.push(Rule {
            id: if g.chance(0.5) {
                format!("r{}", i + 1)
            } else {
                format!("rule_{i}")
            },
            expr: expr(g, &names, sorts, 3),
        });
    }
    e
}

/// An entity, an abstracting map and a refining map with an expansion over
/// one generated sort set.
#[derive(Debug, Clone)]
pub struct AbstractionCase {
    pub sorts: SortSystem,
    pub entity: EntitySpec,
    pub up: SortMap,
    pub down: SortMap,
}

impl AbstractionCase {
    /// Expansion that refines each attribute of `abstracted` into zero or
    /// more attributes at sorts below it.
    pub fn expansion_for(&self, abstracted: &EntitySpec, seed: u64) -> EntityExpansion {
        let mut g = Gen::new(seed);
        let set = self.sorts.sort_set("g").unwrap();
        let mut exp = EntityExpansion::new();
        for a in &abstracted.attributes {
            if !g.chance(0.5) {
                continue;
            }
            let below = downset(set, &a.sort);
            if below.is_empty() {
                continue;
            }
            let produced = (0..g.range(0, 3))
                .map(|k| Attribute {
                    name: format!("{}_{k}", a.name),
                    sort: g.pick(&below).clone(),
                    value: a.value.clone(),
                })
                .collect();
            exp.insert(a.name.clone(), produced);
        }
        exp
    }
}

pub fn abstraction_case() -> impl Strategy<Value = AbstractionCase> {
    any::<u64>().prop_map(|seed| {
        let mut g = Gen::new(seed);
        let n = g.range(2, 10);
        let set = dag_sort_set(&mut g, "g", "T", n, 0.3);
        let sort_names: Vec<String> = set.sorts().map(String::from).collect();
        let mut up = SortMap::new("up", "g", MapDirection::Abstracting);
        let mut down = SortMap::new("down", "g", MapDirection::Refining);
        for s in &sort_names {
            if g.chance(0.5) {
                let above: Vec<String> = set.upset(s).into_iter().collect();
                let target = g.pick(&above).clone();
                let entry = if g.chance(0.5) {
                    let attr_name = g.chance(0.5).then(|| format!("g_{}", target.to_lowercase()));
                    SortMapEntry {
                        attr_name,
                        mode: Some(*g.pick(&[FunctorMode::Aggregate, FunctorMode::Compose])),
                        target,
                    }
                } else {
                    SortMapEntry {
                        target,
                        attr_name: None,
                        mode: g
                            .chance(0.3)
                            .then(|| *g.pick(&[FunctorMode::Derive, FunctorMode::Identity])),
                    }
                };
                up.entries.insert(s.clone(), entry);
            }
            if g.chance(0.3) {
                let below = downset(&set, s);
                down.entries.insert(s.clone(), SortMapEntry::to(g.pick(&below)));
            }
        }
        let entity = entity(&mut g, "E", &sort_names, &["Other".to_string()]);
        let mut sorts = SortSystem::new();
        sorts.insert_sort_set(set).unwrap();
        AbstractionCase {
            sorts,
            entity,
            up,
            down,
        }
    })
}

/// A model over sort set `mfg`, with a second sort set `view` used for
/// projection. Entity result sorts and attributes mix both sets.
pub fn view_case() -> impl Strategy<Value = (SortSystem, InformationModel)> {
    any::<u64>().prop_map(|seed| {
        let mut g = Gen::new(seed);
        let mut sorts = SortSystem::new();
        let n_main = g.range(1, 8);
        let n_view = g.range(1, 5);
        sorts
            .insert_sort_set(dag_sort_set(&mut g, "mfg", "M", n_main, 0.3))
            .unwrap();
        sorts
            .insert_sort_set(dag_sort_set(&mut g, "view", "V", n_view, 0.3))
            .unwrap();
        let all: Vec<String> = sorts
            .sort_sets()
            .flat_map(|s| s.sorts().map(String::from).collect::<Vec<_>>())
            .collect();
        let names: Vec<String> = (0..g.range(0, 8)).map(|i| format!("E{i}")).collect();
        let mut model = InformationModel::new("m", "mfg");
        for name in &names {
            model.define_entity(entity(&mut g, name, &all, &names)).unwrap();
        }
        (sorts, model)
    })
}

/// Incidence of at most 8 objects by 8 attribute sorts.
pub fn incidence() -> impl Strategy<Value = Vec<BTreeSet<usize>>> {
    (0usize..=8, 1usize..=8).prop_flat_map(|(objects, attrs)| {
        proptest::collection::vec(proptest::collection::btree_set(0..attrs, 0..=attrs), objects)
    })
}

/// A well-formed model realizing the incidence: entity `O<g>` declares one
/// attribute at sort `A<m>` for each incident `m`.
pub fn lattice_model(incidence: &[BTreeSet<usize>]) -> (SortSystem, InformationModel) {
    let mut set = SortSet::new("ctx");
    set.declare_sort("Obj").unwrap();
    for m in 0..8 {
        set.declare_sort(&format!("A{m}")).unwrap();
    }
    let mut sorts = SortSystem::new();
    sorts.insert_sort_set(set).unwrap();
    let mut model = InformationModel::new("ctx", "ctx");
    for (gi, attrs) in incidence.iter().enumerate() {
        let mut e = EntitySpec::new(&format!("O{gi}"), &["Obj"]);
        for m in attrs {
            e.attributes.push(Attribute::new(
                &format!("a{m}"),
                &format!("A{m}"),
                AttributeValue::number(Number::from_int(*m as i64), Unit::None),
            ));
        }
        model.define_entity(e).unwrap();
    }
    (sorts, model)
}

/// Concepts by exhaustive enumeration of object subsets, and the cover
/// relation by pairwise comparison. Returned as (extent, intent) name sets
/// and (sub, super) pairs of those.
pub type OracleConcept = (BTreeSet<String>, BTreeSet<String>);

pub fn lattice_oracle(ctx: &FormalContext) -> (BTreeSet<OracleConcept>, BTreeSet<(OracleConcept, OracleConcept)>) {
    let n = ctx.objects.len();
    let m = ctx.attributes.len();
    let common_attrs = |objs: &BTreeSet<usize>| -> BTreeSet<usize> {
        (0..m)
            .filter(|a| objs.iter().all(|o| ctx.incidence[*o].contains(a)))
            .collect()
    };
    let holders = |attrs: &BTreeSet<usize>| -> BTreeSet<usize> {
        (0..n)
            .filter(|o| attrs.iter().all(|a| ctx.incidence[*o].contains(a)))
            .collect()
    };
    let mut raw: BTreeSet<(BTreeSet<usize>, BTreeSet<usize>)> = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let objs: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let intent = common_attrs(&objs);
        let extent = holders(&intent);
        raw.insert((extent, intent));
    }
    let named = |(e, i): &(BTreeSet<usize>, BTreeSet<usize>)| -> OracleConcept {
        (
            e.iter().map(|o| ctx.objects[*o].clone()).collect(),
            i.iter().map(|a| ctx.attributes[*a].clone()).collect(),
        )
    };
    let list: Vec<_> = raw.iter().collect();
    let lt = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| a != b && a.is_subset(b);
    let mut edges = BTreeSet::new();
    for x in &list {
        for y in &list {
            if lt(&x.0, &y.0) && !list.iter().any(|z| lt(&x.0, &z.0) && lt(&z.0, &y.0)) {
                edges.insert((named(x), named(y)));
            }
        }
    }
    (raw.iter().map(named).collect(), edges)
}

const SORT_SET_NAMES: [&str; 3] = ["mfg", "cost_view", "layout"];

fn workspace_from(g: &mut Gen) -> Workspace {
    let mut ws = Workspace::default();
    let n_sets = g.range(1, 3);
    let mut set_sorts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (k, name) in SORT_SET_NAMES.iter().take(n_sets).enumerate() {
        let n = g.range(1, 6);
        let set = dag_sort_set(g, name, &format!("S{k}x"), n, 0.35);
        set_sorts.insert(name.to_string(), set.sorts().map(String::from).collect());
        ws.sorts.insert_sort_set(set).unwrap();
    }
    let set_names: Vec<String> = set_sorts.keys().cloned().collect();
    let all_sorts: Vec<String> = set_sorts.values().flatten().cloned().collect();
    for i in 0..set_names.len() {
        for j in i + 1..set_names.len() {
            if g.chance(0.3) {
                ws.sorts.rank_sort_sets(&set_names[i], &set_names[j]).unwrap();
            }
        }
    }

    for s in 0..g.range(0, 3) {
        let mut assignments = Vec::new();
        for _ in 0..g.range(1, 2) {
            let set = g.pick(&set_names).clone();
            let sort = g.pick(&set_sorts[&set]).clone();
            assignments.push(SortAssignment::new(set, sort));
        }
        ws.alphabet
            .assign_symbol_sorts(&ws.sorts, &format!("Sym{s}"), assignments)
            .unwrap();
    }

    for o in 0..g.range(0, 2) {
        let set = g.pick(&set_names).clone();
        let local = set_sorts[&set].clone();
        let mut ont = Ontology::new(&format!("ont{o}"), &set);
        if g.chance(0.5) {
            ont.provenance = text(g);
        }
        for c in 0..g.range(0, 3) {
            let mut com = Commitment::new(&format!("c{c}"), g.pick(&local));
            if g.chance(0.5) {
                com.rationale = text(g);
            }
            for r in 0..g.range(0, 3) {
                com.requirements.push(Requirement {
                    attr: if g.chance(0.2) {
                        AttrSelector::Any
                    } else {
                        AttrSelector::Named(format!("x_{r}"))
                    },
                    sort: g.pick(&local).clone(),
                    required: g.chance(0.7),
                });
            }
            let names: Vec<String> = (0..3).map(|i| format!("x_{i}")).collect();
            for r in 0..g.range(0, 2) {
                com.rules.push(Rule {
                    id: format!("cr{r}"),
                    expr: expr(g, &names, &local, 2),
                });
            }
            ont.add_commitment(com).unwrap();
        }
        ws.ontologies.insert(ont.name.clone(), ont);
    }

    for m in 0..g.range(0, 3) {
        let mut model = InformationModel::new(&format!("model{m}"), g.pick(&set_names));
        let names: Vec<String> = (0..g.range(0, 5)).map(|i| format!("Ent{i}")).collect();
        for name in &names {
            model.define_entity(entity(g, name, &all_sorts, &names)).unwrap();
        }
        ws.models.insert(model.name.clone(), model);
    }

    for k in 0..g.range(0, 2) {
        let set_name = g.pick(&set_names).clone();
        let set = ws.sorts.sort_set(&set_name).unwrap();
        let direction = if g.chance(0.5) {
            MapDirection::Abstracting
        } else {
            MapDirection::Refining
        };
        let mut map = SortMap::new(&format!("map{k}"), &set_name, direction);
        for s in set.sorts() {
            if !g.chance(0.5) {
                continue;
            }
            let candidates: Vec<String> = match direction {
                MapDirection::Abstracting => set.upset(s).into_iter().collect(),
                MapDirection::Refining => downset(set, s),
            };
            map.entries.insert(
                s.to_string(),
                SortMapEntry {
                    target: g.pick(&candidates).clone(),
                    attr_name: g.chance(0.3).then(|| format!("y_{}", g.below(3))),
                    mode: g.chance(0.5).then(|| *g.pick(&MODES)),
                },
            );
        }
        ws.sort_maps.insert(map.name.clone(), map);
    }

    for k in 0..g.range(0, 2) {
        let mut exp = Expansion {
            name: format!("exp{k}"),
            entries: BTreeMap::new(),
        };
        for e in 0..g.range(0, 2) {
            let mut per_attr = EntityExpansion::new();
            for a in 0..g.range(1, 2) {
                let produced = (0..g.range(0, 2))
                    .map(|p| Attribute {
                        name: format!("z_{p}"),
                        sort: g.pick(&all_sorts).clone(),
                        value: value(g, &[], 1),
                    })
                    .collect();
                per_attr.insert(format!("x_{a}"), produced);
            }
            exp.entries.insert(format!("Ent{e}"), per_attr);
        }
        ws.expansions.insert(exp.name.clone(), exp);
    }

    for k in 0..g.range(0, 2) {
        let mut mm = ModeMapping {
            name: format!("mm{k}"),
            entries: BTreeMap::new(),
        };
        for e in 0..g.range(0, 3) {
            let links = (0..g.range(0, 2))
                .map(|l| AttrLink {
                    abstract_attr: format!("x_{l}"),
                    detailed: (0..g.range(1, 3))
                        .map(|d| AttrPath::new(&format!("D{d}"), &format!("x_{}", g.below(3))))
                        .collect(),
                    mode: *g.pick(&MODES),
                })
                .collect();
            mm.entries.insert(format!("Ent{e}"), links);
        }
        ws.mode_mappings.insert(mm.name.clone(), mm);
    }

    let model_names: Vec<String> = ws.models.keys().cloned().collect();
    let ont_names: Vec<String> = ws.ontologies.keys().cloned().collect();
    for k in 0..g.range(0, 2) {
        let mut s = ScenarioConfig::new(&format!("scen{k}"), "pilot");
        if !model_names.is_empty() {
            s.abstract_model = g.chance(0.5).then(|| g.pick(&model_names).clone());
            s.detailed_model = g.chance(0.5).then(|| g.pick(&model_names).clone());
        }
        if !ont_names.is_empty() && g.chance(0.5) {
            s.profile = Some(g.pick(&ont_names).clone());
        }
        s.mode = if g.chance(0.5) {
            TransferMode::Abstract
        } else {
            TransferMode::Detailed
        };
        s.horizon_us = g.range(1, 100_000) as u64 * *g.pick(&[1, 1000, 1_000_000, 60_000_000]);
        s.seed = g.u64();
        for l in 0..g.range(0, 3) {
            let d = match g.below(3) {
                0 => Demand::Every {
                    interval_us: g.range(1, 1000) as u64 * 1_000_000,
                    offset_us: g.range(0, 3) as u64 * 500_000,
                },
                1 => Demand::Batch {
                    count: g.range(0, 500) as u64,
                    at_us: g.range(0, 10) as u64 * 1_000,
                },
                _ => Demand::Exponential {
                    mean_us: g.range(1, 1000) as u64 * 1_000,
                    offset_us: 0,
                },
            };
            s.demand.insert(format!("ML{l}"), d);
        }
        for _ in 0..g.range(0, 2) {
            s.routes.push(RouteEntry {
                from: format!("ML{}", g.below(3)),
                to: g.pick(&["Assembly".to_string(), "Warehouse".to_string()]).clone(),
            });
        }
        ws.scenarios.insert(s.name.clone(), s);
    }
    ws
}

pub fn workspace() -> impl Strategy<Value = Workspace> {
    any::<u64>().prop_map(|seed| workspace_from(&mut Gen::new(seed)))
}

/// Printed workspace text with one random edit applied (deletion, insertion
/// of a stray character, or truncation).
pub fn mutated_text() -> impl Strategy<Value = String> {
    any::<u64>().prop_map(|seed| {
        let mut g = Gen::new(seed);
        let ws = workspace_from(&mut g);
        let mut chars: Vec<char> = crate::dsl::print(&ws).chars().collect();
        if chars.is_empty() {
            chars = "sortset a {".chars().collect();
        }
        let at = g.below(chars.len());
        match g.below(3) {
            0 => {
                let len = g.range(1, 8).min(chars.len() - at);
                chars.drain(at..at + len);
            }
            1 => chars.insert(at, *g.pick(&['{', '}', ';', '@', '"', ':', '<', 'x', '-', '9'])),
            _ => chars.truncate(at),
        }
        chars.into_iter().collect()
    })
}

/// Subsort laws on a hierarchy built from `h`, checked against an
/// independent reachability closure.
pub fn check_sort_laws(h: &Hierarchy) -> Result<(), String> {
    let n = h.sorts.len();
    let mut set = SortSet::new("a");
    for s in &h.sorts {
        set.declare_sort(s).map_err(|e| e.to_string())?;
    }
    // reach[i][j]: i <= j, maintained by Warshall after each accepted edge.
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(i, j) in &h.attempts {
        let cyclic = reach[j][i];
        let res = set.declare_subsort(&h.sorts[i], &h.sorts[j]);
        match (cyclic, res) {
            (true, Ok(())) => return Err(format!("cycle-inducing {i} < {j} accepted")),
            (false, Err(e)) => return Err(format!("acyclic {i} < {j} rejected: {e}")),
            (false, Ok(())) => {
                reach[i][j] = true;
                for k in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            if reach[a][k] && reach[k][b] {
                                reach[a][b] = true;
                            }
                        }
                    }
                }
            }
            (true, Err(_)) => {}
        }
    }
    let leq = |a: usize, b: usize| set.leq(&h.sorts[a], &h.sorts[b]).unwrap();
    for (a, row) in reach.iter().enumerate() {
        if !leq(a, a) {
            return Err(format!("not reflexive at {a}"));
        }
        for (b, &reachable) in row.iter().enumerate() {
            if leq(a, b) != reachable {
                return Err(format!("leq({a},{b}) disagrees with closure"));
            }
            if a != b && leq(a, b) && leq(b, a) {
                return Err(format!("antisymmetry fails for {a},{b}"));
            }
            for c in 0..n {
                if leq(a, b) && leq(b, c) && !leq(a, c) {
                    return Err(format!("transitivity fails for {a},{b},{c}"));
                }
            }
        }
    }

    // A second set with a mirrored hierarchy under other names; no query
    // across the two may ever hold.
    let mut sys = SortSystem::new();
    let mut other = SortSet::new("b");
    for s in &h.sorts {
        other.declare_sort(&format!("B{s}")).unwrap();
    }
    for (sub, sup) in set.subsort_edges() {
        other.declare_subsort(&format!("B{sub}"), &format!("B{sup}")).unwrap();
    }
    sys.insert_sort_set(set.clone()).unwrap();
    sys.insert_sort_set(other).unwrap();
    for x in &h.sorts {
        for y in &h.sorts {
            let by = format!("B{y}");
            for (set_name, t, t1) in [("a", x.as_str(), by.as_str()), ("b", by.as_str(), x.as_str())] {
                if sys.is_subsort(set_name, t, t1).unwrap_or(false) {
                    return Err(format!("cross-set query {t} <= {t1} in {set_name} held"));
                }
            }
            if sys.leq_any(x, &by) || sys.leq_any(&by, x) {
                return Err(format!("leq_any across sets held for {x}, {by}"));
            }
        }
    }
    Ok(())
}

/// Abstraction soundness, refinement duality and identity fixed points.
pub fn check_abstraction(case: &AbstractionCase, seed: u64) -> Result<(), String> {
    use crate::abstraction::{abstract_entity, check_abstraction_pair, check_refinement_pair, refine_entity};
    let sorts = &case.sorts;
    let abs = abstract_entity(&case.entity, &case.up, sorts).map_err(|e| format!("abstract: {e}"))?;
    let report = check_abstraction_pair(&case.entity, &abs.value, sorts);
    if !report.passes() {
        return Err(format!("abstraction pair fails: {:?}", report.diagnostics));
    }
    if abs.value.name != case.entity.name
        || abs.value.result_sort != case.entity.result_sort
        || abs.value.rules != case.entity.rules
    {
        return Err("abstraction altered S, B or C".into());
    }

    let exp = case.expansion_for(&abs.value, seed);
    let refined = refine_entity(&abs.value, &case.down, &exp, sorts).map_err(|e| format!("refine: {e}"))?;
    let report = check_refinement_pair(&refined.value, &abs.value, sorts);
    if !report.passes() {
        return Err(format!("refinement pair fails: {:?}", report.diagnostics));
    }
    if refined.value.rules != abs.value.rules || refined.value.result_sort != abs.value.result_sort {
        return Err("refinement altered B or C".into());
    }

    let id_up = SortMap::new("id", "g", MapDirection::Abstracting);
    let id_down = SortMap::new("id", "g", MapDirection::Refining);
    let fixed = abstract_entity(&case.entity, &id_up, sorts).map_err(|e| e.to_string())?;
    if fixed.value != case.entity {
        return Err("identity abstraction changed the entity".into());
    }
    let fixed = refine_entity(&case.entity, &id_down, &EntityExpansion::new(), sorts).map_err(|e| e.to_string())?;
    if fixed.value != case.entity {
        return Err("identity refinement changed the entity".into());
    }
    Ok(())
}

/// Projection is idempotent and never grows the model.
pub fn check_view(sorts: &SortSystem, model: &InformationModel) -> Result<(), String> {
    use crate::abstraction::project_view;
    for view in ["view", "mfg"] {
        let once = project_view(model, view, sorts).map_err(|e| e.to_string())?;
        let twice = project_view(&once, view, sorts).map_err(|e| e.to_string())?;
        if once != twice {
            return Err(format!("projection onto {view} is not idempotent"));
        }
        if once.entities.len() > model.entities.len() {
            return Err("projection added entities".into());
        }
        for (name, e) in &once.entities {
            if e.attributes.len() > model.entities[name].attributes.len() {
                return Err(format!("projection added attributes to {name}"));
            }
        }
    }
    Ok(())
}

/// The next-closure lattice equals the brute-force Galois closure.
pub fn check_lattice(incidence: &[BTreeSet<usize>]) -> Result<(), String> {
    use crate::lattice::build_conceptual_lattice;
    let (sorts, model) = lattice_model(incidence);
    let lattice = build_conceptual_lattice(&model, &sorts).map_err(|e| e.to_string())?;
    let (concepts, edges) = lattice_oracle(&FormalContext::from_model(&model));
    let got: BTreeSet<OracleConcept> = lattice
        .concepts
        .iter()
        .map(|c| (c.extent.clone(), c.intent.clone()))
        .collect();
    if got.len() != lattice.concepts.len() {
        return Err("duplicate concepts".into());
    }
    if got != concepts {
        return Err(format!("concepts differ: got {} want {}", got.len(), concepts.len()));
    }
    let pair = |i: usize| {
        let c = &lattice.concepts[i];
        (c.extent.clone(), c.intent.clone())
    };
    let got_edges: BTreeSet<_> = lattice.hasse.iter().map(|(s, g)| (pair(*s), pair(*g))).collect();
    if got_edges != edges {
        return Err("Hasse edges differ".into());
    }
    Ok(())
}

/// parse(print(w)) == w and printing is a fixed point.
pub fn check_roundtrip(ws: &Workspace) -> Result<(), String> {
    let text = crate::dsl::print(ws);
    let parsed = crate::dsl::parse(&text).map_err(|d| {
        let msgs: Vec<String> = d.iter().map(|x| x.to_string()).collect();
        format!("printed workspace does not parse: {}\n{text}", msgs.join("; "))
    })?;
    if &parsed.workspace != ws {
        return Err(format!("round trip changed the workspace:\n{text}"));
    }
    if crate::dsl::print(&parsed.workspace) != text {
        return Err("canonical print is not a fixed point".into());
    }
    Ok(())
}

/// Every diagnostic from parsing `text` points inside it.
pub fn check_spans(text: &str) -> Result<(), String> {
    let diags = match crate::dsl::parse(text) {
        Ok(p) => p.diagnostics,
        Err(d) => {
            if d.is_empty() {
                return Err("failed parse without diagnostics".into());
            }
            d
        }
    };
    for d in diags {
        if d.span.file == "<input>" && !d.span.within(text) {
            return Err(format!("span out of bounds: {d}"));
        }
    }
    Ok(())
}
