//! Abstraction, refinement, views and abstract/detailed coordination.
//!
//! Abstraction rewrites an entity's attributes upward in the subsort order
//! (each attribute at sort `t` is covered by one at some `t1` with `t <= t1`),
//! refinement rewrites them downward (each produced attribute at `t2` is
//! covered by an original at `t` with `t2 <= t`). Both keep the entity's
//! name, result sorts and rules untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{check_wellformed, Attribute, AttributeValue, EntitySpec, FunctorMode, InformationModel};
use crate::sorts::{SortSet, SortSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("unknown sort set `{0}`")]
    UnknownSortSet(String),
    #[error("map `{map}` names sort `{sort}` outside sort set `{set}`")]
    UnmappedSort { map: String, set: String, sort: String },
    #[error("`{from} -> {to}` does not go up the hierarchy")]
    NotAbstracting { from: String, to: String },
    #[error("`{from} -> {to}` does not go down the hierarchy")]
    NotRefining { from: String, to: String },
    #[error("map `{0}` has the wrong direction for this operation")]
    WrongDirection(String),
    #[error("produced attribute `{attr}` at sort {sort} is not covered by `{original}` at {original_sort}")]
    OrphanAttribute {
        attr: String,
        sort: String,
        original: String,
        original_sort: String,
    },
    #[error("entity `{entity}` has no attribute `{attr}`")]
    UnknownAttribute { entity: String, attr: String },
    #[error("attribute name `{0}` would be produced twice")]
    AttributeNameClash(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapDirection {
    Abstracting,
    Refining,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortMapEntry {
    pub target: String,
    /// Name of the merged attribute; defaults to the lowercased target sort.
    pub attr_name: Option<String>,
    /// `aggregate` and `compose` merge every attribute mapped to the same name.
    pub mode: Option<FunctorMode>,
}

impl SortMapEntry {
    pub fn to(target: &str) -> SortMapEntry {
        SortMapEntry {
            target: target.to_string(),
            attr_name: None,
            mode: None,
        }
    }

    pub fn merged(target: &str, attr_name: Option<&str>, mode: FunctorMode) -> SortMapEntry {
        SortMapEntry {
            target: target.to_string(),
            attr_name: attr_name.map(String::from),
            mode: Some(mode),
        }
    }

    fn merges(&self) -> bool {
        self.mode.is_some_and(|m| m.merges())
    }

    fn merged_name(&self) -> String {
        self.attr_name.clone().unwrap_or_else(|| self.target.to_lowercase())
    }
}

/// Sort-to-sort mapping within one sort set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortMap {
    pub name: String,
    pub sort_set: String,
    pub direction: MapDirection,
    pub entries: BTreeMap<String, SortMapEntry>,
}

impl SortMap {
    pub fn new(name: &str, sort_set: &str, direction: MapDirection) -> SortMap {
        SortMap {
            name: name.to_string(),
            sort_set: sort_set.to_string(),
            direction,
            entries: BTreeMap::new(),
        }
    }

    pub fn with(mut self, source: &str, entry: SortMapEntry) -> SortMap {
        self.entries.insert(source.to_string(), entry);
        self
    }

    /// Checks the map against its sort set and returns that set.
    pub fn validate<'a>(&self, sorts: &'a SortSystem) -> Result<&'a SortSet, AbstractionError> {
        let set = sorts
            .sort_set(&self.sort_set)
            .map_err(|_| AbstractionError::UnknownSortSet(self.sort_set.clone()))?;
        for (source, entry) in &self.entries {
            for s in [source, &entry.target] {
                if !set.contains(s) {
                    return Err(AbstractionError::UnmappedSort {
                        map: self.name.clone(),
                        set: self.sort_set.clone(),
                        sort: s.clone(),
                    });
                }
            }
            let ok = match self.direction {
                MapDirection::Abstracting => set.leq(source, &entry.target),
                MapDirection::Refining => set.leq(&entry.target, source),
            }
            .unwrap_or(false);
            if !ok {
                let (from, to) = (source.clone(), entry.target.clone());
                return Err(match self.direction {
                    MapDirection::Abstracting => AbstractionError::NotAbstracting { from, to },
                    MapDirection::Refining => AbstractionError::NotRefining { from, to },
                });
            }
        }
        Ok(set)
    }
}

/// Something a rewrite could not carry over mechanically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReviewNote {
    pub entity: String,
    pub item: String,
    pub reason: String,
}

impl fmt::Display for ReviewNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.entity, self.item, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewritten<T> {
    pub value: T,
    pub notes: Vec<ReviewNote>,
}

/// `t` is covered by `t1` when `t <= t1` in some sort set (or they are equal).
pub fn covers(sorts: &SortSystem, t: &str, t1: &str) -> bool {
    t == t1 || sorts.leq_any(t, t1)
}

/// Rewrites attribute names inside functor domains and flags rules that read
/// attributes that no longer exist.
fn rename_references(
    spec: &mut EntitySpec,
    renames: &BTreeMap<String, Vec<String>>,
    what: &str,
    notes: &mut Vec<ReviewNote>,
) {
    if let Some(functor) = &mut spec.functor {
        for func in &mut functor.functions {
            let mut domain = Vec::new();
            for d in &func.domain {
                let replacement = renames.get(d).cloned().unwrap_or_else(|| vec![d.clone()]);
                for r in replacement {
                    if !domain.contains(&r) {
                        domain.push(r);
                    }
                }
            }
            func.domain = domain;
            if let Some(body) = &func.body {
                if body.referenced_attrs().iter().any(|a| renames.contains_key(*a)) {
                    notes.push(ReviewNote {
                        entity: spec.name.clone(),
                        item: format!("functor.{}", func.name),
                        reason: format!("body reads an attribute that was {what}"),
                    });
                }
            }
        }
    }
    for rule in &spec.rules {
        let stale: Vec<_> = rule
            .expr
            .referenced_attrs()
            .into_iter()
            .chain(has_targets(&rule.expr))
            .filter(|a| renames.contains_key(*a))
            .map(String::from)
            .collect();
        if !stale.is_empty() {
            notes.push(ReviewNote {
                entity: spec.name.clone(),
                item: format!("rule.{}", rule.id),
                reason: format!("rule needs manual review: reads {} which was {what}", stale.join(", ")),
            });
        }
    }
}

fn has_targets(expr: &crate::expr::Expr) -> Vec<&str> {
    use crate::expr::Expr;
    match expr {
        Expr::Has(a) => vec![a.as_str()],
        Expr::Compare { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
            let mut v = has_targets(lhs);
            v.extend(has_targets(rhs));
            v
        }
        Expr::Not(e) => has_targets(e),
        _ => Vec::new(),
    }
}

fn check_unique_names(attrs: &[Attribute]) -> Result<(), AbstractionError> {
    let mut seen = BTreeSet::new();
    for a in attrs {
        if !seen.insert(a.name.as_str()) {
            return Err(AbstractionError::AttributeNameClash(a.name.clone()));
        }
    }
    Ok(())
}

pub fn abstract_entity(
    entity: &EntitySpec,
    map: &SortMap,
    sorts: &SortSystem,
) -> Result<Rewritten<EntitySpec>, AbstractionError> {
    if map.direction != MapDirection::Abstracting {
        return Err(AbstractionError::WrongDirection(map.name.clone()));
    }
    map.validate(sorts)?;

    // merged name -> (target sort, member values)
    let mut groups: BTreeMap<String, (String, Vec<AttributeValue>)> = BTreeMap::new();
    let mut renames: BTreeMap<String, Vec<String>> = BTreeMap::new();
    enum Slot {
        Keep(Attribute),
        Group(String),
    }
    let mut slots = Vec::new();
    for attr in &entity.attributes {
        match map.entries.get(&attr.sort) {
            Some(entry) if entry.merges() => {
                let name = entry.merged_name();
                match groups.get_mut(&name) {
                    Some((target, members)) => {
                        if *target != entry.target {
                            return Err(AbstractionError::AttributeNameClash(name));
                        }
                        members.push(attr.value.clone());
                    }
                    None => {
                        groups.insert(name.clone(), (entry.target.clone(), vec![attr.value.clone()]));
                        slots.push(Slot::Group(name.clone()));
                    }
                }
                if attr.name != name {
                    renames.insert(attr.name.clone(), vec![name]);
                }
            }
            Some(entry) => slots.push(Slot::Keep(Attribute {
                sort: entry.target.clone(),
                ..attr.clone()
            })),
            None => slots.push(Slot::Keep(attr.clone())),
        }
    }

    let attributes: Vec<Attribute> = slots
        .into_iter()
        .map(|slot| match slot {
            Slot::Keep(a) => a,
            Slot::Group(name) => {
                let (target, members) = groups[&name].clone();
                Attribute {
                    name,
                    sort: target,
                    value: AttributeValue::List(members),
                }
            }
        })
        .collect();
    check_unique_names(&attributes)?;

    let mut out = EntitySpec {
        attributes,
        ..entity.clone()
    };
    let mut notes = Vec::new();
    rename_references(&mut out, &renames, "merged away", &mut notes);
    Ok(Rewritten { value: out, notes })
}

/// Replacement attributes per original attribute name.
pub type EntityExpansion = BTreeMap<String, Vec<Attribute>>;

pub fn refine_entity(
    entity: &EntitySpec,
    map: &SortMap,
    expansion: &EntityExpansion,
    sorts: &SortSystem,
) -> Result<Rewritten<EntitySpec>, AbstractionError> {
    if map.direction != MapDirection::Refining {
        return Err(AbstractionError::WrongDirection(map.name.clone()));
    }
    map.validate(sorts)?;
    for name in expansion.keys() {
        if entity.attribute(name).is_none() {
            return Err(AbstractionError::UnknownAttribute {
                entity: entity.name.clone(),
                attr: name.clone(),
            });
        }
    }

    let mut attributes = Vec::new();
    let mut renames: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for attr in &entity.attributes {
        if let Some(produced) = expansion.get(&attr.name) {
            for c in produced {
                if !covers(sorts, &c.sort, &attr.sort) {
                    return Err(AbstractionError::OrphanAttribute {
                        attr: c.name.clone(),
                        sort: c.sort.clone(),
                        original: attr.name.clone(),
                        original_sort: attr.sort.clone(),
                    });
                }
                attributes.push(c.clone());
            }
            let names: Vec<String> = produced.iter().map(|c| c.name.clone()).collect();
            if names != [attr.name.clone()] {
                renames.insert(attr.name.clone(), names);
            }
        } else if let Some(entry) = map.entries.get(&attr.sort) {
            attributes.push(Attribute {
                sort: entry.target.clone(),
                ..attr.clone()
            });
        } else {
            attributes.push(attr.clone());
        }
    }
    check_unique_names(&attributes)?;

    let mut out = EntitySpec {
        attributes,
        ..entity.clone()
    };
    let mut notes = Vec::new();
    rename_references(&mut out, &renames, "expanded", &mut notes);
    Ok(Rewritten { value: out, notes })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairDiagnostic {
    NameDiffers { concrete: String, abstracted: String },
    ResultSortDiffers,
    RulesDiffer,
    Uncovered { attr: String, sort: String },
}

impl fmt::Display for PairDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairDiagnostic::NameDiffers { concrete, abstracted } => {
                write!(f, "entity names differ: `{concrete}` vs `{abstracted}`")
            }
            PairDiagnostic::ResultSortDiffers => f.write_str("result sorts differ"),
            PairDiagnostic::RulesDiffer => f.write_str("rules differ"),
            PairDiagnostic::Uncovered { attr, sort } => {
                write!(f, "attribute `{attr}` at sort {sort} has no covering attribute")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub diagnostics: Vec<PairDiagnostic>,
}

impl PairReport {
    pub fn passes(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Is `abstracted` a valid abstraction of `concrete`?
pub fn check_abstraction_pair(concrete: &EntitySpec, abstracted: &EntitySpec, sorts: &SortSystem) -> PairReport {
    let mut diagnostics = Vec::new();
    if concrete.name != abstracted.name {
        diagnostics.push(PairDiagnostic::NameDiffers {
            concrete: concrete.name.clone(),
            abstracted: abstracted.name.clone(),
        });
    }
    if concrete.result_sort != abstracted.result_sort {
        diagnostics.push(PairDiagnostic::ResultSortDiffers);
    }
    if concrete.rules != abstracted.rules {
        diagnostics.push(PairDiagnostic::RulesDiffer);
    }
    for a in &concrete.attributes {
        if !abstracted.attributes.iter().any(|b| covers(sorts, &a.sort, &b.sort)) {
            diagnostics.push(PairDiagnostic::Uncovered {
                attr: a.name.clone(),
                sort: a.sort.clone(),
            });
        }
    }
    PairReport { diagnostics }
}

/// Is `refined` a valid refinement of `original`? Every refined attribute
/// must sit below some original one, which is the abstraction condition
/// read in the other direction.
pub fn check_refinement_pair(refined: &EntitySpec, original: &EntitySpec, sorts: &SortSystem) -> PairReport {
    check_abstraction_pair(refined, original, sorts)
}

/// Applies an abstracting map to every entity of a model.
pub fn abstract_model(
    model: &InformationModel,
    map: &SortMap,
    sorts: &SortSystem,
) -> Result<Rewritten<InformationModel>, AbstractionError> {
    let mut out = model.clone();
    let mut notes = Vec::new();
    for (name, entity) in &model.entities {
        let r = abstract_entity(entity, map, sorts)?;
        notes.extend(r.notes);
        out.entities.insert(name.clone(), r.value);
    }
    Ok(Rewritten { value: out, notes })
}

/// Named per-entity expansions for [`refine_model`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub name: String,
    /// entity name -> attribute name -> replacement attributes
    pub entries: BTreeMap<String, EntityExpansion>,
}

pub fn refine_model(
    model: &InformationModel,
    map: &SortMap,
    expansion: &Expansion,
    sorts: &SortSystem,
) -> Result<Rewritten<InformationModel>, AbstractionError> {
    for (entity, per_attr) in &expansion.entries {
        if !model.entities.contains_key(entity) {
            let attr = per_attr.keys().next().cloned().unwrap_or_default();
            return Err(AbstractionError::UnknownAttribute {
                entity: entity.clone(),
                attr,
            });
        }
    }
    let empty = EntityExpansion::new();
    let mut out = model.clone();
    let mut notes = Vec::new();
    for (name, entity) in &model.entities {
        let exp = expansion.entries.get(name).unwrap_or(&empty);
        let r = refine_entity(entity, map, exp, sorts)?;
        notes.extend(r.notes);
        out.entities.insert(name.clone(), r.value);
    }
    Ok(Rewritten { value: out, notes })
}

fn externalize(value: &AttributeValue, kept: &BTreeSet<&str>) -> AttributeValue {
    match value {
        AttributeValue::Ref(r) if !kept.contains(r.as_str()) => AttributeValue::External(r.clone()),
        AttributeValue::List(items) => AttributeValue::List(items.iter().map(|i| externalize(i, kept)).collect()),
        other => other.clone(),
    }
}

/// Restricts a model to the entities and attributes visible through one sort
/// set. References to entities outside the view become external references.
pub fn project_view(
    model: &InformationModel,
    view: &str,
    sorts: &SortSystem,
) -> Result<InformationModel, AbstractionError> {
    let set = sorts
        .sort_set(view)
        .map_err(|_| AbstractionError::UnknownSortSet(view.to_string()))?;
    let kept: BTreeSet<&str> = model
        .entities
        .values()
        .filter(|e| e.result_sort.iter().any(|b| set.contains(b)))
        .map(|e| e.name.as_str())
        .collect();

    let mut out = InformationModel::new(&model.name, view);
    for name in &kept {
        let entity = &model.entities[*name];
        let mut spec = entity.clone();
        spec.attributes = entity
            .attributes
            .iter()
            .filter(|a| set.contains(&a.sort))
            .map(|a| Attribute {
                value: externalize(&a.value, &kept),
                ..a.clone()
            })
            .collect();
        let remaining: BTreeSet<String> = spec.attributes.iter().map(|a| a.name.clone()).collect();
        let dropped: BTreeSet<&str> = entity
            .attribute_names()
            .into_iter()
            .filter(|a| !remaining.contains(*a))
            .collect();

        if let Some(functor) = &mut spec.functor {
            functor.functions.retain_mut(|func| {
                func.domain.retain(|d| !dropped.contains(d.as_str()));
                if func
                    .body
                    .as_ref()
                    .is_some_and(|b| b.referenced_attrs().iter().any(|a| dropped.contains(a)))
                {
                    func.body = None;
                }
                func.domain.iter().any(|d| remaining.contains(d))
            });
        }
        if spec.functor.as_ref().is_some_and(|f| f.functions.is_empty()) {
            spec.functor = None;
        }
        spec.rules.retain(|r| {
            !r.expr
                .referenced_attrs()
                .iter()
                .chain(has_targets(&r.expr).iter())
                .any(|a| dropped.contains(a))
        });
        out.entities.insert(spec.name.clone(), spec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrPath {
    pub entity: String,
    pub attr: String,
}

impl AttrPath {
    pub fn new(entity: &str, attr: &str) -> AttrPath {
        AttrPath {
            entity: entity.to_string(),
            attr: attr.to_string(),
        }
    }
}

impl fmt::Display for AttrPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.entity, self.attr)
    }
}

/// One abstract attribute and the detailed attributes it summarizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrLink {
    pub abstract_attr: String,
    pub detailed: Vec<AttrPath>,
    pub mode: FunctorMode,
}

/// Relationships between the attributes of an abstract model and a detailed
/// one, grouped by abstract entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeMapping {
    pub name: String,
    pub entries: BTreeMap<String, Vec<AttrLink>>,
}

impl ModeMapping {
    /// Flattened (abstract path, detailed paths, mode) triples.
    pub fn pairs(&self) -> impl Iterator<Item = (AttrPath, &[AttrPath], FunctorMode)> {
        self.entries.iter().flat_map(|(entity, links)| {
            links
                .iter()
                .map(move |l| (AttrPath::new(entity, &l.abstract_attr), l.detailed.as_slice(), l.mode))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl CoordinationReport {
    pub fn passes(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.errors {
            out.push_str(&format!("error: {e}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// Checks that a detailed model is a consistent refinement of an abstract one
/// under `mapping`.
///
/// Entities present with identical definitions in both models are their own
/// counterpart and need no mapping entry.
pub fn coordinate_modes(
    abstract_model: &InformationModel,
    detailed_model: &InformationModel,
    mapping: &ModeMapping,
    sorts: &SortSystem,
) -> CoordinationReport {
    let mut report = CoordinationReport::default();
    for (label, model) in [("abstract", abstract_model), ("detailed", detailed_model)] {
        for d in check_wellformed(model, sorts).errors() {
            report
                .errors
                .push(format!("{label} model `{}` is not well formed: {d}", model.name));
        }
    }

    let identical: BTreeSet<&str> = abstract_model
        .entities
        .iter()
        .filter(|(name, e)| detailed_model.entities.get(*name) == Some(e))
        .map(|(name, _)| name.as_str())
        .collect();

    let mut detailed_roots: BTreeSet<&str> = identical.clone();
    for (entity, links) in &mapping.entries {
        let Some(abs) = abstract_model.entities.get(entity) else {
            report
                .errors
                .push(format!("mapping names unknown abstract entity `{entity}`"));
            continue;
        };
        for link in links {
            let Some(abs_attr) = abs.attribute(&link.abstract_attr) else {
                report
                    .errors
                    .push(format!("unresolved abstract path `{entity}.{}`", link.abstract_attr));
                continue;
            };
            for path in &link.detailed {
                let Some(det_attr) = detailed_model
                    .entities
                    .get(&path.entity)
                    .and_then(|e| e.attribute(&path.attr))
                else {
                    report.errors.push(format!("unresolved detailed path `{path}`"));
                    continue;
                };
                detailed_roots.insert(path.entity.as_str());
                if !covers(sorts, &det_attr.sort, &abs_attr.sort) {
                    report.errors.push(format!(
                        "`{path}` at sort {} is not covered by `{entity}.{}` at sort {}",
                        det_attr.sort, link.abstract_attr, abs_attr.sort
                    ));
                }
            }
        }
    }

    for name in abstract_model.entities.keys() {
        if !mapping.entries.contains_key(name) && !identical.contains(name.as_str()) {
            report.errors.push(format!("abstract entity uncovered: {name}"));
        }
    }

    // Detailed entities reachable from mapped or shared entities count as mapped.
    let mut reached: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = detailed_roots.into_iter().collect();
    while let Some(name) = stack.pop() {
        if !reached.insert(name) {
            continue;
        }
        if let Some(e) = detailed_model.entities.get(name) {
            for a in &e.attributes {
                stack.extend(a.value.refs());
            }
        }
    }
    for name in detailed_model.entities.keys() {
        if !reached.contains(name.as_str()) {
            report
                .warnings
                .push(format!("detailed entity has no abstract counterpart: {name}"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{Functor, FunctorFunction, Rule};
    use crate::expr::Expr;
    use crate::number::{Number, Unit};

    fn sorts() -> SortSystem {
        let mut sys = SortSystem::new();
        sys.declare_sort_set("mfg").unwrap();
        let set = sys.sort_set_mut("mfg").unwrap();
        for s in [
            "Route",
            "RouteElement",
            "Track",
            "StraightTrack",
            "Curve",
            "Crossing",
            "Speed",
            "SpeedLimit",
        ] {
            set.declare_sort(s).unwrap();
        }
        for (a, b) in [
            ("Track", "RouteElement"),
            ("StraightTrack", "Track"),
            ("Curve", "Track"),
            ("Crossing", "RouteElement"),
            ("SpeedLimit", "Speed"),
        ] {
            set.declare_subsort(a, b).unwrap();
        }
        sys.declare_sort_set("cost_view").unwrap();
        let cost = sys.sort_set_mut("cost_view").unwrap();
        cost.declare_sort("CostCarrier").unwrap();
        cost.declare_sort("Cost").unwrap();
        sys
    }

    fn route() -> EntitySpec {
        let mut e = EntitySpec::new("Route", &["Route"])
            .with_attr("track1", "StraightTrack", AttributeValue::reference("T1"))
            .with_attr("curve1", "Curve", AttributeValue::reference("C1"))
            .with_rule("r1", Expr::Has("track1".into()));
        e.functor = Some(Functor {
            mode: FunctorMode::Aggregate,
            functions: vec![FunctorFunction {
                name: "layout".into(),
                domain: vec!["track1".into(), "curve1".into()],
                codomain: "Route".into(),
                body: None,
            }],
        });
        e
    }

    fn up_map() -> SortMap {
        SortMap::new("up", "mfg", MapDirection::Abstracting)
            .with(
                "StraightTrack",
                SortMapEntry::merged("RouteElement", Some("elements"), FunctorMode::Aggregate),
            )
            .with(
                "Curve",
                SortMapEntry::merged("RouteElement", Some("elements"), FunctorMode::Aggregate),
            )
    }

    #[test]
    fn identity_map_is_a_fixed_point() {
        let id = SortMap::new("id", "mfg", MapDirection::Abstracting);
        let r = abstract_entity(&route(), &id, &sorts()).unwrap();
        assert_eq!(r.value, route());
        assert!(r.notes.is_empty());
    }

    #[test]
    fn aggregate_merges_route_elements() {
        let sys = sorts();
        let r = abstract_entity(&route(), &up_map(), &sys).unwrap();
        let e = &r.value;
        assert_eq!(e.attributes.len(), 1);
        assert_eq!(e.attributes[0].name, "elements");
        assert_eq!(e.attributes[0].sort, "RouteElement");
        assert_eq!(
            e.attributes[0].value,
            AttributeValue::List(vec![AttributeValue::reference("T1"), AttributeValue::reference("C1")])
        );
        assert_eq!(e.functor.as_ref().unwrap().functions[0].domain, vec!["elements"]);
        assert_eq!(e.rules, route().rules);
        assert_eq!(r.notes.len(), 1, "rule r1 reads track1");
        assert!(check_abstraction_pair(&route(), e, &sys).passes());
    }

    #[test]
    fn default_merge_name_is_lowercased_target() {
        let map = SortMap::new("up", "mfg", MapDirection::Abstracting).with(
            "StraightTrack",
            SortMapEntry::merged("Track", None, FunctorMode::Compose),
        );
        let r = abstract_entity(&route(), &map, &sorts()).unwrap();
        assert_eq!(r.value.attributes[0].name, "track");
    }

    #[test]
    fn wrong_direction_is_rejected() {
        let map = SortMap::new("bad", "mfg", MapDirection::Abstracting).with("Speed", SortMapEntry::to("SpeedLimit"));
        assert!(matches!(
            abstract_entity(&route(), &map, &sorts()),
            Err(AbstractionError::NotAbstracting { .. })
        ));
        let map = SortMap::new("bad", "mfg", MapDirection::Abstracting).with("Speed", SortMapEntry::to("Nowhere"));
        assert!(matches!(
            abstract_entity(&route(), &map, &sorts()),
            Err(AbstractionError::UnmappedSort { .. })
        ));
    }

    #[test]
    fn refinement_expands_route_elements() {
        let sys = sorts();
        let abs = abstract_entity(&route(), &up_map(), &sys).unwrap().value;
        let down = SortMap::new("down", "mfg", MapDirection::Refining);
        let mut exp = EntityExpansion::new();
        exp.insert(
            "elements".into(),
            vec![
                Attribute::new("track1", "StraightTrack", AttributeValue::reference("T1")),
                Attribute::new("curve1", "Curve", AttributeValue::reference("C1")),
                Attribute::new("crossing1", "Crossing", AttributeValue::reference("X1")),
            ],
        );
        let refined = refine_entity(&abs, &down, &exp, &sys).unwrap().value;
        assert_eq!(refined.attributes.len(), 3);
        assert!(check_refinement_pair(&refined, &abs, &sys).passes());
        assert_eq!(refined.rules, abs.rules);

        let unchanged = refine_entity(&abs, &down, &EntityExpansion::new(), &sys).unwrap();
        assert_eq!(unchanged.value, abs);

        exp.insert(
            "elements".into(),
            vec![Attribute::new(
                "cost",
                "Cost",
                AttributeValue::number(Number::from_int(3), Unit::None),
            )],
        );
        assert!(matches!(
            refine_entity(&abs, &down, &exp, &sys),
            Err(AbstractionError::OrphanAttribute { .. })
        ));
    }

    #[test]
    fn refining_map_must_go_down() {
        let bad = SortMap::new("bad", "mfg", MapDirection::Refining).with("StraightTrack", SortMapEntry::to("Track"));
        assert!(matches!(
            refine_entity(&route(), &bad, &EntityExpansion::new(), &sorts()),
            Err(AbstractionError::NotRefining { .. })
        ));
    }

    #[test]
    fn pair_check_finds_missing_cover() {
        let sys = sorts();
        let mut abs = abstract_entity(&route(), &up_map(), &sys).unwrap().value;
        abs.attributes.clear();
        let r = check_abstraction_pair(&route(), &abs, &sys);
        assert_eq!(r.diagnostics.len(), 2);
        assert!(r.diagnostics.contains(&PairDiagnostic::Uncovered {
            attr: "track1".into(),
            sort: "StraightTrack".into()
        }));
        abs.rules.push(Rule {
            id: "extra".into(),
            expr: Expr::Has("x".into()),
        });
        assert!(check_abstraction_pair(&route(), &abs, &sys)
            .diagnostics
            .contains(&PairDiagnostic::RulesDiffer));
    }

    fn cost_model() -> InformationModel {
        let mut m = InformationModel::new("m", "mfg");
        m.define_entity(EntitySpec::new("T1", &["StraightTrack"])).unwrap();
        m.define_entity(
            EntitySpec::new("AGV1", &["Route", "CostCarrier"])
                .with_attr("track", "StraightTrack", AttributeValue::reference("T1"))
                .with_attr(
                    "hourly",
                    "Cost",
                    AttributeValue::number(Number::from_int(12), Unit::None),
                )
                .with_attr("carrier", "CostCarrier", AttributeValue::reference("T1"))
                .with_rule("r1", Expr::Has("track".into())),
        )
        .unwrap();
        m
    }

    #[test]
    fn view_keeps_only_view_sorts() {
        let sys = sorts();
        let v = project_view(&cost_model(), "cost_view", &sys).unwrap();
        assert_eq!(v.entities.len(), 1);
        let agv = &v.entities["AGV1"];
        let names: Vec<_> = agv.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, vec!["hourly", "carrier"]);
        assert_eq!(agv.attributes[1].value, AttributeValue::External("T1".into()));
        assert!(agv.rules.is_empty());
        assert_eq!(project_view(&v, "cost_view", &sys).unwrap(), v);
        assert!(check_wellformed(&v, &sys).is_empty());
        assert!(matches!(
            project_view(&v, "nope", &sys),
            Err(AbstractionError::UnknownSortSet(_))
        ));
    }

    #[test]
    fn view_onto_own_set_is_identity() {
        let mut m = cost_model();
        m.entities.remove("AGV1");
        m.define_entity(route()).unwrap();
        m.define_entity(EntitySpec::new("C1", &["Curve"])).unwrap();
        assert_eq!(project_view(&m, "mfg", &sorts()).unwrap(), m);
    }
}
