//! Information entities and the models built from them.
//!
//! An entity records a name, the attributes it carries (each with a declared
//! sort and a value), the sorts it has as a whole (its result sorts), an
//! optional functor relating attributes to the result sorts, and application
//! rules. [`check_wellformed`] audits a whole [`InformationModel`] against a
//! [`SortSystem`] and reports every defect it finds instead of stopping at the
//! first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalEnv, Expr};
use crate::number::{Number, Unit};
use crate::sorts::SortSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntityError {
    #[error("entity `{0}` is already defined")]
    DuplicateEntity(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("model is not well formed ({} error(s))", .0.len())]
    ModelNotWellFormed(Vec<Diagnostic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Object,
    Operation,
    Situation,
    Process,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::Object,
        EntityKind::Operation,
        EntityKind::Situation,
        EntityKind::Process,
    ];

    pub fn keyword(&self) -> &'static str {
        match self {
            EntityKind::Object => "object",
            EntityKind::Operation => "operation",
            EntityKind::Situation => "situation",
            EntityKind::Process => "process",
        }
    }

    pub fn from_keyword(s: &str) -> Option<EntityKind> {
        EntityKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataValue {
    Number(Number, Unit),
    Text(String),
    Bool(bool),
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataValue::Number(n, u) => match u.symbol() {
                Some(sym) => write!(f, "{n} {sym}"),
                None => write!(f, "{n}"),
            },
            DataValue::Text(t) => write_quoted(f, t),
            DataValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeValue {
    /// Another entity of the same model.
    Ref(String),
    /// A reference to an entity that lives outside this model, e.g. one
    /// dropped by a view projection.
    External(String),
    Data(DataValue),
    List(Vec<AttributeValue>),
}

impl AttributeValue {
    pub fn number(v: Number, unit: Unit) -> AttributeValue {
        AttributeValue::Data(DataValue::Number(v, unit))
    }

    pub fn text(s: &str) -> AttributeValue {
        AttributeValue::Data(DataValue::Text(s.to_string()))
    }

    pub fn reference(name: &str) -> AttributeValue {
        AttributeValue::Ref(name.to_string())
    }

    /// Every `Ref` target, depth first.
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            AttributeValue::Ref(r) => out.push(r),
            AttributeValue::List(items) => items.iter().for_each(|i| i.collect_refs(out)),
            _ => {}
        }
    }

    pub fn as_data(&self) -> Option<&DataValue> {
        match self {
            AttributeValue::Data(d) => Some(d),
            _ => None,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Ref(r) => write!(f, "ref {r}"),
            AttributeValue::External(r) => write!(f, "extern {r}"),
            AttributeValue::Data(d) => write!(f, "{d}"),
            AttributeValue::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub sort: String,
    pub value: AttributeValue,
}

impl Attribute {
    pub fn new(name: &str, sort: &str, value: AttributeValue) -> Attribute {
        Attribute {
            name: name.to_string(),
            sort: sort.to_string(),
            value,
        }
    }
}

/// How an entity's attributes relate to the functor's function domains.
/// Carried as metadata; `Aggregate` and `Compose` also mark many-to-one
/// attribute merges during abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctorMode {
    Aggregate,
    Compose,
    Derive,
    Identity,
}

impl FunctorMode {
    pub const ALL: [FunctorMode; 4] = [
        FunctorMode::Aggregate,
        FunctorMode::Compose,
        FunctorMode::Derive,
        FunctorMode::Identity,
    ];

    pub fn keyword(&self) -> &'static str {
        match self {
            FunctorMode::Aggregate => "aggregate",
            FunctorMode::Compose => "compose",
            FunctorMode::Derive => "derive",
            FunctorMode::Identity => "identity",
        }
    }

    pub fn from_keyword(s: &str) -> Option<FunctorMode> {
        FunctorMode::ALL.into_iter().find(|m| m.keyword() == s)
    }

    pub fn merges(&self) -> bool {
        matches!(self, FunctorMode::Aggregate | FunctorMode::Compose)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctorFunction {
    pub name: String,
    pub domain: Vec<String>,
    pub codomain: String,
    pub body: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Functor {
    pub mode: FunctorMode,
    pub functions: Vec<FunctorFunction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpec {
    pub name: String,
    pub kind: EntityKind,
    pub attributes: Vec<Attribute>,
    pub result_sort: Vec<String>,
    /// Entities without a functor are primitives with no functions to check.
    pub functor: Option<Functor>,
    pub rules: Vec<Rule>,
}

impl EntitySpec {
    pub fn new(name: &str, result_sort: &[&str]) -> EntitySpec {
        EntitySpec {
            name: name.to_string(),
            kind: EntityKind::Object,
            attributes: Vec::new(),
            result_sort: result_sort.iter().map(|s| s.to_string()).collect(),
            functor: None,
            rules: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, sort: &str, value: AttributeValue) -> EntitySpec {
        self.attributes.push(Attribute::new(name, sort, value));
        self
    }

    pub fn with_rule(mut self, id: &str, expr: Expr) -> EntitySpec {
        self.rules.push(Rule {
            id: id.to_string(),
            expr,
        });
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attribute_names(&self) -> BTreeSet<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }
}

/// Rule evaluation environment over a single entity.
pub struct EntityEnv<'a> {
    pub entity: &'a EntitySpec,
    pub sorts: &'a SortSystem,
}

impl EvalEnv for EntityEnv<'_> {
    fn attribute(&self, name: &str) -> Option<(&str, &AttributeValue)> {
        self.entity.attribute(name).map(|a| (a.sort.as_str(), &a.value))
    }

    fn sort_leq(&self, t: &str, t1: &str) -> bool {
        self.sorts.leq_any(t, t1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationModel {
    pub name: String,
    /// The model's own sort set; other sets may still be used by attributes.
    pub sort_set: String,
    pub entities: BTreeMap<String, EntitySpec>,
}

impl InformationModel {
    pub fn new(name: &str, sort_set: &str) -> InformationModel {
        InformationModel {
            name: name.to_string(),
            sort_set: sort_set.to_string(),
            entities: BTreeMap::new(),
        }
    }

    pub fn define_entity(&mut self, spec: EntitySpec) -> Result<(), EntityError> {
        if self.entities.contains_key(&spec.name) {
            return Err(EntityError::DuplicateEntity(spec.name));
        }
        self.entities.insert(spec.name.clone(), spec);
        Ok(())
    }

    pub fn entity(&self, name: &str) -> Result<&EntitySpec, EntityError> {
        self.entities
            .get(name)
            .ok_or_else(|| EntityError::UnknownEntity(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Well-formedness defect categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    UnknownSortSet,
    UnknownSort,
    EmptyResultSort,
    DuplicateAttribute,
    DanglingRef,
    FunctorEmpty,
    FunctorDomainEmpty,
    FunctorOverlap,
    FunctorDomainExtra,
    FunctorBodyAttribute,
    RuleUnknownAttribute,
}

impl DiagCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagCode::UnknownSortSet => "unknown-sort-set",
            DiagCode::UnknownSort => "unknown-sort",
            DiagCode::EmptyResultSort => "empty-result-sort",
            DiagCode::DuplicateAttribute => "duplicate-attribute",
            DiagCode::DanglingRef => "dangling-ref",
            DiagCode::FunctorEmpty => "functor-empty",
            DiagCode::FunctorDomainEmpty => "functor-domain-empty",
            DiagCode::FunctorOverlap => "functor-overlap",
            DiagCode::FunctorDomainExtra => "functor-domain-extra",
            DiagCode::FunctorBodyAttribute => "functor-body-attribute",
            DiagCode::RuleUnknownAttribute => "rule-unknown-attribute",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub entity: String,
    /// Location inside the entity: an attribute name, `functor.<fn>`,
    /// `rule.<id>` or `result_sort`.
    pub path: String,
    pub code: DiagCode,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}.{}: {} [{}]",
            self.severity, self.entity, self.path, self.message, self.code
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellformednessReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl WellformednessReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

struct Collector<'a> {
    entity: &'a str,
    out: &'a mut Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(&mut self, code: DiagCode, severity: Severity, path: &str, message: String) {
        self.out.push(Diagnostic {
            entity: self.entity.to_string(),
            path: path.to_string(),
            code,
            severity,
            message,
        });
    }

    fn error(&mut self, code: DiagCode, path: &str, message: String) {
        self.push(code, Severity::Error, path, message);
    }
}

/// Audits every entity of `model`. Diagnostics come back sorted, so the
/// result does not depend on definition order.
pub fn check_wellformed(model: &InformationModel, sorts: &SortSystem) -> WellformednessReport {
    let mut diagnostics = Vec::new();
    if sorts.sort_set(&model.sort_set).is_err() {
        diagnostics.push(Diagnostic {
            entity: String::new(),
            path: "sort_set".to_string(),
            code: DiagCode::UnknownSortSet,
            severity: Severity::Error,
            message: format!("model sort set `{}` is not declared", model.sort_set),
        });
    }
    for entity in model.entities.values() {
        let mut c = Collector {
            entity: &entity.name,
            out: &mut diagnostics,
        };
        check_entity(model, sorts, entity, &mut c);
    }
    diagnostics.sort();
    diagnostics.dedup();
    WellformednessReport { diagnostics }
}

fn check_entity(model: &InformationModel, sorts: &SortSystem, entity: &EntitySpec, c: &mut Collector<'_>) {
    if entity.result_sort.is_empty() {
        c.error(
            DiagCode::EmptyResultSort,
            "result_sort",
            "an entity needs at least one result sort".into(),
        );
    }
    for s in &entity.result_sort {
        if !sorts.knows_sort(s) {
            c.error(
                DiagCode::UnknownSort,
                "result_sort",
                format!("sort `{s}` is not declared"),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for attr in &entity.attributes {
        if !seen.insert(attr.name.as_str()) {
            c.error(
                DiagCode::DuplicateAttribute,
                &attr.name,
                format!("attribute `{}` is declared twice", attr.name),
            );
        }
        if !sorts.knows_sort(&attr.sort) {
            c.error(
                DiagCode::UnknownSort,
                &attr.name,
                format!("sort `{}` is not declared", attr.sort),
            );
        }
        for target in attr.value.refs() {
            if !model.entities.contains_key(target) {
                c.error(
                    DiagCode::DanglingRef,
                    &attr.name,
                    format!("reference to undefined entity `{target}`"),
                );
            }
        }
    }

    let attrs = entity.attribute_names();
    if let Some(functor) = &entity.functor {
        if functor.functions.is_empty() {
            c.error(
                DiagCode::FunctorEmpty,
                "functor",
                "a functor needs at least one function".into(),
            );
        }
        for func in &functor.functions {
            let path = format!("functor.{}", func.name);
            if !sorts.knows_sort(&func.codomain) {
                c.error(
                    DiagCode::UnknownSort,
                    &path,
                    format!("sort `{}` is not declared", func.codomain),
                );
            }
            if func.domain.is_empty() {
                c.error(DiagCode::FunctorDomainEmpty, &path, "function domain is empty".into());
                continue;
            }
            let domain: BTreeSet<&str> = func.domain.iter().map(String::as_str).collect();
            if domain.is_disjoint(&attrs) {
                c.error(
                    DiagCode::FunctorOverlap,
                    &path,
                    "function domain shares no attribute with the entity".into(),
                );
            } else if !domain.is_subset(&attrs) {
                let extra: Vec<_> = domain.difference(&attrs).copied().collect();
                c.push(
                    DiagCode::FunctorDomainExtra,
                    Severity::Warning,
                    &path,
                    format!("domain names non-attributes: {}", extra.join(", ")),
                );
            }
            if let Some(body) = &func.body {
                for a in body.referenced_attrs() {
                    if !domain.contains(a) {
                        c.error(
                            DiagCode::FunctorBodyAttribute,
                            &path,
                            format!("body reads `{a}` outside the function domain"),
                        );
                    }
                }
            }
        }
    }

    for rule in &entity.rules {
        let path = format!("rule.{}", rule.id);
        for a in rule.expr.referenced_attrs() {
            if !attrs.contains(a) {
                c.error(
                    DiagCode::RuleUnknownAttribute,
                    &path,
                    format!("rule reads undeclared attribute `{a}`"),
                );
            }
        }
        for s in rule.expr.referenced_sorts() {
            if !sorts.knows_sort(s) {
                c.error(DiagCode::UnknownSort, &path, format!("sort `{s}` is not declared"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "detail", rename_all = "kebab-case")]
pub enum RuleOutcome {
    Pass,
    Fail,
    TypeError(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub id: String,
    pub outcome: RuleOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleReport {
    pub entity: String,
    pub results: Vec<RuleResult>,
}

impl RuleReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.outcome == RuleOutcome::Pass)
    }
}

/// Evaluates one rule list against an entity's attributes.
pub fn evaluate(rules: &[Rule], entity: &EntitySpec, sorts: &SortSystem) -> Vec<RuleResult> {
    let env = EntityEnv { entity, sorts };
    rules
        .iter()
        .map(|r| RuleResult {
            id: r.id.clone(),
            outcome: match r.expr.eval(&env) {
                Ok(true) => RuleOutcome::Pass,
                Ok(false) => RuleOutcome::Fail,
                Err(msg) => RuleOutcome::TypeError(msg),
            },
        })
        .collect()
}

pub fn evaluate_rules(model: &InformationModel, entity: &str, sorts: &SortSystem) -> Result<RuleReport, EntityError> {
    let spec = model.entity(entity)?;
    Ok(RuleReport {
        entity: entity.to_string(),
        results: evaluate(&spec.rules, spec, sorts),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StructureEdge {
    pub from: String,
    pub to: String,
    pub label: String,
}

/// Entities as nodes, entity references as labelled edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<StructureEdge>,
}

impl StructureGraph {
    pub fn successors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a StructureEdge> + 'a {
        self.edges.iter().filter(move |e| e.from == node)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph \"{name}\" {{\n");
        for n in &self.nodes {
            out.push_str(&format!("  \"{n}\";\n"));
        }
        for e in &self.edges {
            out.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}\"];\n", e.from, e.to, e.label));
        }
        out.push_str("}\n");
        out
    }
}

pub fn structure_graph(model: &InformationModel, sorts: &SortSystem) -> Result<StructureGraph, EntityError> {
    let report = check_wellformed(model, sorts);
    if report.has_errors() {
        return Err(EntityError::ModelNotWellFormed(report.errors().cloned().collect()));
    }
    let mut graph = StructureGraph {
        nodes: model.entities.keys().cloned().collect(),
        edges: Vec::new(),
    };
    for entity in model.entities.values() {
        for attr in &entity.attributes {
            for target in attr.value.refs() {
                graph.edges.push(StructureEdge {
                    from: entity.name.clone(),
                    to: target.to_string(),
                    label: attr.name.clone(),
                });
            }
        }
    }
    Ok(graph)
}
