//! Ontological commitments and verification of models against them.
//!
//! A commitment binds a sort to the attribute shapes and rules every entity of
//! that sort must exhibit. Entities are matched by their result sorts through
//! the subsort hierarchy of the ontology's sort set, never by name.
//!
//! Verification is partial by nature: an empty report means no commitment is
//! violated, not that the model is a valid account of the system.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{evaluate, EntitySpec, InformationModel, Rule, RuleOutcome};
use crate::sorts::{SortSet, SortSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("commitment `{0}` is already defined")]
    DuplicateCommitment(String),
    #[error("ontology `{ontology}` does not fit the sort system: {reason}")]
    SortSystemMismatch { ontology: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttrSelector {
    Named(String),
    /// At least one attribute of the required sort, whatever its name.
    Any,
}

impl fmt::Display for AttrSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrSelector::Named(n) => f.write_str(n),
            AttrSelector::Any => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub attr: AttrSelector,
    pub sort: String,
    /// Optional requirements only constrain the sort when the attribute exists.
    pub required: bool,
}

impl Requirement {
    pub fn required(attr: &str, sort: &str) -> Requirement {
        Requirement {
            attr: AttrSelector::Named(attr.to_string()),
            sort: sort.to_string(),
            required: true,
        }
    }

    pub fn optional(attr: &str, sort: &str) -> Requirement {
        Requirement {
            required: false,
            ..Requirement::required(attr, sort)
        }
    }

    pub fn any_of(sort: &str) -> Requirement {
        Requirement {
            attr: AttrSelector::Any,
            sort: sort.to_string(),
            required: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub id: String,
    pub applies_to: String,
    pub requirements: Vec<Requirement>,
    pub rules: Vec<Rule>,
    pub rationale: String,
}

impl Commitment {
    pub fn new(id: &str, applies_to: &str) -> Commitment {
        Commitment {
            id: id.to_string(),
            applies_to: applies_to.to_string(),
            requirements: Vec::new(),
            rules: Vec::new(),
            rationale: String::new(),
        }
    }

    pub fn require(mut self, r: Requirement) -> Commitment {
        self.requirements.push(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub name: String,
    /// Sort set in which `applies_to` and requirement sorts are interpreted.
    pub sort_set: String,
    pub provenance: String,
    commitments: Vec<Commitment>,
}

impl Ontology {
    pub fn new(name: &str, sort_set: &str) -> Ontology {
        Ontology {
            name: name.to_string(),
            sort_set: sort_set.to_string(),
            provenance: String::new(),
            commitments: Vec::new(),
        }
    }

    pub fn add_commitment(&mut self, c: Commitment) -> Result<(), OntologyError> {
        if self.commitments.iter().any(|x| x.id == c.id) {
            return Err(OntologyError::DuplicateCommitment(c.id));
        }
        self.commitments.push(c);
        Ok(())
    }

    pub fn commitments(&self) -> &[Commitment] {
        &self.commitments
    }

    pub fn commitment(&self, id: &str) -> Option<&Commitment> {
        self.commitments.iter().find(|c| c.id == id)
    }

    pub fn remove_commitment(&mut self, id: &str) -> Option<Commitment> {
        let idx = self.commitments.iter().position(|c| c.id == id)?;
        Some(self.commitments.remove(idx))
    }

    /// Checks that every sort the ontology mentions lives in its sort set.
    pub fn check_against<'a>(&self, sorts: &'a SortSystem) -> Result<&'a SortSet, OntologyError> {
        let mismatch = |reason: String| OntologyError::SortSystemMismatch {
            ontology: self.name.clone(),
            reason,
        };
        let set = sorts
            .sort_set(&self.sort_set)
            .map_err(|_| mismatch(format!("sort set `{}` is not declared", self.sort_set)))?;
        for c in &self.commitments {
            let mentioned = std::iter::once(&c.applies_to).chain(c.requirements.iter().map(|r| &r.sort));
            for s in mentioned {
                if !set.contains(s) {
                    return Err(mismatch(format!(
                        "commitment `{}` names sort `{s}` outside `{}`",
                        c.id, self.sort_set
                    )));
                }
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationItem {
    Missing {
        attr: String,
    },
    SortMismatch {
        attr: String,
        found: String,
        required: String,
    },
    NoAttributeOfSort {
        sort: String,
    },
    RuleFailed {
        rule: String,
        detail: String,
    },
}

impl ViolationItem {
    /// The attribute, sort or rule the violation is about.
    pub fn subject(&self) -> &str {
        match self {
            ViolationItem::Missing { attr } | ViolationItem::SortMismatch { attr, .. } => attr,
            ViolationItem::NoAttributeOfSort { sort } => sort,
            ViolationItem::RuleFailed { rule, .. } => rule,
        }
    }
}

impl fmt::Display for ViolationItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationItem::Missing { attr } => write!(f, "missing attribute `{attr}`"),
            ViolationItem::SortMismatch { attr, found, required } => {
                write!(f, "attribute `{attr}` has sort {found}, required {required}")
            }
            ViolationItem::NoAttributeOfSort { sort } => {
                write!(f, "no attribute of sort {sort} or below")
            }
            ViolationItem::RuleFailed { rule, detail } => write!(f, "rule `{rule}` {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub commitment: String,
    pub entity: String,
    pub item: ViolationItem,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.commitment, self.entity, self.item)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub ontology: String,
    pub model: String,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// One violation per line.
    pub fn to_text(&self) -> String {
        self.violations.iter().map(|v| format!("{v}\n")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Does any result sort of `entity` sit at or below `sort`?
fn entity_is_a(set: &SortSet, entity: &EntitySpec, sort: &str) -> bool {
    entity
        .result_sort
        .iter()
        .any(|b| set.contains(b) && set.leq(b, sort).unwrap_or(false))
}

fn attr_is_a(set: &SortSet, attr_sort: &str, sort: &str) -> bool {
    set.contains(attr_sort) && set.leq(attr_sort, sort).unwrap_or(false)
}

pub fn verify_model(
    model: &InformationModel,
    ontology: &Ontology,
    sorts: &SortSystem,
) -> Result<ViolationReport, OntologyError> {
    let set = ontology.check_against(sorts)?;
    let mut violations = Vec::new();
    for entity in model.entities.values() {
        for c in ontology.commitments() {
            if !entity_is_a(set, entity, &c.applies_to) {
                continue;
            }
            let mut push = |item| {
                violations.push(Violation {
                    commitment: c.id.clone(),
                    entity: entity.name.clone(),
                    item,
                })
            };
            for req in &c.requirements {
                match &req.attr {
                    AttrSelector::Named(name) => match entity.attribute(name) {
                        None if req.required => push(ViolationItem::Missing { attr: name.clone() }),
                        None => {}
                        Some(a) if !attr_is_a(set, &a.sort, &req.sort) => push(ViolationItem::SortMismatch {
                            attr: name.clone(),
                            found: a.sort.clone(),
                            required: req.sort.clone(),
                        }),
                        Some(_) => {}
                    },
                    AttrSelector::Any => {
                        let found = entity.attributes.iter().any(|a| attr_is_a(set, &a.sort, &req.sort));
                        if !found && req.required {
                            push(ViolationItem::NoAttributeOfSort { sort: req.sort.clone() });
                        }
                    }
                }
            }
            for result in evaluate(&c.rules, entity, sorts) {
                let detail = match result.outcome {
                    RuleOutcome::Pass => continue,
                    RuleOutcome::Fail => "does not hold".to_string(),
                    RuleOutcome::TypeError(msg) => format!("cannot be evaluated: {msg}"),
                };
                push(ViolationItem::RuleFailed {
                    rule: result.id,
                    detail,
                });
            }
        }
    }
    violations.sort();
    Ok(ViolationReport {
        ontology: ontology.name.clone(),
        model: model.name.clone(),
        violations,
    })
}

/// Entities of `model` that a commitment applies to.
pub fn matching_entities<'a>(
    model: &'a InformationModel,
    ontology: &Ontology,
    commitment: &Commitment,
    sorts: &SortSystem,
) -> Vec<&'a EntitySpec> {
    let Ok(set) = sorts.sort_set(&ontology.sort_set) else {
        return Vec::new();
    };
    model
        .entities
        .values()
        .filter(|e| entity_is_a(set, e, &commitment.applies_to))
        .collect()
}

/// Sorts at which some attribute of `entity` is declared.
pub fn attribute_sorts(entity: &EntitySpec) -> BTreeSet<&str> {
    entity.attributes.iter().map(|a| a.sort.as_str()).collect()
}
