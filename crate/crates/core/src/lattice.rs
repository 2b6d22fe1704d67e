//! Conceptual lattices over entities and attribute sorts.
//!
//! The formal context has the model's entities as objects and the sorts at
//! which attributes are declared as attributes; an entity is incident to a
//! sort when it declares at least one attribute at that sort. Concepts are
//! enumerated with Ganter's next-closure algorithm in lectic order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{check_wellformed, Diagnostic, InformationModel};
use crate::sorts::SortSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("model is not well formed ({} error(s))", .0.len())]
    ModelNotWellFormed(Vec<Diagnostic>),
    #[error("unknown concept #{0}")]
    UnknownConcept(usize),
}

/// Objects x attributes incidence table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormalContext {
    pub objects: Vec<String>,
    pub attributes: Vec<String>,
    /// `incidence[g]` holds the attribute indices of object `g`.
    pub incidence: Vec<BTreeSet<usize>>,
}

impl FormalContext {
    pub fn from_model(model: &InformationModel) -> FormalContext {
        let attributes: BTreeSet<&str> = model
            .entities
            .values()
            .flat_map(|e| e.attributes.iter().map(|a| a.sort.as_str()))
            .collect();
        let attributes: Vec<String> = attributes.into_iter().map(String::from).collect();
        let index: BTreeMap<&str, usize> = attributes.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let mut objects = Vec::new();
        let mut incidence = Vec::new();
        for e in model.entities.values() {
            objects.push(e.name.clone());
            incidence.push(e.attributes.iter().map(|a| index[a.sort.as_str()]).collect());
        }
        FormalContext {
            objects,
            attributes,
            incidence,
        }
    }

    /// Objects having every attribute in `intent`.
    pub fn extent_of(&self, intent: &BTreeSet<usize>) -> BTreeSet<usize> {
        (0..self.objects.len())
            .filter(|&g| intent.is_subset(&self.incidence[g]))
            .collect()
    }

    /// Attributes shared by every object in `extent`.
    pub fn intent_of(&self, extent: &BTreeSet<usize>) -> BTreeSet<usize> {
        (0..self.attributes.len())
            .filter(|m| extent.iter().all(|&g| self.incidence[g].contains(m)))
            .collect()
    }

    pub fn closure(&self, intent: &BTreeSet<usize>) -> BTreeSet<usize> {
        self.intent_of(&self.extent_of(intent))
    }

    /// The lectically next closed intent after `current`, if any.
    fn next_closure(&self, current: &BTreeSet<usize>) -> Option<BTreeSet<usize>> {
        let m = self.attributes.len();
        for i in (0..m).rev() {
            if current.contains(&i) {
                continue;
            }
            let mut candidate: BTreeSet<usize> = current.range(..i).copied().collect();
            candidate.insert(i);
            let closed = self.closure(&candidate);
            let prefix_unchanged = closed.range(..i).eq(current.range(..i));
            if prefix_unchanged {
                return Some(closed);
            }
        }
        None
    }

    /// All closed intents in lectic order.
    pub fn intents(&self) -> Vec<BTreeSet<usize>> {
        let mut out = vec![self.closure(&BTreeSet::new())];
        while let Some(next) = self.next_closure(out.last().unwrap()) {
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub extent: BTreeSet<String>,
    pub intent: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptualLattice {
    pub concepts: Vec<Concept>,
    /// Cover relation as (subconcept, superconcept) index pairs.
    pub hasse: Vec<(usize, usize)>,
}

impl ConceptualLattice {
    pub fn from_context(ctx: &FormalContext) -> ConceptualLattice {
        let mut extents = Vec::new();
        let mut concepts = Vec::new();
        for intent in ctx.intents() {
            let extent = ctx.extent_of(&intent);
            concepts.push(Concept {
                extent: extent.iter().map(|&g| ctx.objects[g].clone()).collect(),
                intent: intent.iter().map(|&m| ctx.attributes[m].clone()).collect(),
            });
            extents.push(extent);
        }
        let hasse = cover_relation(&extents);
        ConceptualLattice { concepts, hasse }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, id: ConceptId) -> Result<&Concept, LatticeError> {
        self.concepts.get(id.0).ok_or(LatticeError::UnknownConcept(id.0))
    }

    /// The concept whose extent is every object.
    pub fn top(&self) -> ConceptId {
        ConceptId(
            (0..self.concepts.len())
                .max_by_key(|&i| self.concepts[i].extent.len())
                .unwrap_or(0),
        )
    }

    /// The concept whose intent is every attribute.
    pub fn bottom(&self) -> ConceptId {
        ConceptId(
            (0..self.concepts.len())
                .max_by_key(|&i| self.concepts[i].intent.len())
                .unwrap_or(0),
        )
    }

    pub fn find_by_intent(&self, intent: &BTreeSet<String>) -> Option<ConceptId> {
        self.concepts.iter().position(|c| &c.intent == intent).map(ConceptId)
    }

    /// The smallest concept whose extent contains `object`.
    pub fn object_concept(&self, object: &str) -> Option<ConceptId> {
        (0..self.concepts.len())
            .filter(|&i| self.concepts[i].extent.contains(object))
            .min_by_key(|&i| self.concepts[i].extent.len())
            .map(ConceptId)
    }

    /// True when `general` is reachable from `specific` by walking cover
    /// edges upward, i.e. `specific` is a subconcept of `general`.
    pub fn subsumes(&self, general: ConceptId, specific: ConceptId) -> Result<bool, LatticeError> {
        self.concept(general)?;
        self.concept(specific)?;
        let mut seen = vec![false; self.concepts.len()];
        let mut queue = VecDeque::from([specific.0]);
        while let Some(c) = queue.pop_front() {
            if c == general.0 {
                return Ok(true);
            }
            if std::mem::replace(&mut seen[c], true) {
                continue;
            }
            queue.extend(self.hasse.iter().filter(|(s, _)| *s == c).map(|(_, g)| *g));
        }
        Ok(false)
    }

    fn label(c: &Concept) -> String {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        format!("{{{}}} | {{{}}}", join(&c.extent), join(&c.intent))
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph \"{name}\" {{\n  rankdir=BT;\n");
        for (i, c) in self.concepts.iter().enumerate() {
            out.push_str(&format!("  c{i} [label=\"{}\"];\n", Self::label(c)));
        }
        for (s, g) in &self.hasse {
            out.push_str(&format!("  c{s} -> c{g};\n"));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.concepts.iter().enumerate() {
            out.push_str(&format!("c{i}: {}\n", Self::label(c)));
        }
        for (s, g) in &self.hasse {
            out.push_str(&format!("c{s} < c{g}\n"));
        }
        out
    }
}

/// Covers of strict extent inclusion.
fn cover_relation(extents: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let below = |a: usize, b: usize| a != b && extents[a].is_subset(&extents[b]) && extents[a] != extents[b];
    let n = extents.len();
    let mut edges = Vec::new();
    for s in 0..n {
        for g in 0..n {
            if below(s, g) && !(0..n).any(|k| below(s, k) && below(k, g)) {
                edges.push((s, g));
            }
        }
    }
    edges
}

pub fn build_conceptual_lattice(
    model: &InformationModel,
    sorts: &SortSystem,
) -> Result<ConceptualLattice, LatticeError> {
    let report = check_wellformed(model, sorts);
    if report.has_errors() {
        return Err(LatticeError::ModelNotWellFormed(report.errors().cloned().collect()));
    }
    Ok(ConceptualLattice::from_context(&FormalContext::from_model(model)))
}
