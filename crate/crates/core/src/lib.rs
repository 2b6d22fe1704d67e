//! Order-sorted information models for manufacturing systems.
//!
//! Sorts and sort sets, entity specifications with functors and rules,
//! ontologies with verification, conceptual lattices, abstraction and
//! refinement, scenario bindings, and the `.mim` workspace language.

pub mod abstraction;
pub mod dsl;
pub mod entity;
pub mod expr;
pub mod lattice;
pub mod number;
pub mod ontology;
pub mod scenario;
pub mod sorts;
#[cfg(feature = "testgen")]
pub mod testgen;

pub use dsl::{parse, parse_file, print, ParseDiagnostic, Parsed, SourceSpan, Workspace};
pub use entity::{
    check_wellformed, evaluate_rules, structure_graph, Attribute, AttributeValue, DataValue, Diagnostic, EntityKind,
    EntitySpec, Functor, FunctorFunction, FunctorMode, InformationModel, Rule, Severity,
};
pub use expr::{CmpOp, Expr};
pub use number::{Number, Unit};
pub use ontology::{verify_model, Commitment, Ontology, Requirement, ViolationReport};
pub use scenario::{Demand, ScenarioConfig, TransferMode};
pub use sorts::{Alphabet, SortSet, SortSystem};
