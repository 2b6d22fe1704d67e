//! One list of findings across every check a model goes through before it
//! runs: well-formedness, the profile's commitments, and instantiation.

use std::fmt;

use mfgsim_core::{check_wellformed, verify_model, InformationModel, Ontology, ScenarioConfig, SortSystem};
use serde::Serialize;

use crate::{instantiate, FactoryError};

/// `source` is a commitment id, a well-formedness code, or one of
/// `missing-component`, `mode-mismatch`, `invalid-parameter`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub source: String,
    pub entity: String,
    /// The attribute, sort, rule or component concerned.
    pub item: String,
}

impl Finding {
    pub fn new(source: &str, entity: &str, item: &str) -> Finding {
        Finding {
            source: source.into(),
            entity: entity.into(),
            item: item.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.source, self.entity, self.item)
    }
}

fn from_error(model: &str, e: FactoryError) -> Option<Finding> {
    match e {
        FactoryError::MissingComponent { component, .. } => Some(Finding::new("missing-component", model, &component)),
        FactoryError::Ambiguous { component, .. } => Some(Finding::new("ambiguous-component", model, &component)),
        FactoryError::ModeMismatch { mode, .. } => Some(Finding::new("mode-mismatch", model, mode.keyword())),
        FactoryError::InvalidParameter { entity, attr, .. } => Some(Finding::new("invalid-parameter", &entity, &attr)),
        FactoryError::UnknownComponent { component, .. } => Some(Finding::new("unknown-component", model, &component)),
        FactoryError::InvalidScenario(reason) => Some(Finding::new("invalid-scenario", model, &reason)),
        // reported through the other checks
        _ => None,
    }
}

/// Every finding for `model` under `profile` and `config`. Component and
/// mode problems come first, then well-formedness errors, then violations.
pub fn audit(
    model: &InformationModel,
    profile: &Ontology,
    sorts: &SortSystem,
    config: &ScenarioConfig,
) -> Vec<Finding> {
    let mut wf: Vec<Finding> = check_wellformed(model, sorts)
        .errors()
        .map(|d| Finding::new(d.code.as_str(), &d.entity, &d.path))
        .collect();
    match verify_model(model, profile, sorts) {
        Ok(report) => wf.extend(
            report
                .violations
                .iter()
                .map(|v| Finding::new(&v.commitment, &v.entity, v.item.subject())),
        ),
        Err(e) => wf.push(Finding::new("ontology", &profile.name, &e.to_string())),
    }
    let mut out = Vec::new();
    match crate::plant::presence(model, sorts, config.mode) {
        Err(e) => out.extend(from_error(&model.name, e)),
        Ok(()) if wf.is_empty() => {
            if let Err(e) = instantiate(model, None, sorts, config) {
                out.extend(from_error(&model.name, e));
            }
        }
        Ok(()) => {}
    }
    out.extend(wf);
    out
}
