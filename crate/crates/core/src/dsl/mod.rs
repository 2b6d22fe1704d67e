//! The `.mim` workspace language: parser and canonical printer.
//!
//! A workspace file is a sequence of keyword-introduced blocks:
//!
//! ```text
//! sortset mfg { sort Track; sort StraightTrack < Track; }
//! rank mfg < cost_view;
//! alphabet { symbol AGV1 : mfg.AGV; }
//! ontology profile over mfg { commitment agv on AGV { require speed : Speed; } }
//! model pilot in mfg { entity AGV1 : AGV kind object { attr speed : Speed = 1 m/s; } }
//! abstractmap up in mfg { StraightTrack -> Track as tracks aggregate; }
//! refinemap down in mfg { Track -> StraightTrack; }
//! expansion split { Route.elements { attr t1 : StraightTrack = ref T1; } }
//! modemap fig5 { Route { travel_times <- Path1.nodes, Path2.nodes as aggregate; } }
//! scenario base { model pilot; detailed pilot; horizon 8h; seed 42; }
//! include "other.mim";
//! ```
//!
//! Parsing stops at the first syntax error. Name resolution errors are
//! collected together; entity well-formedness findings are attached to the
//! successful result.

mod lexer;
mod parser;
mod printer;
mod resolve;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abstraction::{Expansion, ModeMapping, SortMap};
use crate::entity::{check_wellformed, InformationModel, Severity, WellformednessReport};
use crate::ontology::Ontology;
use crate::scenario::ScenarioConfig;
use crate::sorts::{Alphabet, SortSystem};

pub use printer::print;

/// Location of a diagnostic. Line and column are 1-based; length counts
/// characters and may be zero (end of input).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, column: usize, length: usize) -> SourceSpan {
        SourceSpan {
            file: file.to_string(),
            line,
            column,
            length,
        }
    }

    /// True when the span lies inside `text` (an end-of-input span counts).
    pub fn within(&self, text: &str) -> bool {
        if self.line == 0 || self.column == 0 {
            return false;
        }
        let lines: Vec<&str> = text.split('\n').collect();
        let Some(line) = lines.get(self.line - 1) else {
            return false;
        };
        let width = line.chars().count();
        // A span may run across line ends (multi-line strings); only the start is checked
        // against the line, the end against the remaining text.
        let before: usize = lines[..self.line - 1].iter().map(|l| l.chars().count() + 1).sum();
        let start = before + self.column - 1;
        self.column <= width + 1 && start + self.length <= text.chars().count()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn error(span: SourceSpan, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            span,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(span: SourceSpan, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            span,
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

/// Everything one `.mim` file (plus its includes) declares.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Workspace {
    pub sorts: SortSystem,
    pub alphabet: Alphabet,
    pub ontologies: BTreeMap<String, Ontology>,
    pub models: BTreeMap<String, InformationModel>,
    pub sort_maps: BTreeMap<String, SortMap>,
    pub expansions: BTreeMap<String, Expansion>,
    pub mode_mappings: BTreeMap<String, ModeMapping>,
    pub scenarios: BTreeMap<String, ScenarioConfig>,
}

impl Workspace {
    pub fn model(&self, name: &str) -> Option<&InformationModel> {
        self.models.get(name)
    }

    pub fn ontology(&self, name: &str) -> Option<&Ontology> {
        self.ontologies.get(name)
    }

    /// Well-formedness of every model, by model name.
    pub fn wellformedness(&self) -> BTreeMap<String, WellformednessReport> {
        self.models
            .iter()
            .map(|(name, m)| (name.clone(), check_wellformed(m, &self.sorts)))
            .collect()
    }
}

/// A successful parse: the workspace plus its well-formedness findings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub workspace: Workspace,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl Parsed {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }
}

/// Parses workspace text. Includes resolve against the current directory.
pub fn parse(text: &str) -> Result<Parsed, Vec<ParseDiagnostic>> {
    parse_named(text, "<input>", Path::new("."))
}

/// Parses `text` as if read from `file`; includes resolve against `base_dir`.
pub fn parse_named(text: &str, file: &str, base_dir: &Path) -> Result<Parsed, Vec<ParseDiagnostic>> {
    let mut loader = resolve::Loader::default();
    let items = loader.load_text(text, file, base_dir)?;
    resolve::build(items)
}

/// Reads and parses a workspace file.
pub fn parse_file(path: impl AsRef<Path>) -> Result<Parsed, Vec<ParseDiagnostic>> {
    let path = path.as_ref();
    let mut loader = resolve::Loader::default();
    let items = loader.load_file(path, None)?;
    resolve::build(items)
}

#[cfg(test)]
mod tests;
