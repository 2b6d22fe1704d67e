//! The vertical interface from verified information models to runnable
//! plant scenarios, plus the plant simulator built on `mfgsim-engine`.
//!
//! ```
//! use mfgsim_core::parse_file;
//! use mfgsim_factory::{instantiate_scenario, simulate};
//!
//! let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/pilot/pilot.mim");
//! let ws = parse_file(dir).unwrap().workspace;
//! let plant = instantiate_scenario(&ws, "base", None).unwrap();
//! let report = simulate(&plant, 42, 3_600_000_000).unwrap();
//! assert!(report.conservation_holds());
//! ```

mod audit;
#[cfg(feature = "testgen")]
pub mod catalog;
mod estimate;
mod layout;
mod plant;
mod report;
mod sim;

use mfgsim_core::entity::Diagnostic;
use mfgsim_core::{TransferMode, ViolationReport, Workspace};
use mfgsim_engine::{EngineError, SimTime, WaitEdge};
use thiserror::Error;

pub use audit::{audit, Finding};
pub use estimate::{
    compare_metrics, compare_modes, estimate_transfer_capacity, od_demand, ComparisonReport, MetricGap, ModeMetrics,
    OdDemand, PairEstimate, TransferEstimate, DEFAULT_GAP_THRESHOLD,
};
pub use layout::{traversal_us, DetailedTransfer, Edge, EdgeKind, Node, NodeKind, Plan, Step, Vehicle};
pub use plant::{
    instantiate, AbstractTransfer, AgvFleet, AssemblyLine, ExecutableScenario, HomeStation, MachiningLine, Transfer,
    Warehouse, Q,
};
pub use report::{SimReport, TransferRecord, CSV_HEADER};
pub use sim::{simulate, simulate_with_probes, Probe};

#[derive(Debug, Error)]
pub enum FactoryError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown ontology `{0}`")]
    UnknownOntology(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("model `{model}` is not well formed ({} error(s))", diagnostics.len())]
    NotWellFormed {
        model: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("model `{}` violates ontology `{}` ({} violation(s))", .0.model, .0.ontology, .0.violations.len())]
    VerificationFailed(ViolationReport),
    #[error("model `{model}` has no {component}")]
    MissingComponent { model: String, component: String },
    #[error("model `{model}` has more than one {component}: {}", candidates.join(", "))]
    Ambiguous {
        model: String,
        component: String,
        candidates: Vec<String>,
    },
    #[error("model `{model}` cannot run in {mode} mode: {reason}")]
    ModeMismatch {
        model: String,
        mode: TransferMode,
        reason: String,
    },
    #[error("{entity}.{attr}: {reason}")]
    InvalidParameter {
        entity: String,
        attr: String,
        reason: String,
    },
    #[error("scenario `{scenario}` names unknown component `{component}`")]
    UnknownComponent { scenario: String, component: String },
    #[error("cannot compare model `{left}` with model `{right}`")]
    ModelMismatch { left: String, right: String },
    #[error("deadlock at {at}: {} blocked request(s)", waits.len())]
    DeadlockDetected { at: SimTime, waits: Vec<WaitEdge> },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Resolves scenario `name` in `ws` and instantiates the model it binds for
/// its mode (or `mode`, when given) against its profile ontology.
pub fn instantiate_scenario(
    ws: &Workspace,
    name: &str,
    mode: Option<TransferMode>,
) -> Result<ExecutableScenario, FactoryError> {
    let mut config = ws
        .scenarios
        .get(name)
        .cloned()
        .ok_or_else(|| FactoryError::UnknownScenario(name.to_string()))?;
    if let Some(m) = mode {
        config.mode = m;
    }
    let model_name = config.bound_model().unwrap_or(&config.model).to_string();
    let model = ws
        .model(&model_name)
        .ok_or_else(|| FactoryError::UnknownModel(model_name.clone()))?;
    let profile = match &config.profile {
        Some(p) => Some(ws.ontology(p).ok_or_else(|| FactoryError::UnknownOntology(p.clone()))?),
        None => None,
    };
    instantiate(model, profile, &ws.sorts, &config)
}
