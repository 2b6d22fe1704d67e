//! Simulation scenario bindings as they appear in a workspace.
//!
//! Durations are integral microseconds throughout.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MICROS_PER_SECOND: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("scenario `{0}`: horizon must be positive")]
    ZeroHorizon(String),
    #[error("scenario `{scenario}`: demand for `{line}` needs a positive interval")]
    ZeroInterval { scenario: String, line: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    Abstract,
    Detailed,
}

impl TransferMode {
    pub fn keyword(&self) -> &'static str {
        match self {
            TransferMode::Abstract => "abstract",
            TransferMode::Detailed => "detailed",
        }
    }

    pub fn from_keyword(s: &str) -> Option<TransferMode> {
        match s {
            "abstract" => Some(TransferMode::Abstract),
            "detailed" => Some(TransferMode::Detailed),
            _ => None,
        }
    }
}

impl fmt::Display for TransferMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Part-release schedule for one machining line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Demand {
    /// One part every `interval_us`, the first at `offset_us`.
    Every { interval_us: u64, offset_us: u64 },
    /// `count` parts released together at `at_us`.
    Batch { count: u64, at_us: u64 },
    /// Exponential interarrival with the given mean, drawn from the `demand` stream.
    Exponential { mean_us: u64, offset_us: u64 },
}

impl Demand {
    /// Long-run releases per hour.
    pub fn rate_per_hour(&self) -> f64 {
        match *self {
            Demand::Every { interval_us, .. } => 3600.0 * MICROS_PER_SECOND as f64 / interval_us as f64,
            Demand::Exponential { mean_us, .. } => 3600.0 * MICROS_PER_SECOND as f64 / mean_us as f64,
            Demand::Batch { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    /// Logical model name used in reports and the library.
    pub model: String,
    pub abstract_model: Option<String>,
    pub detailed_model: Option<String>,
    /// Ontology the bound model must satisfy before instantiation.
    pub profile: Option<String>,
    pub mode: TransferMode,
    pub horizon_us: u64,
    pub seed: u64,
    pub demand: BTreeMap<String, Demand>,
    /// Which line outputs feed which downstream component.
    pub routes: Vec<RouteEntry>,
}

impl ScenarioConfig {
    pub fn new(name: &str, model: &str) -> ScenarioConfig {
        ScenarioConfig {
            name: name.to_string(),
            model: model.to_string(),
            abstract_model: None,
            detailed_model: None,
            profile: None,
            mode: TransferMode::Detailed,
            horizon_us: 8 * 3600 * MICROS_PER_SECOND,
            seed: 0,
            demand: BTreeMap::new(),
            routes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon_us == 0 {
            return Err(ScenarioError::ZeroHorizon(self.name.clone()));
        }
        for (line, d) in &self.demand {
            let interval = match d {
                Demand::Every { interval_us, .. } => *interval_us,
                Demand::Exponential { mean_us, .. } => *mean_us,
                Demand::Batch { .. } => 1,
            };
            if interval == 0 {
                return Err(ScenarioError::ZeroInterval {
                    scenario: self.name.clone(),
                    line: line.clone(),
                });
            }
        }
        Ok(())
    }

    /// The information model bound for the configured mode.
    pub fn bound_model(&self) -> Option<&str> {
        match self.mode {
            TransferMode::Abstract => self.abstract_model.as_deref(),
            TransferMode::Detailed => self.detailed_model.as_deref(),
        }
    }
}

const DURATION_UNITS: [(&str, u64); 5] = [
    ("h", 3600 * MICROS_PER_SECOND),
    ("m", 60 * MICROS_PER_SECOND),
    ("s", MICROS_PER_SECOND),
    ("ms", 1000),
    ("us", 1),
];

/// Microseconds per duration unit suffix (`us`, `ms`, `s`, `m`, `h`).
pub fn duration_unit(suffix: &str) -> Option<u64> {
    DURATION_UNITS.iter().find(|(s, _)| *s == suffix).map(|(_, us)| *us)
}

/// Prints with the largest unit that divides the value evenly.
pub fn format_duration(us: u64) -> String {
    if us == 0 {
        return "0s".to_string();
    }
    let (suffix, per) = DURATION_UNITS
        .iter()
        .find(|(_, per)| us.is_multiple_of(*per))
        .expect("us divides everything");
    format!("{}{}", us / per, suffix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_use_largest_exact_unit() {
        assert_eq!(format_duration(8 * 3600 * MICROS_PER_SECOND), "8h");
        assert_eq!(format_duration(90 * MICROS_PER_SECOND), "90s");
        assert_eq!(format_duration(120 * MICROS_PER_SECOND), "2m");
        assert_eq!(format_duration(1500), "1500us");
        assert_eq!(format_duration(2000), "2ms");
        assert_eq!(format_duration(0), "0s");
        assert_eq!(duration_unit("ms"), Some(1000));
        assert_eq!(duration_unit("d"), None);
    }

    #[test]
    fn validation() {
        let mut s = ScenarioConfig::new("s", "pilot");
        assert!(s.validate().is_ok());
        s.demand.insert(
            "ML1".into(),
            Demand::Every {
                interval_us: 0,
                offset_us: 0,
            },
        );
        assert!(matches!(s.validate(), Err(ScenarioError::ZeroInterval { .. })));
        s.demand.clear();
        s.horizon_us = 0;
        assert_eq!(s.validate(), Err(ScenarioError::ZeroHorizon("s".into())));
    }

    #[test]
    fn rates() {
        let d = Demand::Every {
            interval_us: 120 * MICROS_PER_SECOND,
            offset_us: 0,
        };
        assert_eq!(d.rate_per_hour(), 30.0);
    }
}
