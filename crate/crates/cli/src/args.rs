use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfgsim_core::scenario::duration_unit;
use mfgsim_core::TransferMode;
use mfgsim_library::Kind;

#[derive(Debug, Parser)]
#[command(
    name = "mfgsim",
    version,
    about = "Information models and simulation of manufacturing systems"
)]
pub(crate) struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Parse a workspace and check every model for well-formedness.
    Check { file: PathBuf },
    /// Verify models against an ontology.
    Verify {
        file: PathBuf,
        #[arg(long)]
        ontology: String,
        /// Only this model (default: all).
        #[arg(long)]
        model: Option<String>,
    },
    /// Print the conceptual lattice of each model.
    Lattice {
        file: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_enum, default_value_t = LatticeFormat::Text)]
        out: LatticeFormat,
    },
    /// Rewrite models with an abstracting sort map.
    Abstract {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite models with a refining sort map and an expansion.
    Refine {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long)]
        expansion: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project models through a sort set.
    View {
        file: PathBuf,
        #[arg(long)]
        sortset: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a detailed model against an abstract one. Operands are FILE or FILE:MODEL.
    Coordinate {
        #[arg(value_name = "ABSTRACT")]
        abstract_model: String,
        #[arg(value_name = "DETAILED")]
        detailed_model: String,
        #[arg(long)]
        mapping: String,
    },
    /// Fleet sizing from the abstract transfer model.
    Estimate {
        file: PathBuf,
        #[arg(long)]
        scenario: String,
    },
    /// Run a scenario.
    Simulate(SimulateArgs),
    /// Compare the abstract estimate with a detailed run.
    Compare {
        file: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_duration)]
        horizon: Option<u64>,
        /// Relative gap above which a metric is flagged.
        #[arg(long, default_value_t = mfgsim_factory::DEFAULT_GAP_THRESHOLD)]
        threshold: f64,
        /// Also write the comparison as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The versioned model library.
    Lib {
        #[command(subcommand)]
        command: LibCommand,
    },
}

#[derive(Debug, Args)]
pub(crate) struct SimulateArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub scenario: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Inclusive seed range `A..B`, run concurrently with one output file per seed.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<(u64, u64)>,
    #[arg(long, value_parser = parse_duration)]
    pub horizon: Option<u64>,
    /// CSV report path (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON-lines trace path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Store each report in the library as a result item.
    #[arg(long)]
    pub record: bool,
    #[arg(long, env = "MFGSIM_LIB_ROOT")]
    pub root: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub(crate) enum LibCommand {
    /// Store a file as the next version of an item.
    Add {
        #[arg(long, env = "MFGSIM_LIB_ROOT")]
        root: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long)]
        name: String,
        file: PathBuf,
    },
    /// Write an item's payload.
    Get {
        #[arg(long, env = "MFGSIM_LIB_ROOT")]
        root: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long)]
        name: String,
        #[arg(long)]
        version: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List stored items.
    List {
        #[arg(long, env = "MFGSIM_LIB_ROOT")]
        root: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<Kind>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum LatticeFormat {
    Dot,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum ModeArg {
    Abstract,
    Detailed,
}

impl From<ModeArg> for TransferMode {
    fn from(m: ModeArg) -> TransferMode {
        match m {
            ModeArg::Abstract => TransferMode::Abstract,
            ModeArg::Detailed => TransferMode::Detailed,
        }
    }
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: mfgsim_library::LibraryError| e.to_string())
}

/// An integer followed by one of `us`, `ms`, `s`, `m`, `h`, in microseconds.
pub fn parse_duration(s: &str) -> Result<u64, String> {
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, unit) = s.split_at(split);
    if digits.is_empty() {
        return Err(format!("`{s}` is not a duration; expected e.g. 90s or 8h"));
    }
    let per = duration_unit(unit).ok_or_else(|| format!("unknown duration unit `{unit}` (use us, ms, s, m or h)"))?;
    digits
        .parse::<u64>()
        .ok()
        .and_then(|n| n.checked_mul(per))
        .ok_or_else(|| format!("duration `{s}` is out of range"))
}

/// `A..B`, both ends included.
pub fn parse_seeds(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not a seed range A..B"))?;
    let a: u64 = a.parse().map_err(|_| format!("bad seed `{a}`"))?;
    let b: u64 = b.parse().map_err(|_| format!("bad seed `{b}`"))?;
    if a > b {
        return Err(format!("empty seed range {s}"));
    }
    Ok((a, b))
}
