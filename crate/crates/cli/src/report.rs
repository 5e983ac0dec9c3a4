//! Report plumbing shared by every subcommand: the resolved run
//! configuration, the JSON envelope, and small output helpers.
//!
//! Reports are deterministic for fixed inputs and seed except for the
//! `timestamp` field, which records wall-clock seconds and is excluded
//! from any byte-level comparison.

use lipcert_core::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Version of the report layout; bumped on any field change so consumers
/// can dispatch instead of sniffing.
pub const SCHEMA_VERSION: u32 = 1;

/// Seed used when no `--seed` is given, so repeated runs agree bit for bit.
pub const DEFAULT_SEED: u64 = 0x11bc_e47;

/// The fully resolved invocation, embedded verbatim in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    /// Subcommand that produced the report.
    pub subcommand: &'static str,
    /// Network specification path, when the subcommand takes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    /// RNG seed every stochastic step derives from.
    pub seed: u64,
    /// Further input paths by role (signal, spectrum, classifier, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<&'static str, String>,
    /// Output paths by role (report, table, payload directory, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<&'static str, String>,
    /// Sample counts and other integer knobs by role.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<&'static str, u64>,
    /// Real-valued knobs by role (tolerances, search radii).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub knobs: BTreeMap<&'static str, f64>,
}

impl RunConfig {
    pub fn new(
        subcommand: &'static str,
        seed: u64,
        report_out: &Option<std::path::PathBuf>,
    ) -> Self {
        let mut config = RunConfig {
            subcommand,
            spec: None,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            counts: BTreeMap::new(),
            knobs: BTreeMap::new(),
        };
        if let Some(path) = report_out {
            config.outputs.insert("report", path.display().to_string());
        }
        config
    }

    pub fn spec(mut self, path: &Path) -> Self {
        self.spec = Some(path.display().to_string());
        self
    }

    pub fn input(mut self, role: &'static str, path: &Path) -> Self {
        self.inputs.insert(role, path.display().to_string());
        self
    }

    pub fn output(mut self, role: &'static str, path: &Path) -> Self {
        self.outputs.insert(role, path.display().to_string());
        self
    }

    pub fn count(mut self, role: &'static str, value: u64) -> Self {
        self.counts.insert(role, value);
        self
    }

    pub fn knob(mut self, role: &'static str, value: f64) -> Self {
        self.knobs.insert(role, value);
        self
    }
}

/// Envelope wrapped around every JSON report body.
#[derive(Serialize)]
struct Report<B: Serialize> {
    schema_version: u32,
    /// Wall-clock seconds since the Unix epoch; the one nondeterministic
    /// field, ignored when comparing reports.
    timestamp: u64,
    config: RunConfig,
    #[serde(flatten)]
    body: B,
}

/// Tolerances, budgets, and grid settings attached to a body's numeric results.
#[derive(Clone, Debug, Serialize)]
pub struct Numerics {
    /// Relative tolerance iterative estimates were run to.
    pub tolerance: f64,
    /// Iteration budget per estimate.
    pub max_iter: usize,
    /// Frequency scan window and sample count (continuous domains only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_grid: Option<GridMeta>,
    /// Feasibility/optimality tolerances of the chain program, when one
    /// was solved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_program: Option<ChainTolerances>,
}

/// Scan window behind continuous-domain suprema.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridMeta {
    pub band: f64,
    pub samples: usize,
}

/// Simplex tolerances. The solver treats constraint residuals below
/// `feasibility` as satisfied and reduced costs below `optimality` as
/// nonpositive; both are fixed in the solver.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChainTolerances {
    pub feasibility: f64,
    pub optimality: f64,
}

impl ChainTolerances {
    pub fn fixed() -> Self {
        ChainTolerances { feasibility: 1e-10, optimality: 1e-9 }
    }
}

/// Serializes the enveloped report to `--out` or standard output.
pub fn emit<B: Serialize>(config: RunConfig, body: B, out: Option<&Path>) -> Result<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap_or_default()
            .as_secs(),
        config,
        body,
    };
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Maps a CSV-writer failure into the shared error type.
pub fn csv_failure(e: csv::Error) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
}

/// Formats an optional magnitude for a CSV cell (empty when absent).
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
