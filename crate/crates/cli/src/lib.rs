//! Scenario runner behind the `nli` command: configuration files, the
//! format × estimator matrix, CSV/SVG outputs and report comparison.

pub mod config;
pub mod diff;
pub mod formats;
pub mod output;
pub mod runner;

pub use config::{Scenario, ScenarioConfig};
pub use diff::{diff_reports, DiffReport};
pub use formats::{FormatSpec, PreparedFormat};
pub use output::{read_report, ReportFile};
pub use runner::{run, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("threshold breach: {0}")]
    Threshold(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Threshold(_) => 3,
        }
    }
}

impl From<nli_core::Error> for CliError {
    fn from(e: nli_core::Error) -> Self {
        match e {
            nli_core::Error::Config(_) | nli_core::Error::Parse { .. } => CliError::Config(e.to_string()),
            nli_core::Error::Io(e) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Built-in formats and the accepted format-string syntax.
pub fn list_formats() -> String {
    let mut s = String::from("built-in formats:\n");
    for n in nli_core::formats::builtin_names() {
        let c = nli_core::formats::builtin(n).expect("built-in formats load");
        s.push_str(&format!("  {n:<14} M={:<4} H={:.2} bit/4D\n", c.len(), c.entropy_bits()));
    }
    s.push_str(
        "other forms:\n  file:<path>                                   constellation file (`M=<int> dims=4`, rows `xr xi yr yi [prob]`)\n  ps:<base>:entropy=<bits>:n=<len|inf>[:layout=per_pol|joint4d]   Maxwell-Boltzmann shaping with constant-composition blocks\n",
    );
    s
}
