//! Configuration, end-to-end runs, evaluation, the hover-resolution sweep and
//! the command-line front end.

pub mod cli;
pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod sweep;

use std::path::Path;

use thiserror::Error;

use crate::synthkit::SynthError;
use crate::textio::FormatError;
use crate::touchfsm::FsmError;

pub use config::{ConfigError, PipelineConfig};
pub use metrics::{match_events, ConfusionCounts, EvalReport, EventMatch, TraceEval};
pub use pipeline::{evaluate_corpus, run_trace, truth_events, truth_labels, CorpusEval, TraceRun};
pub use sweep::{hover_resolution_sweep, sweep_methods, SweepMethod, SweepResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    File { path: String, source: FormatError },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error("{0}")]
    Data(String),
}

impl HarnessError {
    /// 2 for configuration problems, 3 for anything wrong with data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn in_file(path: &Path, source: FormatError) -> Self {
        HarnessError::File { path: path.display().to_string(), source }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::in_file(path, e.into()))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::in_file(dir, e.into()))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::in_file(path, e.into()))
}
