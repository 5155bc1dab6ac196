//! Synthetic sensor: scripted finger motion with ground truth, rendered into
//! grayscale frames.

pub mod corpus;
pub mod io;
pub mod render;
pub mod script;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::hand::FingerId;

pub use corpus::{
    default_corpus, default_scripts, make_corpus, Corpus, CorpusItem, ScriptFamily, DEFAULT_CORPUS_SIZE,
};
pub use render::{render_frame, Frame, NoiseModel};
pub use script::{generate_trace, FingerState, GestureScript, HandTraceRecord, ScriptKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("noise sigmas must be non-negative")]
    InvalidNoise,
    #[error("finger {finger} leaves the camera view at t = {t_ms} ms")]
    OutOfView { t_ms: u64, finger: FingerId },
    #[error("fingers {a} and {b} collide at t = {t_ms} ms")]
    Collision { t_ms: u64, a: FingerId, b: FingerId },
    #[error("frame has {actual} pixels, expected {expected}")]
    FrameSize { expected: usize, actual: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
