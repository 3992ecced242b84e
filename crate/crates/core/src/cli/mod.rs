//! Configuration, artifact bookkeeping and the staged pipeline behind the command line tool.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod report;

pub use artifacts::{Manifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use config::{FieldFamily, PrecisionMode, RunConfig, WaveKind, TEMPLATE};
pub use pipeline::{acceptance_checks, run_pipeline, Check, PipelineOutcome};
