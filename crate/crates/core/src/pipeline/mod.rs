//! End-to-end orchestration over an artifact directory:
//!
//! ```text
//! out/
//!   config.txt          effective configuration
//!   state.json          completed stages, for resuming
//!   ingest.json         accepted and rejected corpus lines
//!   slices/index.json
//!   events/t{i}.json    event tree of slice i
//!   bundles/{id}.json   extraction bundle per event, `/` in ids as `_`
//!   networks/{id}.json  canonical network JSON per event
//!   models/             vocabulary.json, lexicon.txt, relation.json,
//!                       action.json, recognizer.json
//! ```

mod config;
mod query;
mod run;

pub use config::{PipelineConfig, RecognizerChoice, KEYS};
pub use query::{normalize_event_id, Analysis, Params, QueryError, QueryResult, SliceSummary, Workspace};
pub use run::{
    id_to_file, load_action_model, load_vocabulary, ActionFile, Artifacts, Models, Pipeline, RunSummary, Stage, Task,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bad artifact {0}")]
    Artifact(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;
