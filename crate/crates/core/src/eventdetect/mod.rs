//! Document event detection: per-slice LDA, nearest-centroid clustering, and
//! one level of sub-event refinement.

mod events;
mod lda;

pub use events::{
    assign_events, detect_hierarchical, document_vector, nearest_centroid, DetectParams, DocumentEvent,
    EventLevel,
};
pub use lda::{fit_lda, LdaParams, TopicModel, WeightedWord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("empty term matrix")]
    EmptyTermMatrix,

    #[error("slice {0} has no documents")]
    EmptySlice(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DetectError>;
