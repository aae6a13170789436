//! Per-event entity-mention recognition and relation-mention classification.

mod annotations;
mod bundle;
mod recognizer;
mod relation;
mod sentence;

pub use annotations::{
    annotated_sentences, load_annotations, parse_annotations, write_annotations, AnnotatedEvent, AnnotatedMention,
    AnnotatedRelation, AnnotatedSentence, DocAnnotation,
};
pub use bundle::{extract_document, extract_event, DocumentExtraction, ExtractionBundle, Extractor};
pub use recognizer::{
    assemble, recognize_entities, AnnotationRecognizer, BoundaryModelRecognizer, Boundaries, EntityMention,
    EntityRecognizer, EntityType, GazetteerRecognizer, GoldSentence, LengthBounds,
};
pub use relation::{
    candidate_pairs, extract_relations, relation_features, relation_instances, RelationExtractor, RelationMention,
    RelationType, NO_RELATION,
};
pub use sentence::{sentence_key, split_sentences, split_text, Sentence, TERMINATORS};

use std::path::Path;

use thiserror::Error;

use crate::learn::LearnError;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("document {0:?} not found in store")]
    MissingDocument(String),

    #[error("unknown type {0:?}")]
    UnknownType(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Learn(#[from] LearnError),
}

pub type Result<T> = std::result::Result<T, ExtractError>;

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ExtractError::Io {
        path: path.display().to_string(),
        source,
    })
}
