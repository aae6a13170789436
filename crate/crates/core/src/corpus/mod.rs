//! Document ingestion, Omni-word tokenization, vocabulary construction and
//! time slicing.
//!
//! Everything produced here is immutable once built and can be shared across
//! threads freely.

mod document;
mod lexicon;
mod timeslice;
mod vocabulary;

pub use document::{
    ingest_documents, ingest_reader, Document, DocumentFormat, DocumentStore, IngestMode,
    IngestReport, LineError,
};
pub use lexicon::{omni_word_spans, tokenize_omni_word, Lexicon, TermBag, TermSpan};
pub use timeslice::{partition_by_time, TimeSlice};
pub use vocabulary::{build_vocabulary, build_vocabulary_from_bags, Vocabulary, VocabularyOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("lexicon is empty")]
    EmptyLexicon,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Tokenizes every document of the store, in store order.
pub fn tokenize_store(store: &DocumentStore, lexicon: &Lexicon) -> Vec<TermBag> {
    use rayon::prelude::*;
    store
        .documents()
        .par_iter()
        .map(|d| tokenize_omni_word(&d.text, lexicon))
        .collect()
}
