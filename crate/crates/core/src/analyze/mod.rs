//! Analyses over event networks: predicate filtering, person-location-time
//! tracking, action co-occurrence and social-network queries. Every result
//! is itself an [`EventNetwork`](crate::netmodel::EventNetwork).

mod action;
mod filter;
mod plt;
mod social;

pub use action::{
    action_analysis, action_training_set, candidate_sentences, cooccurrence_network, count_cooccurrences,
    generate_action_negatives, ActionModel, ActionParams, ActionReport, CandidateSentence, Entity, NO_ACTION,
};
pub use filter::{filter_network, Clause, Predicate, Target};
pub use plt::{plt_analysis, select_phys_mentions, PhysMention};
pub use social::{adjacency, ego_network, path_network, shortest_path};

use thiserror::Error;

use crate::learn::LearnError;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("vertex not found: {0:?}")]
    VertexNotFound(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Learn(#[from] LearnError),
}

pub type Result<T> = std::result::Result<T, AnalyzeError>;
