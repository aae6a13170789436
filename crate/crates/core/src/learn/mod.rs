//! Maximum-entropy classification over bags of string features, shared by
//! relation typing and action detection.

mod eval;
mod maxent;
mod optim;

pub use eval::{
    cross_validate, cross_validate_thresholds, f_score, stratified_folds, Confusion, CvOptions, CvReport, Prf,
};
pub use maxent::{decide, predict, train_maxent, Classifier, Instance, Threshold, TrainConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("degenerate training set")]
    DegenerateTrainingSet,

    #[error("threshold {0} outside [0.5, 1.0]")]
    InvalidThreshold(f64),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LearnError>;
