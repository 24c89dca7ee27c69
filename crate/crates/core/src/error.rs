use alloc::string::String;

use crate::ranker::TaskKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate review id `{0}`")]
    DuplicateId(String),

    #[error("review `{id}`: {reason}")]
    InvalidReview { id: String, reason: String },

    #[error("invalid label field `{field}`: {reason}")]
    InvalidLabel { field: &'static str, reason: String },

    #[error("unknown operation `{0}` (expected 0, 1, 2 or NEI)")]
    UnknownOperation(String),

    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(f64),

    #[error("class index {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("invalid layer sizes: {0}")]
    InvalidLayerSizes(String),

    #[error("dimension mismatch: expected input of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training data is empty")]
    EmptyTrainingData,

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),

    #[error("cannot split {ids} reviews into {k} folds")]
    NotEnoughReviews { ids: usize, k: usize },

    #[error("fold {fold}: training split for the {task} model has no samples of class {class}")]
    MissingClass {
        fold: usize,
        task: TaskKind,
        class: usize,
    },

    #[error("synonym `{word}` maps to both `{first}` and `{second}`")]
    SynonymConflict {
        word: String,
        first: String,
        second: String,
    },
}
