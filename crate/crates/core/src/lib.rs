//! Scoring core for code review confidence estimation.
//!
//! Every review in a labeled corpus gets a confidence score from three small
//! feed-forward classifiers, one per developer question:
//!
//! * was it clear what to add (2 classes),
//! * was it clear what to remove (2 classes),
//! * which operation the review asks for (replace, delete, insert).
//!
//! The probability each model assigns to the developer's actual answer is
//! collected while the review sits in the validation fold of a k-fold run, and
//! the three probabilities are combined with a geometric mean. Reviews labeled
//! "not enough information" score exactly zero and never enter training.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and the
//! labeling service live in the `reviewranker` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod neuralnet;
pub mod ranker;
pub mod textprep;
pub mod vectorizer;

mod error;

pub use corpus::{Entry, LabeledCorpus, LintWarning, OperationType, Review, ReviewLabel};
pub use error::{Error, Result};
pub use neuralnet::{ModelParams, ProbabilityDistribution, TrainConfig};
pub use ranker::{ConfidenceRecord, FoldAssignment, PipelineConfig, TaskKind};
pub use textprep::{SynonymMap, TokenSequence, Vocabulary};
pub use vectorizer::FeatureVector;
