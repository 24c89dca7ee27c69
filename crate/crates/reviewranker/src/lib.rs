//! File formats, the parallel scoring run, the label service and the
//! command-line front end built on `reviewranker-core`.

pub mod checkpoint;
pub mod cli;
pub mod corpus_io;
mod error;
pub mod labelserve;
pub mod run;
pub mod scores;
pub mod stats;

pub use error::{Error, RecordError, Result};
