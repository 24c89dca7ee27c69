//! Score files: `review_id,c_add,c_remove,c_operation,score,excluded`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use reviewranker_core::ConfidenceRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};

pub const HEADER: [&str; 6] = ["review_id", "c_add", "c_remove", "c_operation", "score", "excluded"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    review_id: String,
    c_add: Option<f64>,
    c_remove: Option<f64>,
    c_operation: Option<f64>,
    score: f64,
    #[serde(with = "reviewranker_core::corpus::binary")]
    excluded: bool,
}

/// Writes one row per record. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_scores<W: Write>(records: &[ConfidenceRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(Row {
            review_id: r.review_id.clone(),
            c_add: r.c_add,
            c_remove: r.c_remove,
            c_operation: r.c_operation,
            score: r.score,
            excluded: r.excluded,
        })?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn export_scores(records: &[ConfidenceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores(records, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_scores<R: Read>(reader: R, path: &Path) -> Result<Vec<ConfidenceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER) {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            errors: vec![RecordError {
                line: 1,
                field: None,
                message: format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            }],
        });
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for row in rdr.deserialize::<Row>() {
        match row {
            Ok(r) => out.push(ConfidenceRecord {
                review_id: r.review_id,
                c_add: r.c_add,
                c_remove: r.c_remove,
                c_operation: r.c_operation,
                score: r.score,
                excluded: r.excluded,
            }),
            Err(e) => errors.push(RecordError {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                field: None,
                message: e.to_string(),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(out)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<ConfidenceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(file, path)
}
