//! Corpus files.
//!
//! Two encodings carry the same fields:
//!
//! * CSV with the header
//!   `id,text,operation,add_understood,remove_understood,add_snippet,remove_snippet`,
//!   optionally followed by `project`, `context_urls` (space separated),
//!   `labeler_id` and `labeled_at`;
//! * JSON lines, one object per review with the same field names.
//!
//! `operation` is `0` (replace), `1` (delete), `2` (insert) or `NEI`; the
//! understanding answers are `0` or `1`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use reviewranker_core::corpus::parse_binary;
use reviewranker_core::{Entry, LabeledCorpus, OperationType, Review, ReviewLabel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};

pub const CSV_COLUMNS: [&str; 7] = [
    "id",
    "text",
    "operation",
    "add_understood",
    "remove_understood",
    "add_snippet",
    "remove_snippet",
];

const EXTRA_COLUMNS: [&str; 4] = ["project", "context_urls", "labeler_id", "labeled_at"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// `.csv` or `.jsonl` / `.ndjson`.
    pub fn from_path(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }

    pub fn resolve(explicit: Option<Format>, path: &Path) -> Result<Format> {
        explicit
            .or_else(|| Format::from_path(path))
            .ok_or_else(|| Error::UnknownFormat { path: path.to_path_buf() })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::Invalid(format!("unknown format `{other}` (expected csv or jsonl)"))),
        }
    }
}

/// A parsed corpus together with non-fatal findings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: LabeledCorpus,
    pub warnings: Vec<String>,
}

enum Value {
    Text(String),
    List(Vec<String>),
}

struct RawRecord {
    line: u64,
    fields: HashMap<String, Value>,
}

impl RawRecord {
    fn text(&self, field: &str) -> Option<&str> {
        match self.fields.get(field) {
            Some(Value::Text(s)) if !s.is_empty() => Some(s),
            _ => None,
        }
    }

    fn required(&self, field: &str) -> std::result::Result<&str, RecordError> {
        self.text(field).ok_or_else(|| self.error(Some(field), "missing value"))
    }

    fn list(&self, field: &str) -> Vec<String> {
        match self.fields.get(field) {
            Some(Value::List(items)) => items.clone(),
            Some(Value::Text(s)) => s.split_whitespace().map(str::to_string).collect(),
            None => Vec::new(),
        }
    }

    fn error(&self, field: Option<&str>, message: impl Into<String>) -> RecordError {
        RecordError {
            line: self.line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    fn review(&self) -> std::result::Result<Review, RecordError> {
        let review = Review {
            id: self.required("id")?.to_string(),
            text: self.required("text")?.to_string(),
            project: self.text("project").map(str::to_string),
            context_urls: self.list("context_urls"),
        };
        review.validate().map_err(|e| {
            let field = if review.id.trim().is_empty() { "id" } else { "text" };
            self.error(Some(field), e.to_string())
        })?;
        Ok(review)
    }

    fn label(&self) -> std::result::Result<ReviewLabel, RecordError> {
        let operation = OperationType::parse(self.required("operation")?)
            .map_err(|e| self.error(Some("operation"), e.to_string()))?;
        let binary = |field: &str| -> std::result::Result<bool, RecordError> {
            let raw = self.required(field)?;
            parse_binary(raw).ok_or_else(|| self.error(Some(field), format!("expected 0 or 1, got `{raw}`")))
        };
        let label = ReviewLabel {
            operation,
            add_understood: binary("add_understood")?,
            remove_understood: binary("remove_understood")?,
            add_snippet: self.text("add_snippet").map(str::to_string),
            remove_snippet: self.text("remove_snippet").map(str::to_string),
            labeler_id: self.text("labeler_id").map(str::to_string),
            labeled_at: self.text("labeled_at").map(str::to_string),
        };
        label.validate().map_err(|e| match e {
            reviewranker_core::Error::InvalidLabel { field, reason } => self.error(Some(field), reason),
            other => self.error(None, other.to_string()),
        })?;
        Ok(label)
    }
}

fn read_csv_records<R: Read>(reader: R, required: &[&str]) -> Result<Vec<std::result::Result<RawRecord, RecordError>>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.iter().all(String::is_empty) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for required in required {
        if !headers.iter().any(|h| h == required) {
            out.push(Err(RecordError {
                line: 1,
                field: Some(required.to_string()),
                message: "column missing from header".to_string(),
            }));
        }
    }
    if !out.is_empty() {
        return Ok(out);
    }
    for result in rdr.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.push(Err(RecordError {
                    line,
                    field: None,
                    message: e.to_string(),
                }));
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields = headers
            .iter()
            .zip(record.iter())
            .map(|(h, v)| (h.clone(), Value::Text(v.to_string())))
            .collect();
        out.push(Ok(RawRecord { line, fields }));
    }
    Ok(out)
}

fn json_fields(line: u64, value: serde_json::Value) -> std::result::Result<RawRecord, RecordError> {
    let err = |field: Option<&str>, message: String| RecordError {
        line,
        field: field.map(str::to_string),
        message,
    };
    let serde_json::Value::Object(map) = value else {
        return Err(err(None, "expected a JSON object".to_string()));
    };
    let mut fields = HashMap::new();
    for (key, v) in map {
        let value = match v {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => Value::Text(s),
            serde_json::Value::Number(n) => Value::Text(n.to_string()),
            serde_json::Value::Bool(b) => Value::Text(b.to_string()),
            serde_json::Value::Array(items) => {
                let strings = items
                    .into_iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => Ok(s),
                        other => Err(err(Some(&key), format!("expected a list of strings, found {other}"))),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Value::List(strings)
            }
            serde_json::Value::Object(_) => return Err(err(Some(&key), "unexpected nested object".to_string())),
        };
        fields.insert(key, value);
    }
    Ok(RawRecord { line, fields })
}

fn read_jsonl_records<R: Read>(reader: R, path: &Path) -> Result<Vec<std::result::Result<RawRecord, RecordError>>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str::<serde_json::Value>(&line)
            .map_err(|e| RecordError {
                line: line_no,
                field: None,
                message: format!("invalid JSON: {e}"),
            })
            .and_then(|v| json_fields(line_no, v));
        out.push(record);
    }
    Ok(out)
}

fn read_records<R: Read>(
    reader: R,
    format: Format,
    path: &Path,
    required: &[&str],
) -> Result<Vec<std::result::Result<RawRecord, RecordError>>> {
    match format {
        Format::Csv => read_csv_records(reader, required),
        Format::Jsonl => read_jsonl_records(reader, path),
    }
}

/// Parses records into items, collecting every malformed record and
/// stopping at the first duplicate id.
fn collect<T>(
    records: Vec<std::result::Result<RawRecord, RecordError>>,
    path: &Path,
    parse: impl Fn(&RawRecord) -> std::result::Result<(String, T), RecordError>,
) -> Result<Vec<T>> {
    let mut items = Vec::new();
    let mut errors = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in records {
        let parsed = record.and_then(|r| parse(&r).map(|item| (r.line, item)));
        match parsed {
            Ok((line, (id, item))) => {
                if seen.insert(id.clone(), line).is_some() {
                    return Err(Error::DuplicateId {
                        path: path.to_path_buf(),
                        line,
                        id,
                    });
                }
                items.push(item);
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(items)
}

/// Reads a labeled corpus. `path` is only used in messages.
pub fn read_corpus<R: Read>(reader: R, format: Format, path: &Path) -> Result<LoadedCorpus> {
    let records = read_records(reader, format, path, &CSV_COLUMNS[..5])?;
    let entries = collect(records, path, |r| {
        let review = r.review()?;
        let label = r.label()?;
        Ok((review.id.clone(), Entry::new(review, label)))
    })?;
    let mut warnings = Vec::new();
    if entries.is_empty() {
        warnings.push(format!("{}: corpus is empty", path.display()));
    }
    Ok(LoadedCorpus {
        corpus: LabeledCorpus::new(entries)?,
        warnings,
    })
}

/// Loads a labeled corpus; the format defaults to the file extension.
pub fn load_corpus(path: impl AsRef<Path>, format: Option<Format>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let format = Format::resolve(format, path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, format, path)
}

/// Loads reviews without labels, e.g. the pool handed to labelers. Label
/// columns are ignored when present.
pub fn load_reviews(path: impl AsRef<Path>, format: Option<Format>) -> Result<Vec<Review>> {
    let path = path.as_ref();
    let format = Format::resolve(format, path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_records(file, format, path, &CSV_COLUMNS[..2])?;
    collect(records, path, |r| {
        let review = r.review()?;
        Ok((review.id.clone(), review))
    })
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    #[serde(flatten)]
    review: &'a Review,
    #[serde(flatten)]
    label: &'a ReviewLabel,
}

pub fn write_corpus<W: Write>(corpus: &LabeledCorpus, writer: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(corpus, writer),
        Format::Jsonl => {
            let mut w = BufWriter::new(writer);
            for entry in corpus {
                serde_json::to_writer(
                    &mut w,
                    &JsonRecord {
                        review: &entry.review,
                        label: &entry.label,
                    },
                )?;
                w.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
            }
            w.flush().map_err(|e| Error::io("<output>", e))?;
            Ok(())
        }
    }
}

fn write_csv<W: Write>(corpus: &LabeledCorpus, writer: W) -> Result<()> {
    let extras: Vec<&str> = EXTRA_COLUMNS
        .iter()
        .copied()
        .filter(|col| {
            corpus.iter().any(|e| match *col {
                "project" => e.review.project.is_some(),
                "context_urls" => !e.review.context_urls.is_empty(),
                "labeler_id" => e.label.labeler_id.is_some(),
                _ => e.label.labeled_at.is_some(),
            })
        })
        .collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS.iter().chain(&extras))?;
    for e in corpus {
        let (review, label) = (&e.review, &e.label);
        let mut row: Vec<String> = vec![
            review.id.clone(),
            review.text.clone(),
            label.operation.code().to_string(),
            u8::from(label.add_understood).to_string(),
            u8::from(label.remove_understood).to_string(),
            label.add_snippet.clone().unwrap_or_default(),
            label.remove_snippet.clone().unwrap_or_default(),
        ];
        for col in &extras {
            row.push(match *col {
                "project" => review.project.clone().unwrap_or_default(),
                "context_urls" => review.context_urls.join(" "),
                "labeler_id" => label.labeler_id.clone().unwrap_or_default(),
                _ => label.labeled_at.clone().unwrap_or_default(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn save_corpus(corpus: &LabeledCorpus, path: impl AsRef<Path>, format: Option<Format>) -> Result<()> {
    let path = path.as_ref();
    let format = Format::resolve(format, path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(corpus, file, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: Format) -> Result<LoadedCorpus> {
        read_corpus(text.as_bytes(), format, Path::new("test"))
    }

    #[test]
    fn csv_single_record() {
        let text = "id,text,operation,add_understood,remove_understood,add_snippet,remove_snippet\n\
                    r1,outer parens not needed,1,0,1,,()\n";
        let loaded = parse(text, Format::Csv).unwrap();
        assert_eq!(loaded.corpus.len(), 1);
        let e = &loaded.corpus.entries()[0];
        assert_eq!(e.review.text, "outer parens not needed");
        assert_eq!(e.label.operation, OperationType::Delete);
        assert!(!e.label.add_understood && e.label.remove_understood);
        assert_eq!(e.label.remove_snippet.as_deref(), Some("()"));
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn jsonl_accepts_numbers_and_strings() {
        let text = r#"{"id":"r1","text":"outer parens not needed","operation":1,"add_understood":0,"remove_understood":1}
{"id":"r2","text":"vague","operation":"NEI","add_understood":"0","remove_understood":false,"context_urls":["http://a","http://b"]}
"#;
        let loaded = parse(text, Format::Jsonl).unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        let nei = &loaded.corpus.entries()[1];
        assert_eq!(nei.label.operation, OperationType::NotEnoughInformation);
        assert_eq!(nei.review.context_urls, vec!["http://a", "http://b"]);
    }

    #[test]
    fn empty_files_warn() {
        for format in [Format::Csv, Format::Jsonl] {
            let loaded = parse("", format).unwrap();
            assert!(loaded.corpus.is_empty());
            assert_eq!(loaded.warnings.len(), 1);
        }
    }

    #[test]
    fn malformed_records_report_field_and_line() {
        let text = "id,text,operation,add_understood,remove_understood,add_snippet,remove_snippet\n\
                    r1,fine,1,0,1,,\n\
                    r2,bad op,7,0,1,,\n\
                    r3,bad flag,1,2,1,,\n\
                    r4,,1,0,1,,\n";
        let err = parse(text, Format::Csv).unwrap_err();
        let Error::Malformed { errors, .. } = &err else { panic!("{err}") };
        let found: Vec<(u64, Option<&str>)> = errors.iter().map(|e| (e.line, e.field.as_deref())).collect();
        assert_eq!(
            found,
            vec![(3, Some("operation")), (4, Some("add_understood")), (5, Some("text"))]
        );
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("operation"), "{msg}");
    }

    #[test]
    fn jsonl_bad_line() {
        let err = parse("{\"id\":\"a\"\nnot json\n", Format::Jsonl).unwrap_err();
        let Error::Malformed { errors, .. } = err else { panic!() };
        assert_eq!(errors.len(), 2);
        assert_eq!(errors[1].line, 2);
    }

    #[test]
    fn missing_column() {
        let err = parse("id,text,operation\nr1,x,1\n", Format::Csv).unwrap_err();
        let Error::Malformed { errors, .. } = err else { panic!() };
        assert_eq!(errors[0].field.as_deref(), Some("add_understood"));
        assert_eq!(errors[0].line, 1);
    }

    #[test]
    fn duplicate_id_is_a_hard_error() {
        let text = "id,text,operation,add_understood,remove_understood\nr1,a,1,0,1\nr1,b,1,0,1\n";
        let err = parse(text, Format::Csv).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 3, ref id, .. } if id == "r1"), "{err}");
    }

    #[test]
    fn snippet_without_understanding_is_rejected() {
        let text = "id,text,operation,add_understood,remove_understood,add_snippet\nr1,a,1,0,1,foo\n";
        let err = parse(text, Format::Csv).unwrap_err();
        let Error::Malformed { errors, .. } = err else { panic!() };
        assert_eq!(errors[0].field.as_deref(), Some("add_snippet"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.CSV")), Some(Format::Csv));
        assert_eq!(Format::from_path(Path::new("b.jsonl")), Some(Format::Jsonl));
        assert_eq!(Format::from_path(Path::new("b.txt")), None);
        assert!(Format::resolve(None, Path::new("b.txt")).is_err());
    }
}
