//! Append-only label log.
//!
//! `labels.jsonl` holds one JSON object per line, either a labeler's
//! submission or an admin resolution:
//!
//! ```json
//! {"kind":"label","review_id":"r1","label":{"operation":"1","add_understood":0,"remove_understood":1,"remove_snippet":"()","labeler_id":"ana","labeled_at":"..."}}
//! {"kind":"resolve","review_id":"r1","label":{...}}
//! ```
//!
//! The in-memory view keeps the latest label per (review, labeler) and the
//! latest resolution per review; it is rebuilt by replaying the log.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use reviewranker_core::ReviewLabel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Label { review_id: String, label: ReviewLabel },
    Resolve { review_id: String, label: ReviewLabel },
}

/// Latest-wins view of a log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreView {
    /// review id -> labeler id -> label
    labels: BTreeMap<String, BTreeMap<String, ReviewLabel>>,
    resolutions: BTreeMap<String, ReviewLabel>,
}

impl StoreView {
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> Self {
        let mut view = Self::default();
        for r in records {
            view.apply(r);
        }
        view
    }

    pub fn apply(&mut self, record: &LogRecord) {
        match record {
            LogRecord::Label { review_id, label } => {
                let labeler = label.labeler_id.clone().unwrap_or_default();
                self.labels
                    .entry(review_id.clone())
                    .or_default()
                    .insert(labeler, label.clone());
            }
            LogRecord::Resolve { review_id, label } => {
                self.resolutions.insert(review_id.clone(), label.clone());
            }
        }
    }

    /// Latest label of every labeler for `review_id`.
    pub fn labels(&self, review_id: &str) -> Option<&BTreeMap<String, ReviewLabel>> {
        self.labels.get(review_id)
    }

    pub fn labeled_reviews(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn latest(&self, review_id: &str, labeler: &str) -> Option<&ReviewLabel> {
        self.labels.get(review_id)?.get(labeler)
    }

    pub fn completed_by(&self, labeler: &str) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|(_, by)| by.contains_key(labeler))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn resolution(&self, review_id: &str) -> Option<&ReviewLabel> {
        self.resolutions.get(review_id)
    }
}

#[derive(Debug)]
pub struct LabelStore {
    path: PathBuf,
    file: File,
    records: Vec<LogRecord>,
    view: StoreView,
}

impl LabelStore {
    /// Opens or creates the log. A final line cut short by a crash is
    /// dropped (and reported in the returned warning); damage anywhere else
    /// is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Option<String>)> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| Error::io(&path, e))?;

        let mut records = Vec::new();
        let mut errors = Vec::new();
        let mut warning = None;
        let mut offset = 0usize;
        let mut line_no = 0u64;
        while offset < bytes.len() {
            line_no += 1;
            let end = bytes[offset..].iter().position(|&b| b == b'\n').map(|p| offset + p);
            let line = &bytes[offset..end.unwrap_or(bytes.len())];
            let parsed = if line.iter().all(u8::is_ascii_whitespace) {
                None
            } else {
                Some(serde_json::from_slice::<LogRecord>(line))
            };
            match (parsed, end) {
                (None, _) => {}
                (Some(Ok(r)), _) => records.push(r),
                (Some(Err(_)), None) => {
                    file.set_len(offset as u64).map_err(|e| Error::io(&path, e))?;
                    warning = Some(format!(
                        "{}: dropped incomplete last line {line_no}",
                        path.display()
                    ));
                    break;
                }
                (Some(Err(e)), Some(_)) => errors.push(RecordError {
                    line: line_no,
                    field: None,
                    message: e.to_string(),
                }),
            }
            match end {
                Some(e) => offset = e + 1,
                None => {
                    // A complete record without its newline: finish the line.
                    if warning.is_none() {
                        file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
                    }
                    break;
                }
            }
        }
        if !errors.is_empty() {
            return Err(Error::Malformed { path, errors });
        }
        file.seek(SeekFrom::End(0)).map_err(|e| Error::io(&path, e))?;
        let view = StoreView::replay(&records);
        Ok((
            Self {
                path,
                file,
                records,
                view,
            },
            warning,
        ))
    }

    /// Writes `record` durably, then applies it to the view.
    pub fn append(&mut self, record: LogRecord) -> Result<()> {
        let mut line = serde_json::to_vec(&record)?;
        line.push(b'\n');
        self.file.write_all(&line).map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        self.view.apply(&record);
        self.records.push(record);
        Ok(())
    }

    pub fn view(&self) -> &StoreView {
        &self.view
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use reviewranker_core::OperationType;

    fn label(op: OperationType, by: &str) -> ReviewLabel {
        let (add, remove) = op.expected_understanding().unwrap_or((false, false));
        let mut l = ReviewLabel::new(op, add, remove);
        l.labeler_id = Some(by.to_string());
        l
    }

    fn rec(review: &str, op: OperationType, by: &str) -> LogRecord {
        LogRecord::Label {
            review_id: review.to_string(),
            label: label(op, by),
        }
    }

    #[test]
    fn latest_wins_and_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        {
            let (mut store, warning) = LabelStore::open(&path).unwrap();
            assert!(warning.is_none());
            store.append(rec("r1", OperationType::Insert, "ana")).unwrap();
            store.append(rec("r1", OperationType::Delete, "ana")).unwrap();
            store.append(rec("r1", OperationType::Replace, "bo")).unwrap();
        }
        let (store, _) = LabelStore::open(&path).unwrap();
        assert_eq!(store.records().len(), 3);
        assert_eq!(store.view().latest("r1", "ana").unwrap().operation, OperationType::Delete);
        assert_eq!(store.view().labels("r1").unwrap().len(), 2);
        assert_eq!(store.view().completed_by("bo"), BTreeSet::from(["r1"]));
    }

    #[test]
    fn torn_last_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let good = serde_json::to_string(&rec("r1", OperationType::Insert, "ana")).unwrap();
        std::fs::write(&path, format!("{good}\n{}", &good[..good.len() / 2])).unwrap();
        let (mut store, warning) = LabelStore::open(&path).unwrap();
        assert!(warning.unwrap().contains("line 2"));
        assert_eq!(store.records().len(), 1);
        store.append(rec("r2", OperationType::Insert, "ana")).unwrap();
        drop(store);
        let (store, warning) = LabelStore::open(&path).unwrap();
        assert!(warning.is_none());
        assert_eq!(store.records().len(), 2);
    }

    #[test]
    fn missing_trailing_newline_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let good = serde_json::to_string(&rec("r1", OperationType::Insert, "ana")).unwrap();
        std::fs::write(&path, &good).unwrap();
        let (mut store, warning) = LabelStore::open(&path).unwrap();
        assert!(warning.is_none());
        store.append(rec("r2", OperationType::Insert, "ana")).unwrap();
        drop(store);
        assert_eq!(LabelStore::open(&path).unwrap().0.records().len(), 2);
    }

    #[test]
    fn damage_in_the_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let good = serde_json::to_string(&rec("r1", OperationType::Insert, "ana")).unwrap();
        std::fs::write(&path, format!("{good}\n{{oops\n{good}\n")).unwrap();
        let err = LabelStore::open(&path).unwrap_err();
        let Error::Malformed { errors, .. } = err else { panic!() };
        assert_eq!(errors[0].line, 2);
    }

    proptest! {
        #[test]
        fn replay_equals_incremental_view(ops in proptest::collection::vec((0usize..4, 0usize..3, 0usize..4, any::<bool>()), 0..40)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("labels.jsonl");
            let (mut store, _) = LabelStore::open(&path).unwrap();
            for &(review, labeler, op, resolve) in &ops {
                let review_id = format!("r{review}");
                let l = label(OperationType::ALL[op], &format!("l{labeler}"));
                let record = if resolve {
                    LogRecord::Resolve { review_id, label: l }
                } else {
                    LogRecord::Label { review_id, label: l }
                };
                store.append(record).unwrap();
            }
            let live = store.view().clone();
            drop(store);
            let (reopened, _) = LabelStore::open(&path).unwrap();
            prop_assert_eq!(reopened.view(), &live);
            prop_assert_eq!(&StoreView::replay(reopened.records()), &live);
        }
    }
}
