//! Label collection service.
//!
//! A data directory holds two files:
//!
//! * `pool.json`: the reviews to label, the labeler names, the shared
//!   fraction and the assignment seed. Assignments are recomputed from it.
//! * `labels.jsonl`: the append-only submission log (see [`store`]).
//!
//! [`LabelService`] implements the workflow; [`http`] exposes it over HTTP.

pub mod agreement;
pub mod assign;
pub mod export;
pub mod http;
pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use reviewranker_core::corpus::parse_binary;
use reviewranker_core::{OperationType, Review, ReviewLabel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use agreement::{agreement_report, AgreementReport};
pub use assign::{assign_reviews, shared_pool_size, LabelingSession, Progress, ADMIN};
pub use export::{resolve_labels, ResolvedLabels};
pub use store::{LabelStore, LogRecord, StoreView};

use crate::error::{Error, Result};

pub const POOL_FILE: &str = "pool.json";
pub const LOG_FILE: &str = "labels.jsonl";
pub const DEFAULT_SHARED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPool {
    pub reviews: Vec<Review>,
    pub labelers: Vec<String>,
    pub shared_fraction: f64,
    pub seed: u64,
}

impl LabelPool {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown labeler `{0}`")]
    UnknownLabeler(String),
    #[error("unknown review `{0}`")]
    UnknownReview(String),
    #[error("review `{review_id}` is not assigned to `{labeler_id}`")]
    NotAssigned { review_id: String, labeler_id: String },
    #[error("only `{ADMIN}` may resolve labels")]
    NotAdmin,
    #[error("invalid label: {}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    InvalidLabel(Vec<FieldError>),
    #[error(transparent)]
    Internal(#[from] Error),
}

/// A review as shown to a labeler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewView<'a> {
    pub id: &'a str,
    pub text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub project: Option<&'a str>,
    pub context_urls: &'a [String],
}

impl<'a> From<&'a Review> for ReviewView<'a> {
    fn from(r: &'a Review) -> Self {
        Self {
            id: &r.id,
            text: &r.text,
            project: r.project.as_deref(),
            context_urls: &r.context_urls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Next<'a> {
    pub done: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review: Option<ReviewView<'a>>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ack {
    pub review_id: String,
    pub labeler_id: String,
    pub progress: Option<Progress>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView<'a> {
    #[serde(flatten)]
    pub session: &'a LabelingSession,
    pub progress: Progress,
}

fn allows_add(op: OperationType) -> bool {
    matches!(op, OperationType::Insert | OperationType::Replace)
}

fn allows_remove(op: OperationType) -> bool {
    matches!(op, OperationType::Delete | OperationType::Replace)
}

/// Parses a submission body whose field names follow the corpus format.
/// Returns the labeler, the label and soft warnings, or every field error.
pub fn parse_submission(body: &Value) -> std::result::Result<(String, ReviewLabel, Vec<String>), Vec<FieldError>> {
    let Some(map) = body.as_object() else {
        return Err(vec![FieldError::new("body", "expected a JSON object")]);
    };
    let mut errors = Vec::new();
    let text = |field: &str, errors: &mut Vec<FieldError>| -> Option<String> {
        match map.get(field) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if s.trim().is_empty() => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                errors.push(FieldError::new(field, "expected a string"));
                None
            }
        }
    };
    let scalar = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    };

    let labeler_id = text("labeler_id", &mut errors);
    if labeler_id.is_none() && !errors.iter().any(|e| e.field == "labeler_id") {
        errors.push(FieldError::new("labeler_id", "missing value"));
    }
    let operation = match map.get("operation").and_then(scalar) {
        None => {
            errors.push(FieldError::new("operation", "missing value"));
            None
        }
        Some(raw) => match OperationType::parse(&raw) {
            Ok(op) => Some(op),
            Err(e) => {
                errors.push(FieldError::new("operation", e.to_string()));
                None
            }
        },
    };
    let mut flag = |field: &str| match map.get(field).and_then(scalar) {
        None => {
            errors.push(FieldError::new(field, "missing value"));
            false
        }
        Some(raw) => parse_binary(&raw).unwrap_or_else(|| {
            errors.push(FieldError::new(field, format!("expected 0 or 1, got `{raw}`")));
            false
        }),
    };
    let add_understood = flag("add_understood");
    let remove_understood = flag("remove_understood");
    let add_snippet = text("add_snippet", &mut errors);
    let remove_snippet = text("remove_snippet", &mut errors);

    let mut warnings = Vec::new();
    if let Some(op) = operation {
        let sides = [
            ("add", allows_add(op), add_understood, &add_snippet),
            ("remove", allows_remove(op), remove_understood, &remove_snippet),
        ];
        for (side, enabled, understood, snippet) in sides {
            let flag_field = format!("{side}_understood");
            let snippet_field = format!("{side}_snippet");
            if op == OperationType::NotEnoughInformation && understood {
                errors.push(FieldError::new(&flag_field, "must be 0 when there is not enough information"));
            }
            if snippet.is_some() {
                if !enabled {
                    errors.push(FieldError::new(&snippet_field, format!("not used for {op}")));
                } else if !understood {
                    errors.push(FieldError::new(&snippet_field, format!("requires {flag_field} = 1")));
                }
            } else if enabled && understood {
                warnings.push(format!("{flag_field} is 1 but {snippet_field} is empty"));
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let label = ReviewLabel {
        operation: operation.expect("checked above"),
        add_understood,
        remove_understood,
        add_snippet,
        remove_snippet,
        labeler_id: labeler_id.clone(),
        labeled_at: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
    };
    if let Err(e) = label.validate() {
        return Err(vec![FieldError::new("label", e.to_string())]);
    }
    Ok((labeler_id.expect("checked above"), label, warnings))
}

#[derive(Debug)]
pub struct LabelService {
    pool: LabelPool,
    index: HashMap<String, usize>,
    sessions: BTreeMap<String, LabelingSession>,
    shared: Vec<String>,
    store: LabelStore,
}

impl LabelService {
    /// Opens a data directory. `pool` is stored on first use; later opens
    /// may omit it, and a different pool is refused. Returns startup
    /// warnings alongside the service.
    pub fn open(data_dir: impl AsRef<Path>, pool: Option<LabelPool>) -> Result<(Self, Vec<String>)> {
        let dir = data_dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let pool_path = dir.join(POOL_FILE);
        let pool = match (pool, pool_path.exists()) {
            (Some(pool), false) => {
                pool.save(&pool_path)?;
                pool
            }
            (Some(pool), true) => {
                if LabelPool::load(&pool_path)? != pool {
                    return Err(Error::Invalid(format!(
                        "{} already holds a different review pool; use another data directory",
                        dir.display()
                    )));
                }
                pool
            }
            (None, true) => LabelPool::load(&pool_path)?,
            (None, false) => {
                return Err(Error::Invalid(format!(
                    "{} has no {POOL_FILE}; pass --input and --labelers to create it",
                    dir.display()
                )))
            }
        };
        let ids: Vec<&str> = pool.reviews.iter().map(|r| r.id.as_str()).collect();
        let assigned = assign_reviews(&ids, &pool.labelers, pool.shared_fraction, pool.seed)?;
        let shared = assigned[0].assigned_ids[..shared_pool_size(ids.len(), pool.shared_fraction)].to_vec();

        let (store, warning) = LabelStore::open(dir.join(LOG_FILE))?;
        let mut sessions = BTreeMap::new();
        for mut s in assigned {
            for id in store.view().completed_by(&s.labeler_id) {
                s.complete(id);
            }
            sessions.insert(s.labeler_id.clone(), s);
        }
        let index = pool.reviews.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        Ok((
            Self {
                pool,
                index,
                sessions,
                shared,
                store,
            },
            warning.into_iter().collect(),
        ))
    }

    pub fn pool(&self) -> &LabelPool {
        &self.pool
    }

    pub fn data_file(&self) -> PathBuf {
        self.store.path().to_path_buf()
    }

    pub fn session(&self, labeler: &str) -> std::result::Result<SessionView<'_>, ServiceError> {
        let session = self
            .sessions
            .get(labeler)
            .ok_or_else(|| ServiceError::UnknownLabeler(labeler.to_string()))?;
        Ok(SessionView {
            session,
            progress: session.progress(),
        })
    }

    pub fn next_unlabeled(&self, labeler: &str) -> std::result::Result<Next<'_>, ServiceError> {
        let session = self.session(labeler)?.session;
        let review = session
            .next_unlabeled()
            .map(|id| ReviewView::from(&self.pool.reviews[self.index[id]]));
        Ok(Next {
            done: review.is_none(),
            review,
            progress: session.progress(),
        })
    }

    pub fn submit_label(&mut self, review_id: &str, body: &Value) -> std::result::Result<Ack, ServiceError> {
        if !self.index.contains_key(review_id) {
            return Err(ServiceError::UnknownReview(review_id.to_string()));
        }
        let (labeler_id, label, warnings) = parse_submission(body).map_err(ServiceError::InvalidLabel)?;
        let session = self
            .sessions
            .get_mut(&labeler_id)
            .ok_or_else(|| ServiceError::UnknownLabeler(labeler_id.clone()))?;
        if !session.is_assigned(review_id) {
            return Err(ServiceError::NotAssigned {
                review_id: review_id.to_string(),
                labeler_id,
            });
        }
        self.store.append(LogRecord::Label {
            review_id: review_id.to_string(),
            label,
        })?;
        session.complete(review_id);
        Ok(Ack {
            review_id: review_id.to_string(),
            progress: Some(session.progress()),
            labeler_id,
            warnings,
        })
    }

    /// Records an admin decision for a review, overriding labeler answers
    /// in the export.
    pub fn resolve(&mut self, review_id: &str, body: &Value) -> std::result::Result<Ack, ServiceError> {
        if !self.index.contains_key(review_id) {
            return Err(ServiceError::UnknownReview(review_id.to_string()));
        }
        let (labeler_id, label, warnings) = parse_submission(body).map_err(ServiceError::InvalidLabel)?;
        if labeler_id != ADMIN {
            return Err(ServiceError::NotAdmin);
        }
        self.store.append(LogRecord::Resolve {
            review_id: review_id.to_string(),
            label,
        })?;
        Ok(Ack {
            review_id: review_id.to_string(),
            labeler_id,
            progress: None,
            warnings,
        })
    }

    pub fn agreement(&self) -> AgreementReport {
        agreement_report(self.store.view(), &self.shared)
    }

    pub fn export(&self) -> Result<ResolvedLabels> {
        resolve_labels(self.store.view(), &self.pool.reviews)
    }
}
