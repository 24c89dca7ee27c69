//! Canonical data model for labeled review corpora, plus the pure corpus
//! transformations: redundancy removal, the labelability split and label lint.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A single code review comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context_urls: Vec<String>,
}

impl Review {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            project: None,
            context_urls: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidReview {
                id: self.id.clone(),
                reason: "id is empty".to_string(),
            });
        }
        if self.text.trim().is_empty() {
            return Err(Error::InvalidReview {
                id: self.id.clone(),
                reason: "text is empty".to_string(),
            });
        }
        Ok(())
    }
}

/// The change a review asks for. Class codes are fixed: replace 0, delete 1,
/// insert 2. "Not enough information" carries no class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperationType {
    Replace,
    Delete,
    Insert,
    NotEnoughInformation,
}

impl OperationType {
    pub const ALL: [OperationType; 4] = [
        OperationType::Replace,
        OperationType::Delete,
        OperationType::Insert,
        OperationType::NotEnoughInformation,
    ];

    pub fn class(self) -> Option<usize> {
        match self {
            OperationType::Replace => Some(0),
            OperationType::Delete => Some(1),
            OperationType::Insert => Some(2),
            OperationType::NotEnoughInformation => None,
        }
    }

    pub fn from_class(class: usize) -> Option<Self> {
        match class {
            0 => Some(OperationType::Replace),
            1 => Some(OperationType::Delete),
            2 => Some(OperationType::Insert),
            _ => None,
        }
    }

    /// The code used in corpus files: `0`, `1`, `2` or `NEI`.
    pub fn code(self) -> &'static str {
        match self {
            OperationType::Replace => "0",
            OperationType::Delete => "1",
            OperationType::Insert => "2",
            OperationType::NotEnoughInformation => "NEI",
        }
    }

    /// Accepts the file codes as well as the operation names, case-insensitively.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let op = match t {
            "0" => OperationType::Replace,
            "1" => OperationType::Delete,
            "2" => OperationType::Insert,
            _ if t.eq_ignore_ascii_case("nei")
                || t.eq_ignore_ascii_case("not enough information")
                || t.eq_ignore_ascii_case("notenoughinformation") =>
            {
                OperationType::NotEnoughInformation
            }
            _ if t.eq_ignore_ascii_case("replace") => OperationType::Replace,
            _ if t.eq_ignore_ascii_case("delete") || t.eq_ignore_ascii_case("remove") => {
                OperationType::Delete
            }
            _ if t.eq_ignore_ascii_case("insert") => OperationType::Insert,
            _ => return Err(Error::UnknownOperation(t.to_string())),
        };
        Ok(op)
    }

    pub fn is_labelable(self) -> bool {
        self != OperationType::NotEnoughInformation
    }

    /// (add_understood, remove_understood) in the ideal case.
    pub fn expected_understanding(self) -> Option<(bool, bool)> {
        match self {
            OperationType::Replace => Some((true, true)),
            OperationType::Delete => Some((false, true)),
            OperationType::Insert => Some((true, false)),
            OperationType::NotEnoughInformation => None,
        }
    }
}

impl fmt::Display for OperationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            OperationType::Replace => "replace",
            OperationType::Delete => "delete",
            OperationType::Insert => "insert",
            OperationType::NotEnoughInformation => "not enough information",
        };
        f.write_str(name)
    }
}

impl Serialize for OperationType {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for OperationType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = OperationType;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an operation code (0, 1, 2 or NEI)")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<Self::Value, E> {
                OperationType::from_class(v as usize)
                    .ok_or_else(|| E::custom(alloc::format!("unknown operation code {v}")))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<Self::Value, E> {
                if v < 0 {
                    return Err(E::custom(alloc::format!("unknown operation code {v}")));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<Self::Value, E> {
                OperationType::parse(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Serde helper storing booleans as the integers 0 and 1, while also
/// accepting `true`/`false` and the strings "0"/"1" on input.
pub mod binary {
    use core::fmt;

    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &bool, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(u8::from(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<bool, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = bool;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("0 or 1")
            }

            fn visit_bool<E: serde::de::Error>(self, v: bool) -> Result<bool, E> {
                Ok(v)
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<bool, E> {
                match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(E::custom(alloc::format!("expected 0 or 1, got {v}"))),
                }
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<bool, E> {
                match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(E::custom(alloc::format!("expected 0 or 1, got {v}"))),
                }
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<bool, E> {
                super::parse_binary(v).ok_or_else(|| E::custom(alloc::format!("expected 0 or 1, got `{v}`")))
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Parses a 0/1 answer as written in corpus files.
pub fn parse_binary(s: &str) -> Option<bool> {
    match s.trim() {
        "0" => Some(false),
        "1" => Some(true),
        t if t.eq_ignore_ascii_case("false") => Some(false),
        t if t.eq_ignore_ascii_case("true") => Some(true),
        _ => None,
    }
}

/// A developer's answers to the three questions about one review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewLabel {
    pub operation: OperationType,
    #[serde(with = "binary")]
    pub add_understood: bool,
    #[serde(with = "binary")]
    pub remove_understood: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeler_id: Option<String>,
    /// RFC 3339 timestamp of the submission, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled_at: Option<String>,
}

impl ReviewLabel {
    pub fn new(operation: OperationType, add_understood: bool, remove_understood: bool) -> Self {
        Self {
            operation,
            add_understood,
            remove_understood,
            add_snippet: None,
            remove_snippet: None,
            labeler_id: None,
            labeled_at: None,
        }
    }

    /// Class for the add-code question.
    pub fn add_class(&self) -> usize {
        usize::from(self.add_understood)
    }

    /// Class for the remove-code question.
    pub fn remove_class(&self) -> usize {
        usize::from(self.remove_understood)
    }

    /// A snippet may only be present when the matching question was answered 1.
    pub fn validate(&self) -> Result<()> {
        if has_text(&self.add_snippet) && !self.add_understood {
            return Err(Error::InvalidLabel {
                field: "add_snippet",
                reason: "snippet given but add_understood is 0".to_string(),
            });
        }
        if has_text(&self.remove_snippet) && !self.remove_understood {
            return Err(Error::InvalidLabel {
                field: "remove_snippet",
                reason: "snippet given but remove_understood is 0".to_string(),
            });
        }
        Ok(())
    }

    /// Same answers, ignoring snippets and provenance.
    pub fn same_answers(&self, other: &ReviewLabel) -> bool {
        self.operation == other.operation
            && self.add_understood == other.add_understood
            && self.remove_understood == other.remove_understood
    }
}

fn has_text(s: &Option<String>) -> bool {
    s.as_deref().is_some_and(|s| !s.trim().is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub review: Review,
    pub label: ReviewLabel,
}

impl Entry {
    pub fn new(review: Review, label: ReviewLabel) -> Self {
        Self { review, label }
    }
}

/// Reviews with their labels. Review ids are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    entries: Vec<Entry>,
}

impl LabeledCorpus {
    /// Validates every entry and rejects duplicate ids.
    pub fn new(entries: Vec<Entry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for entry in &entries {
            entry.review.validate()?;
            entry.label.validate()?;
            if !seen.insert(entry.review.id.as_str()) {
                return Err(Error::DuplicateId(entry.review.id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Entry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.review.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.review.id.as_str()).collect()
    }
}

impl<'a> IntoIterator for &'a LabeledCorpus {
    type Item = &'a Entry;
    type IntoIter = core::slice::Iter<'a, Entry>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Key used to detect redundant reviews: lowercased with whitespace runs
/// collapsed to one space.
pub fn normalize_text(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Keeps the first entry for every normalized review text.
pub fn deduplicate(corpus: &LabeledCorpus) -> LabeledCorpus {
    let mut seen = BTreeSet::new();
    let entries = corpus
        .entries
        .iter()
        .filter(|e| seen.insert(normalize_text(&e.review.text)))
        .cloned()
        .collect();
    LabeledCorpus { entries }
}

/// Splits off the "not enough information" reviews, which are never trained
/// on and always score zero. Returns `(trainable, excluded)`.
pub fn partition_by_labelability(corpus: &LabeledCorpus) -> (LabeledCorpus, LabeledCorpus) {
    let (trainable, excluded) = corpus
        .entries
        .iter()
        .cloned()
        .partition(|e| e.label.operation.is_labelable());
    (
        LabeledCorpus { entries: trainable },
        LabeledCorpus { entries: excluded },
    )
}

/// An entry whose understanding answers deviate from the pattern its
/// operation implies. Advisory only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintWarning {
    pub review_id: String,
    pub operation: OperationType,
    pub add_understood: bool,
    pub remove_understood: bool,
    pub expected_add: bool,
    pub expected_remove: bool,
}

impl fmt::Display for LintWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "review `{}`: {} usually has add={} remove={}, got add={} remove={}",
            self.review_id,
            self.operation,
            u8::from(self.expected_add),
            u8::from(self.expected_remove),
            u8::from(self.add_understood),
            u8::from(self.remove_understood),
        )
    }
}

pub fn lint_labels(corpus: &LabeledCorpus) -> Vec<LintWarning> {
    corpus
        .iter()
        .filter_map(|e| {
            let (add, remove) = e.label.operation.expected_understanding()?;
            let label = &e.label;
            if label.add_understood == add && label.remove_understood == remove {
                return None;
            }
            Some(LintWarning {
                review_id: e.review.id.clone(),
                operation: label.operation,
                add_understood: label.add_understood,
                remove_understood: label.remove_understood,
                expected_add: add,
                expected_remove: remove,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(id: &str, text: &str, op: OperationType, add: bool, remove: bool) -> Entry {
        Entry::new(Review::new(id, text), ReviewLabel::new(op, add, remove))
    }

    #[test]
    fn operation_codes_are_fixed() {
        assert_eq!(OperationType::Replace.class(), Some(0));
        assert_eq!(OperationType::Delete.class(), Some(1));
        assert_eq!(OperationType::Insert.class(), Some(2));
        assert_eq!(OperationType::NotEnoughInformation.class(), None);
        assert_eq!(OperationType::parse("NEI").unwrap(), OperationType::NotEnoughInformation);
        assert_eq!(OperationType::parse("nei").unwrap(), OperationType::NotEnoughInformation);
        assert_eq!(OperationType::parse(" 1 ").unwrap(), OperationType::Delete);
        assert!(OperationType::parse("3").is_err());
        for op in OperationType::ALL {
            assert_eq!(OperationType::parse(op.code()).unwrap(), op);
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = LabeledCorpus::new(vec![
            entry("r1", "a", OperationType::Delete, false, true),
            entry("r1", "b", OperationType::Delete, false, true),
        ])
        .unwrap_err();
        assert_eq!(err, Error::DuplicateId("r1".into()));
    }

    #[test]
    fn blank_text_is_rejected() {
        let err = LabeledCorpus::new(vec![entry("r1", "  \t", OperationType::Delete, false, true)]).unwrap_err();
        assert!(matches!(err, Error::InvalidReview { .. }));
    }

    #[test]
    fn snippet_requires_understanding() {
        let mut label = ReviewLabel::new(OperationType::Delete, false, true);
        label.remove_snippet = Some("()".into());
        assert!(label.validate().is_ok());
        label.add_snippet = Some("x".into());
        let err = label.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { field: "add_snippet", .. }));
        label.add_snippet = Some("   ".into());
        assert!(label.validate().is_ok());
    }

    #[test]
    fn dedup_exact_and_whitespace() {
        let c = LabeledCorpus::new(vec![
            entry("a", "outer parens not needed", OperationType::Delete, false, true),
            entry("b", "outer parens not needed", OperationType::Insert, true, false),
            entry("c", "Outer  parens not needed  ", OperationType::Insert, true, false),
            entry("d", "something else", OperationType::Insert, true, false),
        ])
        .unwrap();
        let d = deduplicate(&c);
        assert_eq!(d.ids(), vec!["a", "d"]);
    }

    #[test]
    fn partition_splits_out_nei() {
        let c = LabeledCorpus::new(vec![
            entry("a", "x", OperationType::Delete, false, true),
            entry("b", "y", OperationType::NotEnoughInformation, false, false),
            entry("c", "z", OperationType::Replace, true, true),
        ])
        .unwrap();
        let (t, e) = partition_by_labelability(&c);
        assert_eq!(t.ids(), vec!["a", "c"]);
        assert_eq!(e.ids(), vec!["b"]);

        let only = LabeledCorpus::new(vec![entry("a", "x", OperationType::Delete, false, true)]).unwrap();
        let (t, e) = partition_by_labelability(&only);
        assert_eq!(t, only);
        assert!(e.is_empty());
    }

    #[test]
    fn lint_rules() {
        let c = LabeledCorpus::new(vec![
            entry("ok", "outer parens not needed", OperationType::Delete, false, true),
            entry("bad", "use foo", OperationType::Replace, true, false),
            entry("nei", "hmm", OperationType::NotEnoughInformation, true, true),
        ])
        .unwrap();
        let w = lint_labels(&c);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].review_id, "bad");
        assert!(w[0].to_string().contains("bad"));
        assert!(lint_labels(&LabeledCorpus::default()).is_empty());
    }

    fn arb_corpus() -> impl Strategy<Value = LabeledCorpus> {
        let text = prop::sample::select(vec!["a b", "A  b", "a b ", "c", "C", "d e f", "d\te f"]);
        let op = prop::sample::select(OperationType::ALL.to_vec());
        prop::collection::vec((text, op), 0..20).prop_map(|items| {
            let entries = items
                .into_iter()
                .enumerate()
                .map(|(i, (t, op))| entry(&alloc::format!("r{i}"), t, op, false, false))
                .collect();
            LabeledCorpus::new(entries).unwrap()
        })
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(c in arb_corpus()) {
            let once = deduplicate(&c);
            prop_assert!(once.len() <= c.len());
            prop_assert_eq!(deduplicate(&once), once);
        }

        #[test]
        fn partition_is_disjoint_and_covering(c in arb_corpus()) {
            let (t, e) = partition_by_labelability(&c);
            prop_assert_eq!(t.len() + e.len(), c.len());
            let mut ids: Vec<&str> = t.ids().into_iter().chain(e.ids()).collect();
            ids.sort();
            let mut all = c.ids();
            all.sort();
            prop_assert_eq!(ids, all);
        }
    }
}
