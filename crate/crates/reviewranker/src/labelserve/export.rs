//! Turning the label log into a corpus.
//!
//! Each question is settled separately: the answer given by the most
//! labelers wins. If two answers share the top count the review is a tie
//! and blocks the export until an admin resolution is recorded for it.

use std::collections::BTreeMap;

use reviewranker_core::{Entry, LabeledCorpus, OperationType, Review, ReviewLabel};
use serde::Serialize;

use super::store::StoreView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedLabels {
    #[serde(skip)]
    pub corpus: LabeledCorpus,
    /// Reviews whose labelers disagreed and were settled by majority.
    pub majority_resolved: Vec<String>,
    /// Reviews taken from an admin resolution.
    pub admin_resolved: Vec<String>,
    /// Pool reviews nobody has labeled yet; they are left out.
    pub unlabeled: usize,
}

/// The single most frequent value, or `None` on a tie for first place.
fn plurality<T: Ord + Copy>(values: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let top = *counts.values().max()?;
    let mut winners = counts.iter().filter(|(_, &n)| n == top);
    let (value, _) = winners.next()?;
    winners.next().is_none().then_some(*value)
}

fn allows_add(op: OperationType) -> bool {
    matches!(op, OperationType::Insert | OperationType::Replace)
}

fn allows_remove(op: OperationType) -> bool {
    matches!(op, OperationType::Delete | OperationType::Replace)
}

/// Majority label for one review, or `None` on a tie.
pub fn majority_label(labels: &BTreeMap<String, ReviewLabel>) -> Option<ReviewLabel> {
    if labels.len() == 1 {
        return labels.values().next().cloned();
    }
    let operation = plurality(labels.values().map(|l| l.operation))?;
    let add_understood = plurality(labels.values().map(|l| l.add_understood))?;
    let remove_understood = plurality(labels.values().map(|l| l.remove_understood))?;
    let add_snippet = (add_understood && allows_add(operation))
        .then(|| labels.values().filter(|l| l.add_understood).find_map(|l| l.add_snippet.clone()))
        .flatten();
    let remove_snippet = (remove_understood && allows_remove(operation))
        .then(|| labels.values().filter(|l| l.remove_understood).find_map(|l| l.remove_snippet.clone()))
        .flatten();
    Some(ReviewLabel {
        operation,
        add_understood,
        remove_understood,
        add_snippet,
        remove_snippet,
        labeler_id: None,
        labeled_at: labels.values().filter_map(|l| l.labeled_at.clone()).max(),
    })
}

/// Builds the exported corpus in pool order.
pub fn resolve_labels(view: &StoreView, reviews: &[Review]) -> Result<ResolvedLabels> {
    let mut entries = Vec::new();
    let mut majority_resolved = Vec::new();
    let mut admin_resolved = Vec::new();
    let mut ties = Vec::new();
    let mut unlabeled = 0;
    for review in reviews {
        if let Some(label) = view.resolution(&review.id) {
            admin_resolved.push(review.id.clone());
            entries.push(Entry::new(review.clone(), label.clone()));
            continue;
        }
        let Some(labels) = view.labels(&review.id).filter(|l| !l.is_empty()) else {
            unlabeled += 1;
            continue;
        };
        match majority_label(labels) {
            Some(label) => {
                let first = labels.values().next().expect("non-empty");
                if labels.values().any(|l| !l.same_answers(first)) {
                    majority_resolved.push(review.id.clone());
                }
                entries.push(Entry::new(review.clone(), label));
            }
            None => ties.push(review.id.clone()),
        }
    }
    if !ties.is_empty() {
        return Err(Error::UnresolvedTies(ties));
    }
    Ok(ResolvedLabels {
        corpus: LabeledCorpus::new(entries)?,
        majority_resolved,
        admin_resolved,
        unlabeled,
    })
}
