use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Name reserved for tie resolution.
pub const ADMIN: &str = "admin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelingSession {
    pub labeler_id: String,
    /// Shared reviews first, then this labeler's own slice.
    pub assigned_ids: Vec<String>,
    pub completed_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub completed: usize,
    pub assigned: usize,
}

impl LabelingSession {
    pub fn progress(&self) -> Progress {
        Progress {
            completed: self.completed_ids.len(),
            assigned: self.assigned_ids.len(),
        }
    }

    pub fn is_assigned(&self, review_id: &str) -> bool {
        self.assigned_ids.iter().any(|id| id == review_id)
    }

    /// First assigned review not yet completed.
    pub fn next_unlabeled(&self) -> Option<&str> {
        self.assigned_ids
            .iter()
            .find(|id| !self.completed_ids.contains(*id))
            .map(String::as_str)
    }

    /// Marks a review done. Only assigned reviews count.
    pub fn complete(&mut self, review_id: &str) {
        if self.is_assigned(review_id) {
            self.completed_ids.insert(review_id.to_string());
        }
    }
}

/// Number of shared reviews: `ceil(fraction * n)`, ignoring rounding noise
/// in the product.
pub fn shared_pool_size(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let size = (exact - 1e-9).ceil().max(0.0) as usize;
    size.min(n)
}

/// Splits `ids` into one shared pool handed to everyone plus disjoint,
/// near-equal slices (sizes differ by at most one).
pub fn assign_reviews<S: AsRef<str>, L: AsRef<str>>(
    ids: &[S],
    labelers: &[L],
    shared_fraction: f64,
    seed: u64,
) -> Result<Vec<LabelingSession>> {
    if ids.is_empty() {
        return Err(Error::Invalid("cannot assign reviews from an empty corpus".into()));
    }
    if labelers.is_empty() {
        return Err(Error::Invalid("at least one labeler is required".into()));
    }
    if !(0.0..1.0).contains(&shared_fraction) {
        return Err(Error::Invalid(format!(
            "shared fraction must be in [0, 1), got {shared_fraction}"
        )));
    }
    let mut names = BTreeSet::new();
    for l in labelers {
        let l = l.as_ref();
        if l.trim().is_empty() || l == ADMIN {
            return Err(Error::Invalid(format!("`{l}` cannot be used as a labeler name")));
        }
        if !names.insert(l) {
            return Err(Error::Invalid(format!("labeler `{l}` listed twice")));
        }
    }
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_ref()) {
            return Err(Error::Invalid(format!("duplicate review id `{}`", id.as_ref())));
        }
    }

    let mut order: Vec<&str> = ids.iter().map(AsRef::as_ref).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (shared, rest) = order.split_at(shared_pool_size(order.len(), shared_fraction));

    let n = labelers.len();
    let (base, extra) = (rest.len() / n, rest.len() % n);
    let mut start = 0;
    Ok(labelers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let len = base + usize::from(i < extra);
            let slice = &rest[start..start + len];
            start += len;
            LabelingSession {
                labeler_id: l.as_ref().to_string(),
                assigned_ids: shared.iter().chain(slice).map(|s| s.to_string()).collect(),
                completed_ids: BTreeSet::new(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    #[test]
    fn ten_percent_of_a_hundred_over_five() {
        let sessions = assign_reviews(&ids(100), &["a", "b", "c", "d", "e"], 0.1, 7).unwrap();
        for s in &sessions {
            assert_eq!(s.assigned_ids.len(), 28);
            assert_eq!(s.assigned_ids[..10], sessions[0].assigned_ids[..10]);
        }
    }

    #[test]
    fn single_labeler_gets_everything() {
        let sessions = assign_reviews(&ids(9), &["solo"], 0.3, 1).unwrap();
        let got: BTreeSet<_> = sessions[0].assigned_ids.iter().cloned().collect();
        assert_eq!(got.len(), 9);
    }

    #[test]
    fn zero_fraction_has_no_overlap() {
        let sessions = assign_reviews(&ids(10), &["a", "b", "c"], 0.0, 1).unwrap();
        let sizes: Vec<usize> = sessions.iter().map(|s| s.assigned_ids.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn rejections() {
        let none: [&str; 0] = [];
        assert!(assign_reviews(&none, &["a"], 0.1, 0).is_err());
        assert!(assign_reviews(&ids(3), &none, 0.1, 0).is_err());
        assert!(assign_reviews(&ids(3), &["a"], 1.0, 0).is_err());
        assert!(assign_reviews(&ids(3), &["a"], -0.1, 0).is_err());
        assert!(assign_reviews(&ids(3), &["admin"], 0.1, 0).is_err());
        assert!(assign_reviews(&ids(3), &["a", "a"], 0.1, 0).is_err());
    }

    #[test]
    fn pool_size_rounding() {
        assert_eq!(shared_pool_size(100, 0.1), 10);
        assert_eq!(shared_pool_size(101, 0.1), 11);
        assert_eq!(shared_pool_size(1483, 0.1), 149);
        assert_eq!(shared_pool_size(7, 0.0), 0);
    }

    #[test]
    fn next_and_progress() {
        let mut s = assign_reviews(&ids(3), &["a"], 0.0, 0).unwrap().remove(0);
        let first = s.next_unlabeled().unwrap().to_string();
        assert_eq!(first, s.assigned_ids[0]);
        s.complete(&first);
        assert_eq!(s.next_unlabeled(), Some(s.assigned_ids[1].as_str()));
        s.complete("not-mine");
        assert_eq!(s.progress(), Progress { completed: 1, assigned: 3 });
        for id in s.assigned_ids.clone() {
            s.complete(&id);
        }
        assert_eq!(s.next_unlabeled(), None);
    }

    proptest! {
        #[test]
        fn shared_identical_unique_disjoint_covering(n in 1usize..200, labelers in 1usize..7, pct in 0u32..100, seed: u64) {
            let names: Vec<String> = (0..labelers).map(|i| format!("l{i}")).collect();
            let fraction = f64::from(pct) / 100.0;
            let sessions = assign_reviews(&ids(n), &names, fraction, seed).unwrap();
            let shared = shared_pool_size(n, fraction);
            let pool = &sessions[0].assigned_ids[..shared];
            let mut union = BTreeSet::new();
            let mut unique_total = 0;
            let mut sizes = Vec::new();
            for s in &sessions {
                prop_assert_eq!(&s.assigned_ids[..shared], pool);
                let unique = &s.assigned_ids[shared..];
                sizes.push(unique.len());
                unique_total += unique.len();
                for id in unique {
                    prop_assert!(!pool.contains(id));
                    prop_assert!(union.insert(id.clone()), "{} assigned twice", id);
                }
            }
            union.extend(pool.iter().cloned());
            prop_assert_eq!(union.len(), n);
            prop_assert_eq!(unique_total + shared, n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(&assign_reviews(&ids(n), &names, fraction, seed).unwrap(), &sessions);
        }
    }
}
