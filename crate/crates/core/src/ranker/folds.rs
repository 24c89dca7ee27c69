use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Review id to fold number, folds numbered `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.folds.get(id).copied()
    }

    /// Ids in fold `fold`, in id order.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Size of each fold; index 0 is fold 1.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in self.folds.values() {
            sizes[f - 1] += 1;
        }
        sizes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(id, &f)| (id.as_str(), f))
    }
}

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    if n < k {
        return Err(Error::NotEnoughReviews { ids: n, k });
    }
    Ok(())
}

fn assign<S: AsRef<str>>(ids: &[S], order: &[usize], k: usize) -> Result<FoldAssignment> {
    let mut folds = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let id = ids[i].as_ref();
        if folds.insert(id.to_string(), pos % k + 1).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(FoldAssignment { k, folds })
}

/// Uniformly random partition into `k` folds whose sizes differ by at most one.
pub fn make_folds<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<FoldAssignment> {
    check(ids.len(), k)?;
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    assign(ids, &order, k)
}

/// Like [`make_folds`], but deals each class round-robin so every fold gets
/// a near-equal share of it.
pub fn make_stratified_folds<S: AsRef<str>>(ids: &[S], classes: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    check(ids.len(), k)?;
    assert_eq!(ids.len(), classes.len(), "one class per id");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let distinct: BTreeSet<usize> = classes.iter().copied().collect();
    let mut order = Vec::with_capacity(ids.len());
    for class in distinct {
        let mut members: Vec<usize> = (0..ids.len()).filter(|&i| classes[i] == class).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    assign(ids, &order, k)
}
