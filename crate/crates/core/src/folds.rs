//! Seeded stratified fold assignment shared by the inner grid search and the
//! outer cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold id in `0..k` for every sample.
///
/// Each class is shuffled with the seeded generator and dealt round-robin;
/// the second class continues where the first left off so fold sizes differ
/// by at most one.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![usize::MAX; labels.len()];
    let mut offset = 0;
    for class in [-1i8, 1] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < k {
            return Err(Error::invalid(format!(
                "class {class:+} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &idx) in members.iter().enumerate() {
            folds[idx] = (offset + pos) % k;
        }
        offset = (offset + members.len()) % k;
    }
    if folds.contains(&usize::MAX) {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    Ok(folds)
}

/// Indices of training and test samples for fold `fold`.
pub fn split(folds: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &f) in folds.iter().enumerate() {
        if f == fold {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}
