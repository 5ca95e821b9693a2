use serde::{Deserialize, Serialize};

use super::svm::{fit_linear_svm_with_report, SvmConfig};
use super::{LinearModel, TangentDataset};
use crate::error::{Error, Result};
use crate::evalstats::roc_auc;
use crate::folds::{split, stratified_folds};

pub const DEFAULT_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    #[serde(default)]
    pub svm: SvmConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            grid: DEFAULT_GRID.to_vec(),
            folds: 5,
            seed: 0,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_reg: f64,
    /// Refit on all samples with `best_reg`.
    pub model: LinearModel,
    /// Mean inner-fold ROC-AUC for each grid entry, in grid order.
    pub mean_auc: Vec<f64>,
}

/// Choose the SVM regularization by stratified inner cross-validation.
///
/// The entry with the highest mean fold AUC wins; among equal scores the
/// smallest regularization is taken.
pub fn grid_search_cv(data: &TangentDataset, cfg: &GridConfig) -> Result<GridResult> {
    if cfg.grid.is_empty() {
        return Err(Error::invalid("regularization grid is empty"));
    }
    if let Some(bad) = cfg.grid.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::invalid(format!("grid entry {bad} is not a positive number")));
    }
    data.require_two_classes(2)?;
    let folds = stratified_folds(data.labels(), cfg.folds, cfg.seed)?;
    let splits: Vec<_> = (0..cfg.folds).map(|f| split(&folds, f)).collect();
    for (train, _) in &splits {
        data.subset(train).require_two_classes(2)?;
    }

    let mut mean_auc = Vec::with_capacity(cfg.grid.len());
    for &reg in &cfg.grid {
        let mut total = 0.0;
        for (train, test) in &splits {
            let (model, _) = fit_linear_svm_with_report(&data.subset(train), reg, &cfg.svm)?;
            let held_out = data.subset(test);
            let scores = model.decision_values(held_out.vectors())?;
            total += roc_auc(scores.as_slice(), held_out.labels())?;
        }
        mean_auc.push(total / cfg.folds as f64);
    }

    let mut best = 0;
    for i in 1..cfg.grid.len() {
        let better = mean_auc[i] > mean_auc[best];
        let tie_smaller = mean_auc[i] == mean_auc[best] && cfg.grid[i] < cfg.grid[best];
        if better || tie_smaller {
            best = i;
        }
    }
    let best_reg = cfg.grid[best];
    let (model, _) = fit_linear_svm_with_report(data, best_reg, &cfg.svm)?;
    Ok(GridResult {
        best_reg,
        model,
        mean_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::fit_linear_svm;
    use crate::testutil::{gaussian_matrix, rng};

    fn blobs(seed: u64, n: usize, shift: f64) -> TangentDataset {
        let mut g = rng(seed);
        let mut x = gaussian_matrix(&mut g, n, 3);
        let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        for i in 0..n {
            x[(i, 0)] += shift * f64::from(labels[i]);
        }
        TangentDataset::new(x, labels).unwrap()
    }

    #[test]
    fn single_entry_and_duplicate_grid() {
        let d = blobs(1, 30, 0.5);
        let cfg = GridConfig {
            grid: vec![3.0],
            ..GridConfig::default()
        };
        let r = grid_search_cv(&d, &cfg).unwrap();
        assert_eq!(r.best_reg, 3.0);
        assert_eq!(r.model, fit_linear_svm(&d, 3.0).unwrap());

        let cfg = GridConfig {
            grid: vec![2.0, 2.0],
            ..GridConfig::default()
        };
        let r = grid_search_cv(&d, &cfg).unwrap();
        assert_eq!(r.best_reg, 2.0);
        assert_eq!(r.mean_auc[0], r.mean_auc[1]);
    }

    #[test]
    fn separable_data_picks_smallest() {
        let d = blobs(2, 40, 20.0);
        let cfg = GridConfig {
            grid: vec![10.0, 0.01, 1.0],
            ..GridConfig::default()
        };
        let r = grid_search_cv(&d, &cfg).unwrap();
        assert!(r.mean_auc.iter().all(|&a| a == 1.0), "{:?}", r.mean_auc);
        assert_eq!(r.best_reg, 0.01);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let d = blobs(3, 50, 0.4);
        let cfg = GridConfig::default();
        assert_eq!(grid_search_cv(&d, &cfg).unwrap(), grid_search_cv(&d, &cfg).unwrap());
    }

    #[test]
    fn invalid_configurations() {
        let d = blobs(4, 8, 1.0);
        let too_many = GridConfig {
            folds: 5,
            ..GridConfig::default()
        };
        assert!(matches!(grid_search_cv(&d, &too_many), Err(Error::InvalidInput(_))));
        let empty = GridConfig {
            grid: vec![],
            ..GridConfig::default()
        };
        assert!(grid_search_cv(&d, &empty).is_err());
        let negative = GridConfig {
            grid: vec![-1.0],
            folds: 2,
            ..GridConfig::default()
        };
        assert!(grid_search_cv(&d, &negative).is_err());
    }
}
