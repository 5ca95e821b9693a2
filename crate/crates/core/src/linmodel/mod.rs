//! Linear classifiers on tangent vectors and other real feature vectors.

mod grid;
mod lda;
mod svm;

pub use grid::{grid_search_cv, GridConfig, GridResult, DEFAULT_GRID};
pub use lda::{fit_lda, fit_lda_with_report, LdaReport};
pub use svm::{fit_linear_svm, fit_linear_svm_with_report, SvmConfig, SvmReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-per-sample feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDataset {
    vectors: DMatrix<f64>,
    labels: Vec<i8>,
}

impl TangentDataset {
    pub fn new(vectors: DMatrix<f64>, labels: Vec<i8>) -> Result<Self> {
        if vectors.nrows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                vectors.nrows(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::invalid(format!("label {l} is not -1 or +1")));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        Ok(TangentDataset { vectors, labels })
    }

    /// Build from per-sample feature vectors of equal length.
    pub fn from_rows(rows: &[DVector<f64>], labels: Vec<i8>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("feature vectors differ in length"));
        }
        let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(m, labels)
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Samples per class as `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    pub fn subset(&self, indices: &[usize]) -> TangentDataset {
        let vectors = self.vectors.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        TangentDataset { vectors, labels }
    }

    pub(crate) fn require_two_classes(&self, min_per_class: usize) -> Result<()> {
        let (neg, pos) = self.class_counts();
        if neg < min_per_class || pos < min_per_class {
            return Err(Error::invalid(format!(
                "need at least {min_per_class} samples per class, got {pos} positive and {neg} negative"
            )));
        }
        Ok(())
    }
}

/// `x ↦ wᵀx + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(with = "crate::serial::vector")]
    pub weights: DVector<f64>,
    pub intercept: f64,
    /// Regularization strength the model was fitted with; 0 for LDA.
    pub reg: f64,
    pub feature_dim: usize,
}

impl LinearModel {
    pub fn new(weights: DVector<f64>, intercept: f64, reg: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
            return Err(Error::invalid("linear model has non-finite entries"));
        }
        let feature_dim = weights.len();
        Ok(LinearModel {
            weights,
            intercept,
            reg,
            feature_dim,
        })
    }

    /// Check a deserialized model for consistency.
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.feature_dim {
            return Err(Error::format(format!(
                "feature_dim is {} but there are {} weights",
                self.feature_dim,
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) || !self.intercept.is_finite() {
            return Err(Error::format("linear model has non-finite entries"));
        }
        Ok(())
    }

    pub fn decision_values(&self, data: &DMatrix<f64>) -> Result<DVector<f64>> {
        if data.ncols() != self.feature_dim {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.feature_dim,
                data.ncols()
            )));
        }
        Ok(data * &self.weights + DVector::repeat(data.nrows(), self.intercept))
    }
}

/// `wᵀx + b`.
pub fn decision_value(model: &LinearModel, x: &DVector<f64>) -> Result<f64> {
    if x.len() != model.feature_dim {
        return Err(Error::invalid(format!(
            "model expects {} features, got {}",
            model.feature_dim,
            x.len()
        )));
    }
    Ok(model.weights.dot(x) + model.intercept)
}

/// Label of a score; zero maps to `+1`.
pub fn sign_label(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}
