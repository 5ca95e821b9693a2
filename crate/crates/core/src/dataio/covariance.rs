use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrialSet;
use crate::error::{Error, Result};
use crate::manifold::SpdMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceConfig {
    /// Remove each channel's mean first.
    pub center: bool,
    /// Divide by the number of samples.
    pub scale: bool,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig {
            center: true,
            scale: true,
        }
    }
}

/// `X Xᵀ` (or `X Xᵀ / N`) of a `C × N` trial, optionally centered.
pub fn empirical_covariance(trial: &DMatrix<f64>, cfg: &CovarianceConfig) -> Result<SpdMatrix> {
    let (c, n) = trial.shape();
    if c == 0 || n == 0 {
        return Err(Error::invalid("empty trial"));
    }
    if trial.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("trial contains non-finite samples"));
    }
    for (i, row) in trial.row_iter().enumerate() {
        let first = row[0];
        if row.iter().all(|&v| v == first) && (cfg.center || first == 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "channel {i} is constant; drop it or add jitter"
            )));
        }
    }
    if n <= c {
        warn!("covariance from {n} samples of {c} channels is rank deficient");
    }
    SpdMatrix::new(covariance_unchecked(trial, cfg)).map_err(|e| match e {
        Error::NotPositiveDefinite(msg) => Error::NotPositiveDefinite(format!(
            "{msg}; use more samples than channels or add jitter"
        )),
        other => other,
    })
}

/// Covariance without validation, for the prediction hot path.
pub(crate) fn covariance_unchecked(trial: &DMatrix<f64>, cfg: &CovarianceConfig) -> DMatrix<f64> {
    let n = trial.ncols();
    let mut cov = if cfg.center {
        let mut centered = trial.clone();
        for mut row in centered.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        &centered * centered.transpose()
    } else {
        trial * trial.transpose()
    };
    if cfg.scale {
        cov /= n as f64;
    }
    crate::manifold::symmetrize(cov)
}

/// Covariance of every trial, in order.
pub fn covariances(set: &TrialSet, cfg: &CovarianceConfig) -> Result<Vec<SpdMatrix>> {
    set.trials()
        .iter()
        .enumerate()
        .map(|(t, x)| {
            empirical_covariance(x, cfg).map_err(|e| match e {
                Error::NotPositiveDefinite(msg) => Error::NotPositiveDefinite(format!("trial {t}: {msg}")),
                other => other,
            })
        })
        .collect()
}
