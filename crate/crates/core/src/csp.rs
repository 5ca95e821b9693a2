//! Common Spatial Patterns and its relation to tangent-space filters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{
    eigenspace_deviation, frechet_mean, ged, ged_symmetric, FrechetConfig, GedResult, SpdMatrix,
    SymMatrix, TangentSpace,
};
use crate::tssf::sort_components;

/// Relative eigenvalue gap below which eigenvectors are compared as one
/// subspace.
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CspSelection {
    /// Largest `|log λ|` first, ties as for TSSF filters.
    #[default]
    LogMagnitude,
    /// `K/2` filters from each end of the spectrum.
    BothEnds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ClassMean {
    #[default]
    Arithmetic,
    Riemannian(FrechetConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspConfig {
    pub k: usize,
    #[serde(default)]
    pub selection: CspSelection,
    #[serde(default)]
    pub class_mean: ClassMean,
}

impl CspConfig {
    pub fn new(k: usize) -> Self {
        CspConfig {
            k,
            selection: CspSelection::default(),
            class_mean: ClassMean::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspModel {
    pub k: usize,
    /// `C × K`, in selection order.
    #[serde(with = "crate::serial::rows")]
    pub filters: DMatrix<f64>,
    /// All generalized eigenvalues of `(mean⁺, mean⁻)`, descending.
    #[serde(with = "crate::serial::vector")]
    pub eigenvalues: DVector<f64>,
    /// Eigenpair index of each selected filter.
    pub selection: Vec<usize>,
}

impl CspModel {
    pub fn channels(&self) -> usize {
        self.filters.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.eigenvalues.len();
        if self.filters.shape() != (c, self.k) || self.selection.len() != self.k {
            return Err(Error::format("CSP model: filter shape does not match K"));
        }
        if self.selection.iter().any(|&i| i >= c) {
            return Err(Error::format("CSP model: selection index out of range"));
        }
        Ok(())
    }

    /// `F_Kᵀ X`.
    pub fn apply(&self, trial: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if trial.nrows() != self.channels() {
            return Err(Error::invalid(format!(
                "trial has {} channels, filters expect {}",
                trial.nrows(),
                self.channels()
            )));
        }
        Ok(self.filters.tr_mul(trial))
    }

    /// Log-variances of the filtered signals from the filtered covariance.
    pub fn features(&self, filtered_cov: &SpdMatrix) -> Result<DVector<f64>> {
        if filtered_cov.dim() != self.k {
            return Err(Error::invalid("filtered covariance does not match K"));
        }
        Ok(filtered_cov.as_matrix().diagonal().map(f64::ln))
    }
}

fn split_classes<'a>(covs: &'a [SpdMatrix], labels: &[i8]) -> Result<(Vec<&'a SpdMatrix>, Vec<&'a SpdMatrix>)> {
    if covs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} covariances but {} labels",
            covs.len(),
            labels.len()
        )));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (c, &l) in covs.iter().zip(labels) {
        match l {
            1 => pos.push(c),
            -1 => neg.push(c),
            other => return Err(Error::invalid(format!("label {other} is not -1 or +1"))),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("both classes must be present"));
    }
    let n = pos[0].dim();
    if covs.iter().any(|c| c.dim() != n) {
        return Err(Error::invalid("covariances differ in size"));
    }
    Ok((pos, neg))
}

fn arithmetic_mean(covs: &[&SpdMatrix]) -> Result<SpdMatrix> {
    let n = covs[0].dim();
    let sum = covs
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, c| acc + c.as_matrix());
    SpdMatrix::new(sum / covs.len() as f64)
}

/// Class means `(mean⁺, mean⁻)`.
pub fn class_means(covs: &[SpdMatrix], labels: &[i8], kind: ClassMean) -> Result<(SpdMatrix, SpdMatrix)> {
    let (pos, neg) = split_classes(covs, labels)?;
    match kind {
        ClassMean::Arithmetic => Ok((arithmetic_mean(&pos)?, arithmetic_mean(&neg)?)),
        ClassMean::Riemannian(cfg) => {
            let owned = |v: &[&SpdMatrix]| v.iter().map(|c| (*c).clone()).collect::<Vec<_>>();
            Ok((
                frechet_mean(&owned(&pos), &cfg)?,
                frechet_mean(&owned(&neg), &cfg)?,
            ))
        }
    }
}

/// Generalized eigenvectors of `(mean⁺, mean⁻)`, maximizing the variance
/// ratio between the two conditions.
pub fn fit_csp(covs: &[SpdMatrix], labels: &[i8], cfg: &CspConfig) -> Result<CspModel> {
    let c = covs.first().map_or(0, |c| c.dim());
    if cfg.k == 0 || cfg.k % 2 != 0 || cfg.k > c {
        return Err(Error::invalid(format!(
            "CSP needs an even number of filters in 2..={c}, got {}",
            cfg.k
        )));
    }
    let (mp, mn) = class_means(covs, labels, cfg.class_mean)?;
    let r = ged(&mp, &mn)?;
    let selection: Vec<usize> = match cfg.selection {
        CspSelection::LogMagnitude => sort_components(&r.eigenvalues.map(f64::ln))
            .into_iter()
            .take(cfg.k)
            .collect(),
        CspSelection::BothEnds => (0..cfg.k / 2).chain((c - cfg.k / 2..c).rev()).collect(),
    };
    Ok(CspModel {
        k: cfg.k,
        filters: r.eigenvectors.select_columns(&selection),
        eigenvalues: r.eigenvalues,
        selection,
    })
}

/// `GED(mean⁺ − mean⁻, mean⁺ + mean⁻)`: the discriminative form of CSP,
/// whose eigenvalues are `(λ − 1)/(λ + 1)` for the eigenvalues `λ` of
/// `GED(mean⁺, mean⁻)`.
pub fn discriminative_ged(mean_pos: &SpdMatrix, mean_neg: &SpdMatrix) -> Result<GedResult> {
    let diff = SymMatrix::new(mean_pos.as_matrix() - mean_neg.as_matrix())?;
    let common = SpdMatrix::new(mean_pos.as_matrix() + mean_neg.as_matrix())?;
    ged_symmetric(&diff, &common)
}

/// Map from CSP eigenvalues to those of the discriminative form.
pub fn discriminative_eigenvalue(lambda: f64) -> f64 {
    (lambda - 1.0) / (lambda + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspEquivalenceReport {
    /// Largest principal angle between the eigenspaces of
    /// `GED(mean⁺, mean⁻)` and `GED(mean⁺ − mean⁻, (mean⁺ + mean⁻)/2)`.
    pub chain_deviation: f64,
    /// Largest deviation from `λ' = (λ − 1)/(λ + 1)` for the discriminative
    /// form against `mean⁺ + mean⁻`.
    pub eigenvalue_map_deviation: f64,
    /// `‖(mean⁺ − mean⁻) − Exp_{C^m}(S̄⁺ − S̄⁻)‖_F / ‖mean⁺ − mean⁻‖_F` with
    /// `S̄` the class means of the tangent matrices at the Riemannian mean.
    /// Absent when the class means coincide.
    pub assumption_residual: Option<f64>,
    /// Largest principal angle between the eigenspaces of
    /// `GED(S̄⁺ − S̄⁻, C^m)` and `GED(mean⁺ − mean⁻, C^m)`.
    pub assumption_angle: Option<f64>,
    /// The class means are numerically identical.
    pub degenerate: bool,
}

/// Check each step linking CSP to tangent-space filters on a dataset.
pub fn csp_tssf_equivalence_report(
    covs: &[SpdMatrix],
    labels: &[i8],
    frechet: &FrechetConfig,
) -> Result<CspEquivalenceReport> {
    let (mp, mn) = class_means(covs, labels, ClassMean::Arithmetic)?;
    let diff = mp.as_matrix() - mn.as_matrix();
    let degenerate = diff.norm() <= 1e-12 * (mp.as_matrix() + mn.as_matrix()).norm();

    let csp = ged(&mp, &mn)?;
    let half = SpdMatrix::new((mp.as_matrix() + mn.as_matrix()) * 0.5)?;
    let diff_sym = SymMatrix::new(diff.clone())?;
    let chain = ged_symmetric(&diff_sym, &half)?;
    let chain_deviation =
        eigenspace_deviation(&csp.eigenvectors, &chain.eigenvectors, &csp.eigenvalues, CLUSTER_TOL);

    let disc = discriminative_ged(&mp, &mn)?;
    let eigenvalue_map_deviation = csp
        .eigenvalues
        .iter()
        .zip(disc.eigenvalues.iter())
        .map(|(&l, &m)| (discriminative_eigenvalue(l) - m).abs())
        .fold(0.0, f64::max);

    let (assumption_residual, assumption_angle) = if degenerate {
        (None, None)
    } else {
        let space = TangentSpace::new(frechet_mean(covs, frechet)?)?;
        let n = mp.dim();
        let mut sums = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        let mut counts = [0usize; 2];
        for (c, &l) in covs.iter().zip(labels) {
            let slot = usize::from(l == -1);
            sums[slot] += space.log_map(c)?.as_matrix();
            counts[slot] += 1;
        }
        let tangent_diff = &sums[0] / counts[0] as f64 - &sums[1] / counts[1] as f64;
        let tangent_diff = SymMatrix::new(crate::manifold::symmetrize(tangent_diff))?;
        let mapped = space.exp_map(&tangent_diff)?;
        let residual = (&diff - mapped.as_matrix()).norm() / diff.norm();
        let on_tangent = ged_symmetric(&tangent_diff, space.reference())?;
        let on_means = ged_symmetric(&diff_sym, space.reference())?;
        let angle = eigenspace_deviation(
            &on_tangent.eigenvectors,
            &on_means.eigenvectors,
            &on_tangent.eigenvalues,
            CLUSTER_TOL,
        );
        (Some(residual), Some(angle))
    };

    Ok(CspEquivalenceReport {
        chain_deviation,
        eigenvalue_map_deviation,
        assumption_residual,
        assumption_angle,
        degenerate,
    })
}
