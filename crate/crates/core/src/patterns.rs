//! Spatial patterns: the forward-model counterpart of spatial filters.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::SpdMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    /// `C × K`, column `k` belongs to filter `k`.
    pub patterns: DMatrix<f64>,
    pub source_cov_used: SpdMatrix,
}

/// `A = Σ F (Fᵀ Σ F)⁻¹`.
pub fn compute_patterns(filters: &DMatrix<f64>, data_cov: &SpdMatrix) -> Result<PatternSet> {
    if filters.nrows() != data_cov.dim() {
        return Err(Error::invalid(format!(
            "filters have {} rows, covariance is {}x{}",
            filters.nrows(),
            data_cov.dim(),
            data_cov.dim()
        )));
    }
    if filters.ncols() == 0 || filters.ncols() > filters.nrows() {
        return Err(Error::invalid("filter matrix must have between 1 and C columns"));
    }
    let sv = filters.singular_values();
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::invalid("filters are rank deficient"));
    }
    let sigma_f = data_cov.as_matrix() * filters;
    let gram = filters.tr_mul(&sigma_f);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::invalid("FᵀΣF is not positive definite"))?;
    // A = ΣF G⁻¹ with G symmetric, so Aᵀ = G⁻¹ (ΣF)ᵀ.
    let patterns = chol.solve(&sigma_f.transpose()).transpose();
    Ok(PatternSet {
        patterns,
        source_cov_used: data_cov.clone(),
    })
}

/// Arithmetic mean of covariances, the data covariance used for patterns.
pub fn mean_covariance(covs: &[SpdMatrix]) -> Result<SpdMatrix> {
    let first = covs
        .first()
        .ok_or_else(|| Error::invalid("no covariances to average"))?;
    let n = first.dim();
    let mut sum = DMatrix::zeros(n, n);
    for c in covs {
        if c.dim() != n {
            return Err(Error::invalid("covariances differ in size"));
        }
        sum += c.as_matrix();
    }
    SpdMatrix::new(sum / covs.len() as f64)
}

/// One row per channel: `channel,comp_0,comp_1,…`.
pub fn write_patterns_csv<W: Write>(
    out: &mut W,
    patterns: &DMatrix<f64>,
    channel_names: &[String],
) -> Result<()> {
    if channel_names.len() != patterns.nrows() {
        return Err(Error::invalid(format!(
            "{} channel names for {} pattern rows",
            channel_names.len(),
            patterns.nrows()
        )));
    }
    write!(out, "channel")?;
    for k in 0..patterns.ncols() {
        write!(out, ",comp_{k}")?;
    }
    writeln!(out)?;
    for (i, name) in channel_names.iter().enumerate() {
        write!(out, "{name}")?;
        for k in 0..patterns.ncols() {
            write!(out, ",{:e}", patterns[(i, k)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
