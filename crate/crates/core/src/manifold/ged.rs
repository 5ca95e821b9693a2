use nalgebra::{DMatrix, DVector};

use super::eig::{check_positive, eig_unchecked};
use super::functions::{sandwich, sqrt_pair};
use super::{check_same_dim, SpdMatrix, SymMatrix, DEFAULT_SPD_TOL};
use crate::error::Result;

/// Generalized eigenpairs `A F = B F diag(d)` with `Fᵀ B F = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GedResult {
    /// Columns are generalized eigenvectors.
    pub eigenvectors: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: DVector<f64>,
}

impl GedResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Solve the pencil `(A, B)` through whitening by `B^{-1/2}`: with
/// `V, d = eig(B^{-1/2} A B^{-1/2})`, the eigenvectors are `F = B^{-1/2} V`.
fn solve(a: &DMatrix<f64>, b: &SpdMatrix) -> Result<GedResult> {
    let (_, inv_sqrt) = sqrt_pair(b.as_matrix())?;
    let e = eig_unchecked(&sandwich(&inv_sqrt, a));
    Ok(GedResult {
        eigenvectors: &inv_sqrt * e.eigenvectors,
        eigenvalues: e.eigenvalues,
    })
}

/// Generalized eigendecomposition of two SPD matrices; all eigenvalues are
/// positive.
pub fn ged(a: &SpdMatrix, b: &SpdMatrix) -> Result<GedResult> {
    check_same_dim(a.dim(), b.dim(), "ged")?;
    let r = solve(a.as_matrix(), b)?;
    check_positive(&r.eigenvalues, DEFAULT_SPD_TOL)?;
    Ok(r)
}

/// Generalized eigendecomposition of a symmetric (possibly indefinite) matrix
/// against an SPD matrix.
pub fn ged_symmetric(a: &SymMatrix, b: &SpdMatrix) -> Result<GedResult> {
    check_same_dim(a.dim(), b.dim(), "ged_symmetric")?;
    solve(a.as_matrix(), b)
}
