use nalgebra::{DMatrix, DVector};

use super::jacobi::jacobi_eigen;

use super::{check_symmetric, symmetrize};
use crate::error::{Error, Result};

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order (ties keep their original
/// index order) and every eigenvector column has its largest-magnitude entry
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[j]);
        }
        symmetrize(&scaled * self.eigenvectors.transpose())
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Symmetric eigendecomposition with the crate-wide ordering and sign rules.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEigen> {
    check_symmetric(a)?;
    if a.nrows() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    Ok(eig_unchecked(a))
}

pub(crate) fn eig_unchecked(a: &DMatrix<f64>) -> SymEigen {
    let n = a.nrows();
    let (raw_values, raw_vectors) = jacobi_eigen(a);

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their original index order
    order.sort_by(|&i, &j| raw_values[j].total_cmp(&raw_values[i]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| raw_values[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = raw_vectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for (k, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = k;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(dst, &(col * sign));
    }
    SymEigen {
        eigenvalues,
        eigenvectors,
    }
}

/// Require every eigenvalue to exceed `tol · λ_max` (and `λ_max > 0`).
pub(crate) fn check_positive(eigenvalues: &DVector<f64>, tol: f64) -> Result<()> {
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    if !(max > 0.0) || !(min > tol * max) || !max.is_finite() {
        return Err(Error::NotPositiveDefinite(format!(
            "eigenvalue range [{min:e}, {max:e}] violates relative tolerance {tol:e}"
        )));
    }
    Ok(())
}
