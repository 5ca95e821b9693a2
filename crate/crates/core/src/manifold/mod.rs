//! Geometry of the manifold of symmetric positive-definite matrices under the
//! affine-invariant Riemannian metric.
//!
//! Every matrix function in this module goes through [`sym_eig`], so `logm`,
//! `expm` and `powm` agree with each other to rounding.

mod eig;
mod functions;
mod ged;
mod jacobi;
mod mean;
mod subspace;
mod tangent;

pub use eig::{sym_eig, SymEigen};
pub use functions::{airm_distance, expm, logm, powm};
pub use ged::{ged, ged_symmetric, GedResult};
pub use mean::{frechet_mean, frechet_mean_with_report, FrechetConfig, FrechetReport};
pub use subspace::{eigenspace_deviation, max_principal_angle, vector_angle};
pub use tangent::{
    exp_map_at, inner_product_at, log_map_at, source_dim, tangent_len, unvectorize, vectorize,
    TangentSpace, TangentVector,
};

pub(crate) use eig::eig_unchecked;
pub(crate) use functions::logm_raw;
pub(crate) use tangent::unvectorize_raw;
#[cfg(test)]
pub(crate) use tangent::vectorize_raw;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serial::RowMatrix;

/// Default relative threshold on the eigenvalue spread of an SPD matrix.
pub const DEFAULT_SPD_TOL: f64 = 1e-10;

/// Relative tolerance used by the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let a = m[(i, j)];
            let b = m[(j, i)];
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid("matrix contains non-finite entries"));
            }
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
        }
        if !m[(i, i)].is_finite() {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
    }
    Ok(())
}

/// Average a matrix with its transpose.
pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub(crate) fn check_same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!(
            "dimension mismatch in {what}: {a} vs {b}"
        )));
    }
    Ok(())
}

/// A dense symmetric positive-definite matrix, such as a trial covariance or
/// a Riemannian mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RowMatrix", into = "RowMatrix")]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validate with the default tolerance [`DEFAULT_SPD_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_SPD_TOL)
    }

    /// Validate symmetry and require `λ_min > spd_tol · λ_max`.
    pub fn with_tolerance(m: DMatrix<f64>, spd_tol: f64) -> Result<Self> {
        check_symmetric(&m)?;
        let m = symmetrize(m);
        let e = eig::eig_unchecked(&m);
        eig::check_positive(&e.eigenvalues, spd_tol)?;
        Ok(SpdMatrix(m))
    }

    /// Add `lambda · I` before validating. `lambda = 0` is plain [`SpdMatrix::new`].
    pub fn with_jitter(mut m: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid("jitter must be non-negative"));
        }
        for i in 0..m.nrows().min(m.ncols()) {
            m[(i, i)] += lambda;
        }
        Self::new(m)
    }

    /// Wrap a matrix that is SPD by construction. Only symmetrizes.
    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        SpdMatrix(symmetrize(m))
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            diag,
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `Wᵀ A W` for a `C × K` matrix `W` of full column rank.
    pub fn congruence(&self, w: &DMatrix<f64>) -> Result<SpdMatrix> {
        check_same_dim(w.nrows(), self.dim(), "congruence")?;
        SpdMatrix::new(symmetrize(w.transpose() * &self.0 * w))
    }

    pub fn scaled(&self, factor: f64) -> Result<SpdMatrix> {
        if !(factor > 0.0) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(SpdMatrix(&self.0 * factor))
    }

    pub fn eig(&self) -> SymEigen {
        eig::eig_unchecked(&self.0)
    }
}

impl TryFrom<RowMatrix> for SpdMatrix {
    type Error = Error;

    fn try_from(m: RowMatrix) -> Result<Self> {
        SpdMatrix::new(m.into_matrix()?)
    }
}

impl From<SpdMatrix> for RowMatrix {
    fn from(m: SpdMatrix) -> Self {
        RowMatrix::from(&m.0)
    }
}

/// A symmetric matrix, possibly indefinite: an element of a tangent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RowMatrix", into = "RowMatrix")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(SymMatrix(symmetrize(m)))
    }

    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        SymMatrix(symmetrize(m))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn eig(&self) -> SymEigen {
        eig::eig_unchecked(&self.0)
    }
}

impl TryFrom<RowMatrix> for SymMatrix {
    type Error = Error;

    fn try_from(m: RowMatrix) -> Result<Self> {
        SymMatrix::new(m.into_matrix()?)
    }
}

impl From<SymMatrix> for RowMatrix {
    fn from(m: SymMatrix) -> Self {
        RowMatrix::from(&m.0)
    }
}

impl From<SpdMatrix> for SymMatrix {
    fn from(m: SpdMatrix) -> Self {
        SymMatrix(m.0)
    }
}

/// Trace of a product of two square matrices without forming the product.
pub(crate) fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SpdMatrix::new(m.clone()), Err(Error::InvalidInput(_))));
        assert!(matches!(SymMatrix::new(m), Err(Error::InvalidInput(_))));

        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            SpdMatrix::new(indefinite),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn relative_spd_threshold() {
        let nearly_singular = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1e-11]);
        assert!(SpdMatrix::new(nearly_singular.clone()).is_err());
        assert!(SpdMatrix::with_tolerance(nearly_singular.clone(), 1e-12).is_ok());
        let singular = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0]);
        assert!(SpdMatrix::new(singular.clone()).is_err());
        assert!(SpdMatrix::with_jitter(singular, 1e-3).is_ok());
    }

    #[test]
    fn serde_validates() {
        #[derive(Serialize, Deserialize)]
        struct Doc {
            m: SpdMatrix,
        }
        let spd = SpdMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        let text = toml::to_string(&Doc { m: spd.clone() }).unwrap();
        let back: Doc = toml::from_str(&text).unwrap();
        assert_eq!(back.m, spd);

        let bad = "m = [[1.0, 2.0], [2.0, 1.0]]";
        assert!(toml::from_str::<Doc>(bad).is_err());
    }
}
