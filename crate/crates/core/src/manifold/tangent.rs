use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use super::functions::{expm_raw, logm_raw, sandwich, sqrt_pair};
use super::{check_same_dim, trace_product, SpdMatrix, SymMatrix};
use crate::error::{Error, Result};

/// Weighted half-vectorization of a symmetric `C × C` matrix.
///
/// Entries follow the lower triangle row by row: `(0,0), (1,0), (1,1),
/// (2,0), …`; off-diagonal entries carry a factor `√2` so that the dot
/// product of two vectors equals the trace inner product of the matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    dim_source: usize,
    #[serde(with = "crate::serial::vector")]
    values: DVector<f64>,
}

/// Length of the half-vectorization of a `dim × dim` matrix.
pub const fn tangent_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Inverse of [`tangent_len`], if `len` is triangular.
pub fn source_dim(len: usize) -> Option<usize> {
    let c = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (c.saturating_sub(1)..=c + 1).find(|&d| tangent_len(d) == len)
}

impl TangentVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        let dim_source = source_dim(values.len()).filter(|&d| d > 0).ok_or_else(|| {
            Error::invalid(format!(
                "length {} is not of the form C(C+1)/2",
                values.len()
            ))
        })?;
        Ok(TangentVector { dim_source, values })
    }

    pub fn dim_source(&self) -> usize {
        self.dim_source
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }
}

pub(crate) fn vectorize_raw(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(tangent_len(n));
    let mut k = 0;
    for i in 0..n {
        for j in 0..i {
            out[k] = SQRT_2 * m[(i, j)];
            k += 1;
        }
        out[k] = m[(i, i)];
        k += 1;
    }
    out
}

pub(crate) fn unvectorize_raw(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..i {
            let x = v[k] / SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
        m[(i, i)] = v[k];
        k += 1;
    }
    m
}

pub fn vectorize(s: &SymMatrix) -> TangentVector {
    TangentVector {
        dim_source: s.dim(),
        values: vectorize_raw(s.as_matrix()),
    }
}

pub fn unvectorize(v: &TangentVector) -> SymMatrix {
    SymMatrix::from_trusted(unvectorize_raw(&v.values, v.dim_source))
}

/// A reference point together with its square root and inverse square root.
///
/// Tangent vectors produced here are expressed in whitened coordinates,
/// `vec(R^{-1/2} Log_R(X) R^{-1/2})`, so that their dot product is the
/// Riemannian inner product at `R`.
#[derive(Debug, Clone)]
pub struct TangentSpace {
    reference: SpdMatrix,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl TangentSpace {
    pub fn new(reference: SpdMatrix) -> Result<Self> {
        let (sqrt, inv_sqrt) = sqrt_pair(reference.as_matrix())?;
        Ok(TangentSpace {
            reference,
            sqrt,
            inv_sqrt,
        })
    }

    pub fn reference(&self) -> &SpdMatrix {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    /// `R^{-1/2} X R^{-1/2}`.
    pub fn whiten(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        sandwich(&self.inv_sqrt, x)
    }

    /// `R^{1/2} X R^{1/2}`.
    pub fn color(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        sandwich(&self.sqrt, x)
    }

    /// `logm(R^{-1/2} X R^{-1/2})`.
    pub fn whitened_log(&self, x: &SpdMatrix) -> Result<SymMatrix> {
        check_same_dim(x.dim(), self.dim(), "tangent projection")?;
        Ok(SymMatrix::from_trusted(logm_raw(&self.whiten(x.as_matrix()))?))
    }

    /// `Log_R(X) = R^{1/2} logm(R^{-1/2} X R^{-1/2}) R^{1/2}`.
    pub fn log_map(&self, x: &SpdMatrix) -> Result<SymMatrix> {
        let w = self.whitened_log(x)?;
        Ok(SymMatrix::from_trusted(self.color(w.as_matrix())))
    }

    /// `Exp_R(S) = R^{1/2} expm(R^{-1/2} S R^{-1/2}) R^{1/2}`.
    pub fn exp_map(&self, s: &SymMatrix) -> Result<SpdMatrix> {
        check_same_dim(s.dim(), self.dim(), "exp_map")?;
        let e = expm_raw(&self.whiten(s.as_matrix()))?;
        Ok(SpdMatrix::from_trusted(self.color(&e)))
    }

    /// Tangent vector of `X` at the reference, in whitened coordinates.
    pub fn tangent_vector(&self, x: &SpdMatrix) -> Result<TangentVector> {
        Ok(vectorize(&self.whitened_log(x)?))
    }

    /// Tangent-space matrix `S` whose whitened vectorization is `v`.
    pub fn tangent_matrix(&self, v: &TangentVector) -> Result<SymMatrix> {
        check_same_dim(v.dim_source(), self.dim(), "tangent_matrix")?;
        Ok(SymMatrix::from_trusted(
            self.color(&unvectorize_raw(v.values(), v.dim_source())),
        ))
    }

    /// `Tr(R^{-1/2} S₁ R^{-1/2} · R^{-1/2} S₂ R^{-1/2})`.
    pub fn inner_product(&self, s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
        check_same_dim(s1.dim(), self.dim(), "inner_product")?;
        check_same_dim(s2.dim(), self.dim(), "inner_product")?;
        Ok(trace_product(
            &self.whiten(s1.as_matrix()),
            &self.whiten(s2.as_matrix()),
        ))
    }
}

pub fn log_map_at(reference: &SpdMatrix, x: &SpdMatrix) -> Result<SymMatrix> {
    check_same_dim(reference.dim(), x.dim(), "log_map_at")?;
    TangentSpace::new(reference.clone())?.log_map(x)
}

pub fn exp_map_at(reference: &SpdMatrix, s: &SymMatrix) -> Result<SpdMatrix> {
    check_same_dim(reference.dim(), s.dim(), "exp_map_at")?;
    TangentSpace::new(reference.clone())?.exp_map(s)
}

pub fn inner_product_at(reference: &SpdMatrix, s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    TangentSpace::new(reference.clone())?.inner_product(s1, s2)
}
