use nalgebra::DMatrix;

use super::eig::{check_positive, eig_unchecked};
use super::{check_same_dim, SpdMatrix, SymMatrix, DEFAULT_SPD_TOL};
use crate::error::{Error, Result};

/// Matrix logarithm of an SPD matrix.
pub fn logm(a: &SpdMatrix) -> Result<SymMatrix> {
    Ok(SymMatrix::from_trusted(logm_raw(a.as_matrix())?))
}

/// Logarithm of a symmetric matrix that must be positive definite; the check
/// happens on the same decomposition that computes the logarithm.
pub(crate) fn logm_raw(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eig_unchecked(m);
    check_positive(&e.eigenvalues, DEFAULT_SPD_TOL)?;
    Ok(e.map(f64::ln))
}

/// Matrix exponential of a symmetric matrix.
pub fn expm(s: &SymMatrix) -> Result<SpdMatrix> {
    Ok(SpdMatrix::from_trusted(expm_raw(s.as_matrix())?))
}

pub(crate) fn expm_raw(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eig_unchecked(m);
    if e.max() > 700.0 || e.min() < -700.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "exponential of eigenvalue range [{:e}, {:e}] is not representable",
            e.min(),
            e.max()
        )));
    }
    Ok(e.map(f64::exp))
}

/// Real matrix power `A^p`, `p ≠ 0`.
pub fn powm(a: &SpdMatrix, p: f64) -> Result<SpdMatrix> {
    if p == 0.0 || !p.is_finite() {
        return Err(Error::invalid(format!("matrix power must be finite and non-zero, got {p}")));
    }
    let e = eig_unchecked(a.as_matrix());
    check_positive(&e.eigenvalues, DEFAULT_SPD_TOL)?;
    Ok(SpdMatrix::from_trusted(e.map(|x| x.powf(p))))
}

/// `A^{1/2}` and `A^{-1/2}` from one decomposition.
pub(crate) fn sqrt_pair(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let e = eig_unchecked(a);
    check_positive(&e.eigenvalues, DEFAULT_SPD_TOL)?;
    Ok((e.map(f64::sqrt), e.map(|x| 1.0 / x.sqrt())))
}

/// `X ↦ W X W` for symmetric `W`, symmetrized.
pub(crate) fn sandwich(w: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    super::symmetrize(w * x * w)
}

/// Affine-invariant Riemannian distance `‖log λ(A^{-1/2} B A^{-1/2})‖₂`.
pub fn airm_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim(), "airm_distance")?;
    let (_, inv_sqrt) = sqrt_pair(a.as_matrix())?;
    let e = eig_unchecked(&sandwich(&inv_sqrt, b.as_matrix()));
    check_positive(&e.eigenvalues, DEFAULT_SPD_TOL)?;
    Ok(e.eigenvalues.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_invertible, random_spd, random_symmetric, rng};
    use std::f64::consts::E;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn logm_examples() {
        let l = logm(&SpdMatrix::identity(3)).unwrap();
        assert_eq!(l.as_matrix(), &DMatrix::zeros(3, 3));

        let l = logm(&SpdMatrix::new(diag(&[E, E * E])).unwrap()).unwrap();
        assert!((l.as_matrix() - diag(&[1.0, 2.0])).norm() < 1e-14);

        let mut r = rng(1);
        for _ in 0..10 {
            let a = random_spd(&mut r, 4);
            let back = expm(&logm(&a).unwrap()).unwrap();
            assert!((back.as_matrix() - a.as_matrix()).norm() < 1e-8 * a.as_matrix().norm());
        }
    }

    #[test]
    fn expm_powm_examples() {
        assert_eq!(
            expm(&SymMatrix::zeros(3)).unwrap().as_matrix(),
            &DMatrix::identity(3, 3)
        );
        let r = powm(&SpdMatrix::new(diag(&[4.0, 9.0])).unwrap(), 0.5).unwrap();
        assert!((r.as_matrix() - diag(&[2.0, 3.0])).norm() < 1e-14);

        let mut g = rng(2);
        for _ in 0..10 {
            let a = random_spd(&mut g, 5);
            let h = powm(&a, 0.5).unwrap();
            let hi = powm(&a, -0.5).unwrap();
            assert!((h.as_matrix() * h.as_matrix() - a.as_matrix()).norm() < 1e-8);
            assert!((h.as_matrix() * hi.as_matrix() - DMatrix::identity(5, 5)).norm() < 1e-8);
            let w = hi.as_matrix() * a.as_matrix() * hi.as_matrix();
            assert!((w - DMatrix::identity(5, 5)).norm() < 1e-8);
        }
    }

    #[test]
    fn powm_rejects_zero_exponent() {
        assert!(matches!(
            powm(&SpdMatrix::identity(2), 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn expm_output_is_spd() {
        let mut g = rng(9);
        let s = SymMatrix::new(random_symmetric(&mut g, 6) * 3.0).unwrap();
        let e = expm(&s).unwrap();
        assert!(SpdMatrix::new(e.into_inner()).is_ok());
    }

    #[test]
    fn distance_examples() {
        let mut g = rng(4);
        let a = random_spd(&mut g, 4);
        assert!(airm_distance(&a, &a).unwrap() < 1e-12);

        let i2 = SpdMatrix::identity(2);
        let ei = SpdMatrix::new(DMatrix::identity(2, 2) * E).unwrap();
        assert!((airm_distance(&i2, &ei).unwrap() - 2f64.sqrt()).abs() < 1e-14);

        for _ in 0..10 {
            let a = random_spd(&mut g, 5);
            let b = random_spd(&mut g, 5);
            let w = random_invertible(&mut g, 5);
            let d = airm_distance(&a, &b).unwrap();
            let dba = airm_distance(&b, &a).unwrap();
            let dw = airm_distance(&a.congruence(&w).unwrap(), &b.congruence(&w).unwrap()).unwrap();
            assert!((d - dba).abs() < 1e-10);
            assert!((d - dw).abs() < 1e-8);
            assert!(d > 0.0);
        }
    }

    #[test]
    fn distance_dim_mismatch() {
        let r = airm_distance(&SpdMatrix::identity(2), &SpdMatrix::identity(3));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
