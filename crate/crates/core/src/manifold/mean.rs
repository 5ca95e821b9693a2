use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::functions::{expm_raw, logm_raw};
use super::{check_same_dim, SpdMatrix, TangentSpace};
use crate::error::{Error, Result};

/// Consecutive iterations without a new lowest residual before the
/// iteration is considered stagnant.
const STALL_LIMIT: usize = 3;

/// Stopping rule for the Karcher fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetConfig {
    pub max_iterations: usize,
    /// Threshold on the Frobenius norm of the mean tangent matrix, measured
    /// in whitened coordinates at the current estimate.
    pub tolerance: f64,
    /// When the residual stops decreasing it has reached the rounding floor
    /// of the data; the best iterate is accepted if its residual is below
    /// this bound.
    #[serde(default = "default_stagnation")]
    pub stagnation_tolerance: f64,
}

fn default_stagnation() -> f64 {
    1e-6
}

impl Default for FrechetConfig {
    fn default() -> Self {
        FrechetConfig {
            max_iterations: 50,
            tolerance: 1e-10,
            stagnation_tolerance: default_stagnation(),
        }
    }
}

impl FrechetConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 || !(self.tolerance > 0.0) || !(self.stagnation_tolerance >= 0.0) {
            return Err(Error::invalid(
                "Fréchet mean needs max_iterations >= 1 and positive tolerances",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Riemannian (Karcher) mean under the affine-invariant metric.
pub fn frechet_mean(points: &[SpdMatrix], cfg: &FrechetConfig) -> Result<SpdMatrix> {
    frechet_mean_with_report(points, cfg).map(|(m, _)| m)
}

/// Fixed-point iteration `M ← Exp_M(mean_t Log_M(C_t))` with unit step,
/// started from the arithmetic mean.
///
/// The returned residual is the norm of the mean tangent at the returned
/// point, so it is an exact certificate of the fixed-point condition.
pub fn frechet_mean_with_report(
    points: &[SpdMatrix],
    cfg: &FrechetConfig,
) -> Result<(SpdMatrix, FrechetReport)> {
    cfg.validate()?;
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("Fréchet mean of an empty set"))?;
    let n = first.dim();
    for p in points {
        check_same_dim(p.dim(), n, "frechet_mean")?;
    }

    let mut sum = DMatrix::zeros(n, n);
    for p in points {
        sum += p.as_matrix();
    }
    let mut mean = SpdMatrix::new(sum / points.len() as f64)?;

    let mut residual = f64::INFINITY;
    let mut best: Option<(SpdMatrix, FrechetReport)> = None;
    let mut stalls = 0;
    for iteration in 0..cfg.max_iterations {
        let space = TangentSpace::new(mean.clone())?;
        let mut step = DMatrix::zeros(n, n);
        for p in points {
            step += logm_raw(&space.whiten(p.as_matrix()))?;
        }
        step /= points.len() as f64;
        residual = step.norm();
        let report = FrechetReport {
            iterations: iteration,
            residual,
        };
        if residual < cfg.tolerance {
            return Ok((mean, report));
        }
        match &best {
            Some((_, r)) if residual >= r.residual => stalls += 1,
            _ => {
                stalls = 0;
                best = Some((mean.clone(), report));
            }
        }
        if stalls >= STALL_LIMIT {
            let (m, r) = best.take().expect("a best iterate");
            if r.residual < cfg.stagnation_tolerance {
                log::warn!(
                    "Fréchet mean stagnated at residual {:e} after {} iterations",
                    r.residual,
                    r.iterations
                );
                return Ok((m, r));
            }
            return Err(Error::ConvergenceFailure {
                iterations: iteration + 1,
                residual: r.residual,
            });
        }
        mean = SpdMatrix::from_trusted(space.color(&expm_raw(&step)?));
    }
    Err(Error::ConvergenceFailure {
        iterations: cfg.max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{airm_distance, powm};
    use crate::testutil::{random_invertible, random_spd, random_spd_cloud, random_symmetric, rng};
    use rand::Rng;

    #[test]
    fn singleton_and_duplicates() {
        let mut g = rng(1);
        let a = random_spd(&mut g, 4);
        let cfg = FrechetConfig::default();
        let m = frechet_mean(std::slice::from_ref(&a), &cfg).unwrap();
        assert!((m.as_matrix() - a.as_matrix()).norm() < 1e-12);
        let m = frechet_mean(&[a.clone(), a.clone()], &cfg).unwrap();
        assert!((m.as_matrix() - a.as_matrix()).norm() < 1e-12);
    }

    /// Geodesic midpoint `A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
    fn midpoint(a: &SpdMatrix, b: &SpdMatrix) -> DMatrix<f64> {
        let h = powm(a, 0.5).unwrap();
        let hi = powm(a, -0.5).unwrap();
        let inner = SpdMatrix::new(hi.as_matrix() * b.as_matrix() * hi.as_matrix()).unwrap();
        let r = powm(&inner, 0.5).unwrap();
        h.as_matrix() * r.as_matrix() * h.as_matrix()
    }

    #[test]
    fn two_point_mean_is_geodesic_midpoint() {
        let a = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        let oracle = midpoint(&a, &b);
        assert!((oracle.clone() - DMatrix::identity(2, 2) * 2.0).norm() < 1e-14);
        let m = frechet_mean(&[a, b], &FrechetConfig::default()).unwrap();
        assert!((m.as_matrix() - oracle).norm() < 1e-10);

        let mut g = rng(2);
        for _ in 0..5 {
            let a = random_spd(&mut g, 4);
            let b = random_spd(&mut g, 4);
            let m = frechet_mean(&[a.clone(), b.clone()], &FrechetConfig::default()).unwrap();
            let oracle = midpoint(&a, &b);
            assert!((m.as_matrix() - &oracle).norm() < 1e-8 * oracle.norm());
            let da = airm_distance(&m, &a).unwrap();
            let db = airm_distance(&m, &b).unwrap();
            assert!((da - db).abs() < 1e-8);
        }
    }

    #[test]
    fn congruence_equivariance() {
        let mut g = rng(3);
        let cloud = random_spd_cloud(&mut g, 5, 12, 0.4);
        let cfg = FrechetConfig::default();
        let (m, report) = frechet_mean_with_report(&cloud, &cfg).unwrap();
        assert!(report.residual < 1e-10);
        let w = random_invertible(&mut g, 5);
        let moved: Vec<_> = cloud.iter().map(|c| c.congruence(&w).unwrap()).collect();
        let mw = frechet_mean(&moved, &cfg).unwrap();
        let expected = w.transpose() * m.as_matrix() * &w;
        assert!((mw.as_matrix() - &expected).norm() < 1e-6 * expected.norm());
    }

    #[test]
    fn scaling_commutes() {
        let mut g = rng(4);
        let cloud = random_spd_cloud(&mut g, 4, 10, 0.5);
        let cfg = FrechetConfig::default();
        let m = frechet_mean(&cloud, &cfg).unwrap();
        let scaled: Vec<_> = cloud.iter().map(|c| c.scaled(0.01).unwrap()).collect();
        let ms = frechet_mean(&scaled, &cfg).unwrap();
        assert!((ms.as_matrix() * 100.0 - m.as_matrix()).norm() < 1e-9 * m.as_matrix().norm());
    }

    #[test]
    fn reports_non_convergence() {
        let mut g = rng(5);
        let cloud = random_spd_cloud(&mut g, 4, 10, 1.0);
        let cfg = FrechetConfig {
            max_iterations: 1,
            tolerance: 1e-14,
            ..FrechetConfig::default()
        };
        match frechet_mean(&cloud, &cfg) {
            Err(Error::ConvergenceFailure { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn nearly_commuting_points_converge_at_once() {
        let mut g = rng(7);
        let cloud: Vec<SpdMatrix> = (0..40)
            .map(|_| {
                let d: Vec<f64> = (0..6).map(|_| g.gen_range(0.6..1.6)).collect();
                let noise = random_symmetric(&mut g, 6) * 1e-12;
                SpdMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)) + noise).unwrap()
            })
            .collect();
        let (_, r) = frechet_mean_with_report(&cloud, &FrechetConfig::default()).unwrap();
        assert!(r.iterations <= 2 && r.residual < 1e-10, "{r:?}");
    }

    #[test]
    fn stagnation_returns_best_iterate() {
        // Residuals this far below the data's rounding floor cannot be met.
        let mut g = rng(6);
        let cloud = random_spd_cloud(&mut g, 4, 10, 0.5);
        let strict = FrechetConfig {
            max_iterations: 200,
            tolerance: 1e-300,
            ..FrechetConfig::default()
        };
        let (m, r) = frechet_mean_with_report(&cloud, &strict).unwrap();
        assert!(r.residual < 1e-12);
        let reference = frechet_mean(&cloud, &FrechetConfig::default()).unwrap();
        assert!((m.as_matrix() - reference.as_matrix()).norm() < 1e-9);
        let no_slack = FrechetConfig {
            stagnation_tolerance: 0.0,
            ..strict
        };
        assert!(matches!(
            frechet_mean(&cloud, &no_slack),
            Err(Error::ConvergenceFailure { .. })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(frechet_mean(&[], &FrechetConfig::default()).is_err());
        let bad = FrechetConfig {
            max_iterations: 0,
            ..FrechetConfig::default()
        };
        assert!(frechet_mean(&[SpdMatrix::identity(2)], &bad).is_err());
        let mixed = [SpdMatrix::identity(2), SpdMatrix::identity(3)];
        assert!(frechet_mean(&mixed, &FrechetConfig::default()).is_err());
    }
}
