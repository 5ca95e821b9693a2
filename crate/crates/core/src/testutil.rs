//! Random matrix generators shared by unit, integration and acceptance tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::manifold::SpdMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    (&g + g.transpose()) * 0.5
}

/// `G Gᵀ / n + 0.1 I`: well-conditioned but anisotropic.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> SpdMatrix {
    let g = gaussian_matrix(rng, n, 2 * n);
    let mut m = &g * g.transpose() / (2 * n) as f64;
    for i in 0..n {
        m[(i, i)] += 0.1;
    }
    SpdMatrix::new(m).expect("random SPD")
}

/// SPD matrices scattered around a common random center.
pub fn random_spd_cloud<R: Rng>(rng: &mut R, n: usize, count: usize, spread: f64) -> Vec<SpdMatrix> {
    let center = random_spd(rng, n);
    let root = crate::manifold::powm(&center, 0.5).expect("sqrt");
    (0..count)
        .map(|_| {
            let s = random_symmetric(rng, n) * spread;
            let e = crate::manifold::expm(&crate::manifold::SymMatrix::new(s).unwrap()).unwrap();
            let m = root.as_matrix() * e.as_matrix() * root.as_matrix();
            SpdMatrix::new((&m + m.transpose()) * 0.5).expect("cloud point")
        })
        .collect()
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    g.qr().q()
}

/// Gaussian matrix shifted towards the identity so that it is safely invertible.
pub fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, n) / (n as f64).sqrt() + DMatrix::identity(n, n) * 1.5
}
