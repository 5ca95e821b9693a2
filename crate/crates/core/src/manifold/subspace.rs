use nalgebra::{DMatrix, DVector};

/// Largest principal angle (radians) between the column spans of `a` and `b`.
///
/// Computed from the sine, `‖(I − Q_a Q_aᵀ) Q_b‖₂`, which stays accurate for
/// nearly identical subspaces where the cosine form loses half the digits.
/// Both inputs must have full column rank and the same column count.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows(), "ambient dimensions differ");
    assert_eq!(a.ncols(), b.ncols(), "subspace dimensions differ");
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let residual = &qb - &qa * (qa.transpose() * &qb);
    let s = residual.singular_values().max().min(1.0);
    s.asin()
}

/// Angle between two directions, ignoring sign and scale, in `[0, π/2]`.
pub fn vector_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    let ua = a / na;
    let ub = b / nb;
    let c = ua.dot(&ub);
    let s = (&ub - &ua * c).norm().min(1.0);
    s.asin()
}

/// Largest principal angle between matching eigenspaces of two eigenvector
/// sets whose columns are in corresponding order.
///
/// Consecutive columns whose `values` differ by at most `cluster_tol` (relative
/// to the largest magnitude) form one cluster and are compared as a subspace,
/// since the individual vectors inside a cluster are not determined.
pub fn eigenspace_deviation(
    vectors_a: &DMatrix<f64>,
    vectors_b: &DMatrix<f64>,
    values: &DVector<f64>,
    cluster_tol: f64,
) -> f64 {
    assert_eq!(vectors_a.shape(), vectors_b.shape(), "eigenvector sets differ in shape");
    let n = values.len();
    let scale = values.amax().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() <= cluster_tol * scale {
            end += 1;
        }
        let a = vectors_a.columns(start, end - start).into_owned();
        let b = vectors_b.columns(start, end - start).into_owned();
        worst = worst.max(max_principal_angle(&a, &b));
        start = end;
    }
    worst
}
