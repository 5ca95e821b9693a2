use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{LinearModel, TangentDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaReport {
    /// Ridge added to the within-class scatter when it was not numerically
    /// positive definite.
    pub jitter: Option<f64>,
}

/// Fisher discriminant `w = S_within⁻¹(μ⁺ − μ⁻)` with the boundary halfway
/// between the projected class means.
pub fn fit_lda(data: &TangentDataset) -> Result<LinearModel> {
    fit_lda_with_report(data).map(|(m, _)| m)
}

pub fn fit_lda_with_report(data: &TangentDataset) -> Result<(LinearModel, LdaReport)> {
    data.require_two_classes(1)?;
    let dim = data.feature_dim();
    let x = data.vectors();
    let labels = data.labels();

    let class_mean = |class: i8| {
        let mut sum = DVector::zeros(dim);
        let mut count = 0usize;
        for (i, &l) in labels.iter().enumerate() {
            if l == class {
                sum += x.row(i).transpose();
                count += 1;
            }
        }
        sum / count as f64
    };
    let mu_pos = class_mean(1);
    let mu_neg = class_mean(-1);

    let mut centered = x.clone();
    for (i, &l) in labels.iter().enumerate() {
        let mu = if l == 1 { &mu_pos } else { &mu_neg };
        for j in 0..dim {
            centered[(i, j)] -= mu[j];
        }
    }
    let scatter = centered.transpose() * &centered;
    let diff = &mu_pos - &mu_neg;

    let mut jitter = None;
    let chol = match well_conditioned_cholesky(scatter.clone()) {
        Some(c) => c,
        None => {
            let eps = 1e-10 * scatter.trace().max(f64::MIN_POSITIVE) / dim as f64;
            warn!("within-class scatter is singular; adding ridge {eps:e}");
            jitter = Some(eps);
            (scatter + DMatrix::identity(dim, dim) * eps)
                .cholesky()
                .ok_or_else(|| Error::DegenerateModel("within-class scatter is not invertible".into()))?
        }
    };
    let weights = chol.solve(&diff);
    let intercept = -0.5 * weights.dot(&(&mu_pos + &mu_neg));
    let model = LinearModel::new(weights, intercept, 0.0)
        .map_err(|_| Error::DegenerateModel("LDA produced non-finite weights".into()))?;
    Ok((model, LdaReport { jitter }))
}

/// Cholesky factor, rejected when a pivot is negligible next to the largest
/// one.
fn well_conditioned_cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let c = m.cholesky()?;
    let diag = c.l_dirty().diagonal();
    let max = diag.max();
    (diag.min() > 1e-7 * max).then_some(c)
}
