//! Spatial filters derived from a linear function on the tangent space, the
//! features computed from filtered signals, and one-/two-step scoring.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{
    decision_value, fit_lda, fit_linear_svm, grid_search_cv, sign_label, GridConfig, LinearModel,
    TangentDataset,
};
use crate::manifold::{
    eig_unchecked, frechet_mean, ged, ged_symmetric, logm_raw, tangent_len, unvectorize_raw,
    FrechetConfig, GedResult, SpdMatrix, SymMatrix, TangentSpace,
};

/// Largest eigenvalue spread of the whitened weight matrix for which the
/// filters are computed from the exponentiated weight matrix. Beyond it the
/// exponential loses the small end of the spectrum and the pencil is solved
/// on the tangent matrix directly, which has the same eigenvectors.
const EXP_ROUTE_MAX_SPREAD: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    /// `log` of the filtered variances.
    LogVar,
    /// Diagonal of `logm` of the filtered covariance.
    DiagLogCov,
    /// Tangent vector of the filtered covariance at the filtered mean.
    LogCov,
}

impl FeatureKind {
    pub fn feature_len(self, k: usize) -> usize {
        match self {
            FeatureKind::LogVar | FeatureKind::DiagLogCov => k,
            FeatureKind::LogCov => tangent_len(k),
        }
    }
}

/// Classifier fitted on the tangent vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TangentClassifier {
    /// Linear SVM with the regularization chosen by inner cross-validation.
    SvmGrid(GridConfig),
    Svm { reg: f64 },
    Lda,
}

impl TangentClassifier {
    pub fn fit(&self, data: &TangentDataset) -> Result<LinearModel> {
        match self {
            TangentClassifier::SvmGrid(cfg) => grid_search_cv(data, cfg).map(|r| r.model),
            TangentClassifier::Svm { reg } => fit_linear_svm(data, *reg),
            TangentClassifier::Lda => fit_lda(data),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TssfConfig {
    pub k: usize,
    pub classifier: TangentClassifier,
    #[serde(default)]
    pub frechet: FrechetConfig,
}

impl TssfConfig {
    pub fn new(k: usize) -> Self {
        TssfConfig {
            k,
            classifier: TangentClassifier::SvmGrid(GridConfig::default()),
            frechet: FrechetConfig::default(),
        }
    }
}

/// How the generalized eigenproblem was posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GedRoute {
    /// `GED(Exp(S^w), C^m)`, eigenvalues then logged.
    Manifold,
    /// `GED(S^w, C^m)`, eigenvalues already logarithmic.
    Tangent,
}

/// Spatial filters and log-eigenvalue coefficients of a tangent-space linear
/// function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TssfModel {
    pub k: usize,
    /// `C × K`, leading columns of `full_filters`.
    #[serde(with = "crate::serial::rows")]
    pub filters: DMatrix<f64>,
    #[serde(with = "crate::serial::vector")]
    pub beta: DVector<f64>,
    pub intercept: f64,
    pub reference_mean: SpdMatrix,
    /// `C × C`, sorted; `full_filtersᵀ C^m full_filters = I`.
    #[serde(with = "crate::serial::rows")]
    pub full_filters: DMatrix<f64>,
    #[serde(with = "crate::serial::vector")]
    pub full_beta: DVector<f64>,
    /// `sort_index[p]` is the generalized eigenpair placed at position `p`.
    pub sort_index: Vec<usize>,
    /// Riemannian mean of the filtered training covariances (`K × K`).
    pub filtered_mean: SpdMatrix,
    pub ged_route: GedRoute,
    /// The tangent-space model the filters were derived from.
    pub tangent_model: LinearModel,
}

/// Fit a tangent-space classifier and turn it into `K` spatial filters.
pub fn extract_tssf(covs: &[SpdMatrix], labels: &[i8], cfg: &TssfConfig) -> Result<TssfModel> {
    if covs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} covariances but {} labels",
            covs.len(),
            labels.len()
        )));
    }
    let space = TangentSpace::new(frechet_mean(covs, &cfg.frechet)?)?;
    check_k(cfg.k, space.dim())?;
    let rows = covs
        .iter()
        .map(|c| space.tangent_vector(c).map(|v| v.into_values()))
        .collect::<Result<Vec<_>>>()?;
    let data = TangentDataset::from_rows(&rows, labels.to_vec())?;
    let model = cfg.classifier.fit(&data)?;
    TssfModel::from_tangent_model(&space, model, covs, cfg.k, &cfg.frechet)
}

fn check_k(k: usize, channels: usize) -> Result<()> {
    if k == 0 || k > channels {
        return Err(Error::invalid(format!(
            "number of filters must be in 1..={channels}, got {k}"
        )));
    }
    Ok(())
}

impl TssfModel {
    /// Filters for a given tangent-space model whose weights are expressed in
    /// whitened coordinates at `space.reference()`. `covs` are the training
    /// covariances, used only for the filtered mean.
    pub fn from_tangent_model(
        space: &TangentSpace,
        model: LinearModel,
        covs: &[SpdMatrix],
        k: usize,
        frechet: &FrechetConfig,
    ) -> Result<TssfModel> {
        let c = space.dim();
        check_k(k, c)?;
        if model.feature_dim != tangent_len(c) {
            return Err(Error::invalid(format!(
                "tangent model has {} weights, expected {} for {c} channels",
                model.feature_dim,
                tangent_len(c)
            )));
        }
        if model.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateModel(
                "tangent-space weight vector is zero; no filters can be derived".into(),
            ));
        }

        let whitened = unvectorize_raw(&model.weights, c);
        let spectrum = eig_unchecked(&whitened);
        let sw = SymMatrix::from_trusted(space.color(&whitened));
        let (pairs, log_d, ged_route) = if spectrum.max() - spectrum.min() <= EXP_ROUTE_MAX_SPREAD {
            let cw = space.exp_map(&sw)?;
            let r = ged(&cw, space.reference())?;
            let log_d = r.eigenvalues.map(f64::ln);
            (r, log_d, GedRoute::Manifold)
        } else {
            let r = ged_symmetric(&sw, space.reference())?;
            let log_d = r.eigenvalues.clone();
            (r, log_d, GedRoute::Tangent)
        };

        let sort_index = sort_components(&log_d);
        let full_filters = pairs.eigenvectors.select_columns(&sort_index);
        let full_beta = DVector::from_iterator(c, sort_index.iter().map(|&i| log_d[i]));
        let filters = full_filters.columns(0, k).into_owned();
        let beta = full_beta.rows(0, k).into_owned();

        let filtered = covs
            .iter()
            .map(|cov| cov.congruence(&filters))
            .collect::<Result<Vec<_>>>()?;
        let filtered_mean = frechet_mean(&filtered, frechet)?;

        Ok(TssfModel {
            k,
            filters,
            beta,
            intercept: model.intercept,
            reference_mean: space.reference().clone(),
            full_filters,
            full_beta,
            sort_index,
            filtered_mean,
            ged_route,
            tangent_model: model,
        })
    }

    pub fn channels(&self) -> usize {
        self.filters.nrows()
    }

    /// Shape and ordering checks for a deserialized model.
    pub fn validate(&self) -> Result<()> {
        let c = self.reference_mean.dim();
        let bad = |msg: &str| Err(Error::format(format!("TSSF model: {msg}")));
        if self.k == 0 || self.k > c {
            return bad("K out of range");
        }
        if self.filters.shape() != (c, self.k) || self.full_filters.shape() != (c, c) {
            return bad("filter matrix shape does not match the channel count");
        }
        if self.beta.len() != self.k || self.full_beta.len() != c {
            return bad("coefficient count does not match K");
        }
        if self.filtered_mean.dim() != self.k {
            return bad("filtered mean has the wrong size");
        }
        let mut seen = vec![false; c];
        for &i in &self.sort_index {
            if i >= c || std::mem::replace(&mut seen[i], true) {
                return bad("sort_index is not a permutation");
            }
        }
        if self.sort_index.len() != c {
            return bad("sort_index is not a permutation");
        }
        self.tangent_model.validate()?;
        if self.filters != self.full_filters.columns(0, self.k)
            || self.beta != self.full_beta.rows(0, self.k)
        {
            return bad("truncated filters are not a prefix of the full set");
        }
        if self.filters.iter().chain(self.beta.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite entries");
        }
        Ok(())
    }

    /// Tangent vector of `cov` at the reference mean, the input of
    /// [`Self::tangent_model`].
    pub fn tangent_features(&self, cov: &SpdMatrix) -> Result<DVector<f64>> {
        let space = TangentSpace::new(self.reference_mean.clone())?;
        Ok(space.tangent_vector(cov)?.into_values())
    }

    /// Decision value of the underlying tangent-space model.
    pub fn tangent_decision(&self, cov: &SpdMatrix) -> Result<f64> {
        decision_value(&self.tangent_model, &self.tangent_features(cov)?)
    }

    /// `Σ_i β_i [logm(F_fullᵀ C F_full)]_ii + b` over all `C` components.
    /// Equal to [`Self::tangent_decision`] up to rounding.
    pub fn full_decision(&self, cov: &SpdMatrix) -> Result<f64> {
        let filtered = cov.congruence(&self.full_filters)?;
        let l = logm_raw(filtered.as_matrix())?;
        Ok(self.full_beta.dot(&l.diagonal()) + self.intercept)
    }
}

/// Positions ordered by descending `|β|`; ties by descending `β`, then by
/// index.
pub(crate) fn sort_components(log_d: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..log_d.len()).collect();
    order.sort_by(|&a, &b| {
        log_d[b]
            .abs()
            .total_cmp(&log_d[a].abs())
            .then(log_d[b].total_cmp(&log_d[a]))
            .then(a.cmp(&b))
    });
    order
}

/// `F_Kᵀ X` for a `C × N` trial.
pub fn apply_filters(model: &TssfModel, trial: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if trial.nrows() != model.channels() {
        return Err(Error::invalid(format!(
            "trial has {} channels, filters expect {}",
            trial.nrows(),
            model.channels()
        )));
    }
    Ok(model.filters.tr_mul(trial))
}

/// Features of a `K × K` filtered covariance.
pub fn compute_features(
    model: &TssfModel,
    filtered_cov: &SpdMatrix,
    kind: FeatureKind,
) -> Result<DVector<f64>> {
    if filtered_cov.dim() != model.k {
        return Err(Error::invalid(format!(
            "filtered covariance is {0}x{0}, model has K = {1}",
            filtered_cov.dim(),
            model.k
        )));
    }
    match kind {
        FeatureKind::LogVar => Ok(filtered_cov.as_matrix().diagonal().map(f64::ln)),
        FeatureKind::DiagLogCov => Ok(logm_raw(filtered_cov.as_matrix())?.diagonal()),
        FeatureKind::LogCov => {
            let space = TangentSpace::new(model.filtered_mean.clone())?;
            Ok(space.tangent_vector(filtered_cov)?.into_values())
        }
    }
}

/// `β_Kᵀ e + b` and its sign, for diagonal features only.
pub fn predict_one_step(
    model: &TssfModel,
    features: &DVector<f64>,
    kind: FeatureKind,
) -> Result<(f64, i8)> {
    if kind == FeatureKind::LogCov {
        return Err(Error::UnsupportedFeatureKind(
            "one-step scoring needs LogVar or DiagLogCov features".into(),
        ));
    }
    if features.len() != model.k {
        return Err(Error::invalid(format!(
            "expected {} features, got {}",
            model.k,
            features.len()
        )));
    }
    let score = model.beta.dot(features) + model.intercept;
    Ok((score, sign_label(score)))
}

/// Score features with a second classifier fitted on training features.
pub fn predict_two_step(second: &LinearModel, features: &DVector<f64>) -> Result<(f64, i8)> {
    let score = decision_value(second, features)?;
    Ok((score, sign_label(score)))
}

/// `Tr(logm(D) · logm(Fᵀ C^t F))` for `(F, D)` solving `C^w F = C^m F D`.
pub fn exact_decision_value(
    weight_cov: &SpdMatrix,
    reference: &SpdMatrix,
    trial_cov: &SpdMatrix,
    ged_result: &GedResult,
) -> Result<f64> {
    let c = reference.dim();
    if weight_cov.dim() != c || trial_cov.dim() != c || ged_result.eigenvectors.shape() != (c, c) {
        return Err(Error::invalid("exact decision value: dimension mismatch"));
    }
    let f = &ged_result.eigenvectors;
    let sv = f.singular_values();
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::invalid("filter matrix is rank deficient"));
    }
    let filtered = trial_cov.congruence(f)?;
    let l = logm_raw(filtered.as_matrix())?;
    let log_d = ged_result.eigenvalues.map(f64::ln);
    Ok(log_d.dot(&l.diagonal()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{inner_product_at, max_principal_angle, vectorize_raw, SymMatrix};
    use crate::testutil::{random_spd, random_spd_cloud, random_symmetric, rng};
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<i8> {
        (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()
    }

    /// Covariances whose first eigen-direction carries the class.
    fn two_class_covs(seed: u64, c: usize, n: usize) -> (Vec<SpdMatrix>, Vec<i8>) {
        let mut g = rng(seed);
        let cloud = random_spd_cloud(&mut g, c, n, 0.3);
        let y = labels(n);
        let covs = cloud
            .into_iter()
            .zip(&y)
            .map(|(cov, &l)| {
                let mut scale = DMatrix::identity(c, c);
                scale[(0, 0)] = if l == 1 { 1.5 } else { 0.7 };
                cov.congruence(&scale).unwrap()
            })
            .collect();
        (covs, y)
    }

    fn svm_cfg(k: usize) -> TssfConfig {
        TssfConfig {
            k,
            classifier: TangentClassifier::Svm { reg: 1.0 },
            frechet: FrechetConfig::default(),
        }
    }

    #[test]
    fn invariants_of_extracted_model() {
        let (covs, y) = two_class_covs(1, 5, 30);
        let m = extract_tssf(&covs, &y, &svm_cfg(3)).unwrap();
        m.validate().unwrap();
        let f = &m.full_filters;
        let white = f.transpose() * m.reference_mean.as_matrix() * f;
        assert!((white - DMatrix::identity(5, 5)).amax() < 1e-8);
        for pair in m.full_beta.as_slice().windows(2) {
            assert!(pair[0].abs() >= pair[1].abs());
        }
        assert_eq!(m.filters, f.columns(0, 3).into_owned());
        assert_eq!(m.ged_route, GedRoute::Manifold);

        let smaller = extract_tssf(&covs, &y, &svm_cfg(2)).unwrap();
        assert_eq!(smaller.filters, m.filters.columns(0, 2).into_owned());
    }

    #[test]
    fn diagonal_problem_gives_axis_aligned_filters() {
        let mut g = rng(2);
        let y = labels(20);
        let covs: Vec<SpdMatrix> = y
            .iter()
            .map(|&l| {
                use rand::Rng;
                let base: Vec<f64> = (0..4).map(|_| g.gen_range(0.5..2.0)).collect();
                let mut d = base.clone();
                d[1] *= if l == 1 { 3.0 } else { 1.0 };
                SpdMatrix::from_diagonal(&d).unwrap()
            })
            .collect();
        let m = extract_tssf(&covs, &y, &svm_cfg(4)).unwrap();
        for col in m.full_filters.column_iter() {
            let nonzero = col.iter().filter(|v| v.abs() > 1e-12).count();
            assert_eq!(nonzero, 1, "{col}");
        }
        // Direct oracle: for diagonal C^w and C^m the generalized eigenvalues
        // are the ratios of the diagonals.
        let cm = m.reference_mean.as_matrix();
        let sw = m.tangent_model.weights.clone();
        let whitened = unvectorize_raw(&sw, 4);
        for p in 0..4 {
            let col = m.full_filters.column(p);
            let axis = col.iamax();
            assert!((col[axis].abs() - 1.0 / cm[(axis, axis)].sqrt()).abs() < 1e-10);
            assert!((m.full_beta[p] - whitened[(axis, axis)]).abs() < 1e-10);
        }
    }

    #[test]
    fn full_rank_one_step_reproduces_tangent_model() {
        let (covs, y) = two_class_covs(3, 6, 40);
        let m = extract_tssf(&covs, &y, &svm_cfg(6)).unwrap();
        for cov in &covs {
            let filtered = cov.congruence(&m.filters).unwrap();
            let e = compute_features(&m, &filtered, FeatureKind::DiagLogCov).unwrap();
            let (score, _) = predict_one_step(&m, &e, FeatureKind::DiagLogCov).unwrap();
            let exact = m.tangent_decision(cov).unwrap();
            assert!((score - exact).abs() < 1e-8, "{score} vs {exact}");
            assert!((m.full_decision(cov).unwrap() - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn large_weights_use_tangent_route() {
        let (covs, _) = two_class_covs(4, 4, 10);
        let space = TangentSpace::new(frechet_mean(&covs, &FrechetConfig::default()).unwrap()).unwrap();
        let mut g = rng(5);
        let w = vectorize_raw(&(random_symmetric(&mut g, 4) * 40.0));
        let model = LinearModel::new(w, 0.3, 1.0).unwrap();
        let m = TssfModel::from_tangent_model(&space, model, &covs, 4, &FrechetConfig::default())
            .unwrap();
        assert_eq!(m.ged_route, GedRoute::Tangent);
        for cov in &covs {
            let exact = m.tangent_decision(cov).unwrap();
            let approx = m.full_decision(cov).unwrap();
            assert!((exact - approx).abs() < 1e-8 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let (covs, y) = two_class_covs(6, 3, 12);
        let single = vec![1i8; 12];
        assert!(matches!(
            extract_tssf(&covs, &single, &svm_cfg(2)),
            Err(Error::InvalidInput(_))
        ));
        assert!(extract_tssf(&covs, &y, &svm_cfg(0)).is_err());
        assert!(extract_tssf(&covs, &y, &svm_cfg(4)).is_err());
        assert!(extract_tssf(&covs, &y[..5], &svm_cfg(2)).is_err());

        let space = TangentSpace::new(SpdMatrix::identity(3)).unwrap();
        let zero = LinearModel::new(DVector::zeros(6), 0.0, 1.0).unwrap();
        assert!(matches!(
            TssfModel::from_tangent_model(&space, zero, &covs, 2, &FrechetConfig::default()),
            Err(Error::DegenerateModel(_))
        ));
    }

    fn fixture() -> (TssfModel, Vec<SpdMatrix>) {
        let (covs, y) = two_class_covs(7, 4, 20);
        (extract_tssf(&covs, &y, &svm_cfg(2)).unwrap(), covs)
    }

    #[test]
    fn filtering_examples() {
        let (mut m, _) = fixture();
        let mut g = rng(8);
        let x = crate::testutil::gaussian_matrix(&mut g, 4, 50);
        assert_eq!(apply_filters(&m, &DMatrix::zeros(4, 7)).unwrap(), DMatrix::zeros(2, 7));
        assert!(apply_filters(&m, &DMatrix::zeros(3, 7)).is_err());

        let filtered = apply_filters(&m, &x).unwrap();
        let cov = &x * x.transpose() / 50.0;
        for k in 0..2 {
            let f = m.filters.column(k);
            let var = filtered.row(k).norm_squared() / 50.0;
            let quad = (f.transpose() * &cov * f)[(0, 0)];
            assert!((var - quad).abs() < 1e-10 * quad);
        }

        m.filters = DMatrix::from_fn(4, 2, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
        let picked = apply_filters(&m, &x).unwrap();
        assert_eq!(picked.row(0), x.row(1));
        assert_eq!(picked.row(1), x.row(2));
    }

    #[test]
    fn feature_examples() {
        let (m, covs) = fixture();
        let i2 = SpdMatrix::identity(2);
        assert_eq!(compute_features(&m, &i2, FeatureKind::LogVar).unwrap(), DVector::zeros(2));
        assert_eq!(compute_features(&m, &i2, FeatureKind::DiagLogCov).unwrap(), DVector::zeros(2));
        let d = SpdMatrix::from_diagonal(&[2.0, 0.3]).unwrap();
        let lv = compute_features(&m, &d, FeatureKind::LogVar).unwrap();
        let dl = compute_features(&m, &d, FeatureKind::DiagLogCov).unwrap();
        assert!((lv - dl).amax() < 1e-15);

        let mut g = rng(9);
        let r = random_spd(&mut g, 2);
        let e = r.eig();
        let oracle = &e.eigenvectors
            * DMatrix::from_diagonal(&e.eigenvalues.map(f64::ln))
            * e.eigenvectors.transpose();
        let dl = compute_features(&m, &r, FeatureKind::DiagLogCov).unwrap();
        assert!((dl - oracle.diagonal()).amax() < 1e-12);

        let lc = compute_features(&m, &m.filtered_mean, FeatureKind::LogCov).unwrap();
        assert_eq!(lc.len(), 3);
        assert!(lc.amax() < 1e-10);
        let filtered = covs[0].congruence(&m.filters).unwrap();
        assert_eq!(compute_features(&m, &filtered, FeatureKind::LogCov).unwrap().len(), 3);
        assert!(compute_features(&m, &SpdMatrix::identity(3), FeatureKind::LogVar).is_err());
    }

    #[test]
    fn one_and_two_step_examples() {
        let (mut m, _) = fixture();
        m.beta = DVector::from_vec(vec![4f64.ln(), 0.25f64.ln()]);
        m.intercept = 0.0;
        let (s, l) = predict_one_step(&m, &DVector::from_vec(vec![1.0, 0.0]), FeatureKind::LogVar).unwrap();
        assert!((s - 1.386).abs() < 1e-3);
        assert_eq!(l, 1);
        let (s, l) = predict_one_step(&m, &DVector::zeros(2), FeatureKind::DiagLogCov).unwrap();
        assert_eq!((s, l), (0.0, 1));
        assert!(matches!(
            predict_one_step(&m, &DVector::zeros(3), FeatureKind::LogCov),
            Err(Error::UnsupportedFeatureKind(_))
        ));
        assert!(predict_one_step(&m, &DVector::zeros(3), FeatureKind::LogVar).is_err());

        m.intercept = -0.2;
        let pass = LinearModel::new(m.beta.clone(), m.intercept, 1.0).unwrap();
        let e = DVector::from_vec(vec![0.3, -1.1]);
        assert_eq!(
            predict_two_step(&pass, &e).unwrap(),
            predict_one_step(&m, &e, FeatureKind::LogVar).unwrap()
        );
        assert!(predict_two_step(&pass, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn sorting_puts_informative_components_first() {
        let (covs, y) = two_class_covs(10, 6, 40);
        let m = extract_tssf(&covs, &y, &svm_cfg(6)).unwrap();
        let mut drop_first = 0.0;
        let mut drop_last = 0.0;
        for cov in &covs {
            let l = logm_raw(cov.congruence(&m.full_filters).unwrap().as_matrix()).unwrap();
            drop_first += (m.full_beta[0] * l[(0, 0)]).abs();
            drop_last += (m.full_beta[5] * l[(5, 5)]).abs();
        }
        assert!(drop_last < drop_first);
    }

    #[test]
    fn sort_ties() {
        let d = DVector::from_vec(vec![0.5, -1.0, 1.0, -0.5, 0.5]);
        assert_eq!(sort_components(&d), vec![2, 1, 0, 4, 3]);
    }

    #[test]
    fn exact_decision_examples() {
        let mut g = rng(11);
        let cm = random_spd(&mut g, 6);
        let cw = random_spd(&mut g, 6);
        let r = ged(&cw, &cm).unwrap();
        assert!(exact_decision_value(&cw, &cm, &cm, &r).unwrap().abs() < 1e-10);
        let same = ged(&cm, &cm).unwrap();
        let ct = random_spd(&mut g, 6);
        assert!(exact_decision_value(&cm, &cm, &ct, &same).unwrap().abs() < 1e-10);

        let mut singular = r.clone();
        singular.eigenvectors.column_mut(0).fill(0.0);
        assert!(matches!(
            exact_decision_value(&cw, &cm, &ct, &singular),
            Err(Error::InvalidInput(_))
        ));
    }

    /// Full trace form `Tr(Cm^{-1/2} S^w Cm^{-1/2} · Cm^{-1/2} S^t Cm^{-1/2})`.
    fn trace_form(cm: &SpdMatrix, cw: &SpdMatrix, ct: &SpdMatrix) -> f64 {
        let space = TangentSpace::new(cm.clone()).unwrap();
        let sw = space.log_map(cw).unwrap();
        let st = space.log_map(ct).unwrap();
        inner_product_at(cm, &sw, &st).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn exact_value_equals_tangent_inner_product(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let cm = random_spd(&mut g, 6);
            let cw = random_spd(&mut g, 6);
            let ct = random_spd(&mut g, 6);
            let r = ged(&cw, &cm).unwrap();
            let exact = exact_decision_value(&cw, &cm, &ct, &r).unwrap();
            let oracle = trace_form(&cm, &cw, &ct);
            prop_assert!((exact - oracle).abs() < 1e-8, "{} vs {}", exact, oracle);
        }

        #[test]
        fn filters_survive_tangent_projection(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let cm = random_spd(&mut g, 5);
            let sw = SymMatrix::new(random_symmetric(&mut g, 5) * 0.5).unwrap();
            let cw = TangentSpace::new(cm.clone()).unwrap().exp_map(&sw).unwrap();
            let a = ged(&cw, &cm).unwrap();
            let b = ged_symmetric(&sw, &cm).unwrap();
            prop_assert!(max_principal_angle(&a.eigenvectors.columns(0, 2).into_owned(), &b.eigenvectors.columns(0, 2).into_owned()) < 1e-7);
        }
    }

    #[test]
    fn toml_round_trip() {
        let (m, _) = fixture();
        let text = toml::to_string(&m).unwrap();
        let back: TssfModel = toml::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.k, m.k);
        assert!((&back.filters - &m.filters).amax() == 0.0);
        assert_eq!(back.beta, m.beta);
        assert_eq!(back.sort_index, m.sort_index);

        let mut broken = m.clone();
        broken.sort_index[0] = broken.sort_index[1];
        assert!(broken.validate().is_err());
    }
}
