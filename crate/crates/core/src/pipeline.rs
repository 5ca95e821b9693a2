//! Named end-to-end pipelines: feature extraction on trial covariances
//! followed by one or two linear classifiers.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::csp::{fit_csp, CspConfig, CspModel};
use crate::dataio::{covariance_unchecked, CovarianceConfig};
use crate::error::{Error, Result};
use crate::linmodel::{decision_value, GridConfig, LinearModel, TangentDataset};
use crate::manifold::{frechet_mean, FrechetConfig, SpdMatrix, TangentSpace};
use crate::tssf::{
    compute_features, extract_tssf, predict_one_step, predict_two_step, FeatureKind,
    TangentClassifier, TssfConfig, TssfModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PipelineName {
    #[serde(rename = "CSP")]
    Csp,
    #[serde(rename = "TSSF_Var_1_step")]
    TssfVar1Step,
    #[serde(rename = "TSSF_Var_2_step")]
    TssfVar2Step,
    #[serde(rename = "TSSF_Cov_1_step")]
    TssfCov1Step,
    #[serde(rename = "TSSF_Cov_2_step")]
    TssfCov2Step,
    #[serde(rename = "TSSF_LogCov_2_step")]
    TssfLogCov2Step,
    #[serde(rename = "TS_AIRM")]
    TsAirm,
}

impl PipelineName {
    pub const ALL: [PipelineName; 7] = [
        PipelineName::Csp,
        PipelineName::TssfVar1Step,
        PipelineName::TssfVar2Step,
        PipelineName::TssfCov1Step,
        PipelineName::TssfCov2Step,
        PipelineName::TssfLogCov2Step,
        PipelineName::TsAirm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineName::Csp => "CSP",
            PipelineName::TssfVar1Step => "TSSF_Var_1_step",
            PipelineName::TssfVar2Step => "TSSF_Var_2_step",
            PipelineName::TssfCov1Step => "TSSF_Cov_1_step",
            PipelineName::TssfCov2Step => "TSSF_Cov_2_step",
            PipelineName::TssfLogCov2Step => "TSSF_LogCov_2_step",
            PipelineName::TsAirm => "TS_AIRM",
        }
    }

    /// Feature kind of the TSSF pipelines.
    pub fn feature_kind(self) -> Option<FeatureKind> {
        match self {
            PipelineName::TssfVar1Step | PipelineName::TssfVar2Step => Some(FeatureKind::LogVar),
            PipelineName::TssfCov1Step | PipelineName::TssfCov2Step => {
                Some(FeatureKind::DiagLogCov)
            }
            PipelineName::TssfLogCov2Step => Some(FeatureKind::LogCov),
            PipelineName::Csp | PipelineName::TsAirm => None,
        }
    }

    pub fn is_one_step(self) -> bool {
        matches!(self, PipelineName::TssfVar1Step | PipelineName::TssfCov1Step)
    }

    /// Whether `K` spatial filters are part of the pipeline.
    pub fn uses_filters(self) -> bool {
        self != PipelineName::TsAirm
    }
}

impl fmt::Display for PipelineName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PipelineName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PipelineName::ALL.iter().map(|p| p.as_str()).collect();
                Error::invalid(format!(
                    "unknown pipeline {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A pipeline with its number of filters and classifier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub name: PipelineName,
    /// Number of spatial filters; ignored by `TS_AIRM`.
    pub k: usize,
    /// Classifier on tangent vectors (TSSF, `TS_AIRM`) or on CSP features.
    pub classifier: TangentClassifier,
    /// Second classifier of the two-step TSSF pipelines.
    pub second: TangentClassifier,
    #[serde(default)]
    pub frechet: FrechetConfig,
}

impl PipelineSpec {
    pub fn new(name: PipelineName, k: usize) -> Self {
        PipelineSpec {
            name,
            k,
            classifier: TangentClassifier::SvmGrid(GridConfig::default()),
            second: TangentClassifier::SvmGrid(GridConfig::default()),
            frechet: FrechetConfig::default(),
        }
    }

    /// Use the same classifier for both stages.
    pub fn with_classifier(mut self, classifier: TangentClassifier) -> Self {
        self.second = classifier.clone();
        self.classifier = classifier;
        self
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if !self.name.uses_filters() {
            return Ok(());
        }
        if self.k == 0 || self.k > channels {
            return Err(Error::invalid(format!(
                "{}: K must be in 1..={channels}, got {}",
                self.name, self.k
            )));
        }
        if self.name == PipelineName::Csp && self.k % 2 == 1 {
            return Err(Error::invalid(format!("CSP needs an even K, got {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Csp {
        csp: CspModel,
        classifier: LinearModel,
    },
    Tssf {
        kind: FeatureKind,
        tssf: TssfModel,
        /// Absent for one-step pipelines.
        second: Option<LinearModel>,
    },
    TsAirm {
        reference: SpdMatrix,
        classifier: LinearModel,
    },
}

/// A pipeline fitted on training covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub spec: PipelineSpec,
    pub model: FittedModel,
}

fn features_dataset(rows: Vec<DVector<f64>>, labels: &[i8]) -> Result<TangentDataset> {
    TangentDataset::from_rows(&rows, labels.to_vec())
}

/// Fit `spec` on training covariances and labels.
pub fn fit(spec: &PipelineSpec, covs: &[SpdMatrix], labels: &[i8]) -> Result<FittedPipeline> {
    let channels = covs
        .first()
        .ok_or_else(|| Error::invalid("no training trials"))?
        .dim();
    spec.validate(channels)?;
    if covs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} covariances but {} labels",
            covs.len(),
            labels.len()
        )));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::DegenerateModel(
            "training labels contain a single class".into(),
        ));
    }
    let model = match spec.name {
        PipelineName::Csp => {
            let csp = fit_csp(covs, labels, &CspConfig::new(spec.k))?;
            let rows = covs
                .iter()
                .map(|c| csp.features(&c.congruence(&csp.filters)?))
                .collect::<Result<Vec<_>>>()?;
            let classifier = spec.classifier.fit(&features_dataset(rows, labels)?)?;
            FittedModel::Csp { csp, classifier }
        }
        PipelineName::TsAirm => {
            let space = TangentSpace::new(frechet_mean(covs, &spec.frechet)?)?;
            let rows = covs
                .iter()
                .map(|c| space.tangent_vector(c).map(|v| v.into_values()))
                .collect::<Result<Vec<_>>>()?;
            let classifier = spec.classifier.fit(&features_dataset(rows, labels)?)?;
            FittedModel::TsAirm {
                reference: space.reference().clone(),
                classifier,
            }
        }
        name => {
            let kind = name.feature_kind().expect("TSSF pipeline");
            let cfg = TssfConfig {
                k: spec.k,
                classifier: spec.classifier.clone(),
                frechet: spec.frechet,
            };
            let tssf = extract_tssf(covs, labels, &cfg)?;
            let second = if name.is_one_step() {
                None
            } else {
                let rows = covs
                    .iter()
                    .map(|c| compute_features(&tssf, &c.congruence(&tssf.filters)?, kind))
                    .collect::<Result<Vec<_>>>()?;
                Some(spec.second.fit(&features_dataset(rows, labels)?)?)
            };
            FittedModel::Tssf { kind, tssf, second }
        }
    };
    Ok(FittedPipeline {
        spec: spec.clone(),
        model,
    })
}

impl FittedPipeline {
    pub fn name(&self) -> PipelineName {
        self.spec.name
    }

    pub fn channels(&self) -> usize {
        match &self.model {
            FittedModel::Csp { csp, .. } => csp.channels(),
            FittedModel::Tssf { tssf, .. } => tssf.channels(),
            FittedModel::TsAirm { reference, .. } => reference.dim(),
        }
    }

    /// `C × K` spatial filters, if the pipeline has any.
    pub fn filters(&self) -> Option<&DMatrix<f64>> {
        match &self.model {
            FittedModel::Csp { csp, .. } => Some(&csp.filters),
            FittedModel::Tssf { tssf, .. } => Some(&tssf.filters),
            FittedModel::TsAirm { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            FittedModel::Csp { csp, classifier } => {
                csp.validate()?;
                check_dim(classifier, csp.k)
            }
            FittedModel::Tssf { kind, tssf, second } => {
                tssf.validate()?;
                if second.is_none() != self.spec.name.is_one_step()
                    || Some(*kind) != self.spec.name.feature_kind()
                {
                    return Err(Error::format("model does not match its pipeline name"));
                }
                match second {
                    Some(m) => check_dim(m, kind.feature_len(tssf.k)),
                    None => Ok(()),
                }
            }
            FittedModel::TsAirm {
                reference,
                classifier,
            } => check_dim(classifier, crate::manifold::tangent_len(reference.dim())),
        }
    }

    /// Decision value of one trial covariance.
    pub fn decision(&self, cov: &SpdMatrix) -> Result<f64> {
        self.predictor()?.decision(cov)
    }

    /// Prepared form for repeated prediction.
    pub fn predictor(&self) -> Result<Predictor<'_>> {
        let space = match &self.model {
            FittedModel::TsAirm { reference, .. } => Some(TangentSpace::new(reference.clone())?),
            _ => None,
        };
        Ok(Predictor {
            pipeline: self,
            space,
        })
    }
}

fn check_dim(model: &LinearModel, expected: usize) -> Result<()> {
    if model.feature_dim != expected {
        return Err(Error::format(format!(
            "classifier has {} weights, features have {expected}",
            model.feature_dim
        )));
    }
    Ok(())
}

/// Fitted pipeline with the reference whitening precomputed.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    pipeline: &'a FittedPipeline,
    space: Option<TangentSpace>,
}

impl Predictor<'_> {
    /// Decision value of a trial covariance.
    pub fn decision(&self, cov: &SpdMatrix) -> Result<f64> {
        match &self.pipeline.model {
            FittedModel::Csp { csp, classifier } => {
                decision_value(classifier, &csp.features(&cov.congruence(&csp.filters)?)?)
            }
            FittedModel::Tssf { kind, tssf, second } => {
                let features = compute_features(tssf, &cov.congruence(&tssf.filters)?, *kind)?;
                score(tssf, second.as_ref(), &features, *kind)
            }
            FittedModel::TsAirm { classifier, .. } => {
                let space = self.space.as_ref().expect("prepared tangent space");
                decision_value(classifier, &space.tangent_vector(cov)?.into_values())
            }
        }
    }

    /// Decision value of a raw `C × N` trial. Filters are applied to the
    /// signal before any covariance is formed, so the cost per trial is
    /// `O(K C N)` for the filter pipelines.
    pub fn decision_trial(&self, trial: &DMatrix<f64>, cov_cfg: &CovarianceConfig) -> Result<f64> {
        if trial.nrows() != self.pipeline.channels() {
            return Err(Error::invalid(format!(
                "trial has {} channels, model expects {}",
                trial.nrows(),
                self.pipeline.channels()
            )));
        }
        match &self.pipeline.model {
            FittedModel::Csp { csp, classifier } => {
                let filtered = covariance_unchecked(&csp.filters.tr_mul(trial), cov_cfg);
                decision_value(classifier, &log_variances(&filtered)?)
            }
            FittedModel::Tssf { kind, tssf, second } => {
                let filtered = covariance_unchecked(&tssf.filters.tr_mul(trial), cov_cfg);
                let features = if *kind == FeatureKind::LogVar {
                    log_variances(&filtered)?
                } else {
                    compute_features(tssf, &SpdMatrix::new(filtered)?, *kind)?
                };
                score(tssf, second.as_ref(), &features, *kind)
            }
            FittedModel::TsAirm { .. } => {
                self.decision(&SpdMatrix::new(covariance_unchecked(trial, cov_cfg))?)
            }
        }
    }
}

fn score(
    tssf: &TssfModel,
    second: Option<&LinearModel>,
    features: &DVector<f64>,
    kind: FeatureKind,
) -> Result<f64> {
    match second {
        Some(m) => predict_two_step(m, features).map(|(s, _)| s),
        None => predict_one_step(tssf, features, kind).map(|(s, _)| s),
    }
}

fn log_variances(filtered: &DMatrix<f64>) -> Result<DVector<f64>> {
    let d = filtered.diagonal();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(
            "filtered signal has zero variance".into(),
        ));
    }
    Ok(d.map(f64::ln))
}
