use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use super::stats::{smd, wilcoxon_one_sided, PairedComparison, WilcoxonResult};
use crate::dataio::{covariances, CovarianceConfig, TrialSet};
use crate::error::{Error, Result};
use crate::folds::{split, stratified_folds};
use crate::manifold::SpdMatrix;
use crate::pipeline::{fit, PipelineName, PipelineSpec};
use crate::tssf::FeatureKind;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TSSF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Worker threads; `None` reads [`THREADS_ENV`] and falls back to the
    /// available parallelism.
    pub threads: Option<usize>,
    pub covariance: CovarianceConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            seed: 0,
            threads: None,
            covariance: CovarianceConfig::default(),
        }
    }
}

impl CvConfig {
    fn thread_count(&self, tasks: usize) -> usize {
        let n = self.threads.unwrap_or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .unwrap_or_else(|| {
                    std::thread::available_parallelism().map_or(1, |n| n.get())
                })
        });
        n.clamp(1, tasks.max(1))
    }
}

/// One (session, fold) evaluation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub session: u32,
    pub fold: usize,
    pub train_trials: usize,
    pub test_trials: usize,
    pub auc: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

/// Out-of-fold decision value of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    /// Index into the evaluated trial set.
    pub trial: usize,
    pub session: u32,
    pub fold: usize,
    pub label: i8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: PipelineName,
    pub k: usize,
    pub feature_kind: Option<FeatureKind>,
    /// Ordered by session, then fold.
    pub folds: Vec<FoldResult>,
    pub mean_auc: f64,
    /// Sample standard deviation over units; 0 for a single unit.
    pub std_auc: f64,
    /// Ordered by trial index.
    pub scores: Vec<TrialScore>,
}

impl EvalReport {
    pub fn aucs(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.auc).collect()
    }
}

/// Cross-validate one pipeline within every session of `set`.
pub fn kfold_cv(set: &TrialSet, spec: &PipelineSpec, cfg: &CvConfig) -> Result<EvalReport> {
    let mut reports = kfold_cv_many(set, std::slice::from_ref(spec), cfg)?;
    Ok(reports.remove(0))
}

/// Cross-validate several pipelines on identical folds. Covariances are
/// estimated once per trial; everything fitted (means, filters, classifiers)
/// sees the training split only.
pub fn kfold_cv_many(
    set: &TrialSet,
    specs: &[PipelineSpec],
    cfg: &CvConfig,
) -> Result<Vec<EvalReport>> {
    if cfg.folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {}", cfg.folds)));
    }
    for spec in specs {
        spec.validate(set.channels())?;
    }
    let covs = covariances(set, &cfg.covariance)?;
    kfold_cv_covariances(&covs, set.labels(), set.sessions(), specs, cfg)
}

struct Unit {
    session: u32,
    fold: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Units of all sessions in ascending session order.
fn units(labels: &[i8], sessions: &[u32], cfg: &CvConfig) -> Result<Vec<Unit>> {
    let mut ids: Vec<u32> = sessions.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut out = Vec::new();
    for s in ids {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| sessions[i] == s).collect();
        let local: Vec<i8> = members.iter().map(|&i| labels[i]).collect();
        let seed = cfg.seed.wrapping_add(s as u64);
        let folds = stratified_folds(&local, cfg.folds, seed)
            .map_err(|e| Error::invalid(format!("session {s}: {e}")))?;
        for fold in 0..cfg.folds {
            let (train, test) = split(&folds, fold);
            out.push(Unit {
                session: s,
                fold,
                train: train.into_iter().map(|i| members[i]).collect(),
                test: test.into_iter().map(|i| members[i]).collect(),
            });
        }
    }
    Ok(out)
}

fn run_unit(
    covs: &[SpdMatrix],
    labels: &[i8],
    spec: &PipelineSpec,
    unit: &Unit,
) -> Result<(FoldResult, Vec<TrialScore>)> {
    let train_covs: Vec<SpdMatrix> = unit.train.iter().map(|&i| covs[i].clone()).collect();
    let train_labels: Vec<i8> = unit.train.iter().map(|&i| labels[i]).collect();
    let start = Instant::now();
    let fitted = fit(spec, &train_covs, &train_labels)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let predictor = fitted.predictor()?;
    let values = unit
        .test
        .iter()
        .map(|&i| predictor.decision(&covs[i]))
        .collect::<Result<Vec<_>>>()?;
    let predict_seconds = start.elapsed().as_secs_f64();

    let test_labels: Vec<i8> = unit.test.iter().map(|&i| labels[i]).collect();
    let auc = roc_auc(&values, &test_labels)?;
    let scores = unit
        .test
        .iter()
        .zip(values)
        .map(|(&i, score)| TrialScore {
            trial: i,
            session: unit.session,
            fold: unit.fold,
            label: labels[i],
            score,
        })
        .collect();
    Ok((
        FoldResult {
            session: unit.session,
            fold: unit.fold,
            train_trials: unit.train.len(),
            test_trials: unit.test.len(),
            auc,
            train_seconds,
            predict_seconds,
        },
        scores,
    ))
}

/// [`kfold_cv_many`] on precomputed covariances.
pub fn kfold_cv_covariances(
    covs: &[SpdMatrix],
    labels: &[i8],
    sessions: &[u32],
    specs: &[PipelineSpec],
    cfg: &CvConfig,
) -> Result<Vec<EvalReport>> {
    if covs.len() != labels.len() || covs.len() != sessions.len() {
        return Err(Error::invalid("covariances, labels and sessions differ in length"));
    }
    let units = units(labels, sessions, cfg)?;
    let tasks: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|p| (0..units.len()).map(move |u| (p, u)))
        .collect();
    let slots: Vec<Mutex<Option<Result<(FoldResult, Vec<TrialScore>)>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let t = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(p, u)) = tasks.get(t) else { break };
        let r = run_unit(covs, labels, &specs[p], &units[u]);
        *slots[t].lock().expect("slot lock") = Some(r);
    };
    let threads = cfg.thread_count(tasks.len());
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }

    let mut results = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("task ran"));
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut folds = Vec::with_capacity(units.len());
        let mut scores = Vec::new();
        for _ in 0..units.len() {
            let (f, s) = results.next().expect("one result per task")?;
            folds.push(f);
            scores.extend(s);
        }
        scores.sort_by_key(|s| s.trial);
        let aucs: Vec<f64> = folds.iter().map(|f| f.auc).collect();
        let n = aucs.len() as f64;
        let mean_auc = aucs.iter().sum::<f64>() / n;
        let std_auc = if aucs.len() > 1 {
            (aucs.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        reports.push(EvalReport {
            pipeline: spec.name,
            k: spec.k,
            feature_kind: spec.name.feature_kind(),
            folds,
            mean_auc,
            std_auc,
            scores,
        });
    }
    Ok(reports)
}

/// Paired comparison of two pipelines over their common (session, fold)
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub pipeline_a: PipelineName,
    pub pipeline_b: PipelineName,
    pub units: usize,
    pub mean_difference: f64,
    /// `None` when the differences have zero variance.
    pub smd: Option<f64>,
    /// `None` when every difference is zero.
    pub wilcoxon: Option<WilcoxonResult>,
}

pub fn paired_units(a: &EvalReport, b: &EvalReport) -> Result<PairedComparison> {
    let key = |f: &FoldResult| (f.session, f.fold);
    if a.folds.len() != b.folds.len() || a.folds.iter().zip(&b.folds).any(|(x, y)| key(x) != key(y)) {
        return Err(Error::invalid("reports were not evaluated on the same folds"));
    }
    PairedComparison::new(a.aucs(), b.aucs())
}

/// SMD and one-sided Wilcoxon p-value of `a` over `b`.
pub fn compare(a: &EvalReport, b: &EvalReport) -> Result<ComparisonRow> {
    let pairs = paired_units(a, b)?;
    let d = pairs.differences();
    let mean_difference = d.iter().sum::<f64>() / d.len().max(1) as f64;
    let smd = match smd(&pairs) {
        Ok(v) => Some(v),
        Err(Error::DegenerateStatistic(_)) => None,
        Err(e) => return Err(e),
    };
    let wilcoxon = match wilcoxon_one_sided(&pairs) {
        Ok(v) => Some(v),
        Err(Error::DegenerateStatistic(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ComparisonRow {
        pipeline_a: a.pipeline,
        pipeline_b: b.pipeline,
        units: pairs.len(),
        mean_difference,
        smd,
        wilcoxon,
    })
}

/// Comparisons of every ordered pair `(i, j)` with `i < j`.
pub fn compare_all(reports: &[EvalReport]) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            rows.push(compare(&reports[i], &reports[j])?);
        }
    }
    Ok(rows)
}
