//! Evaluation: ROC-AUC, paired statistics, cross-validation and timing.

mod auc;
mod bench;
mod cv;
pub mod report;
mod stats;

pub use auc::roc_auc;
pub use bench::{bench_predict, BenchConfig, BenchResult, BenchRow, MIN_REPETITIONS};
pub use cv::{
    compare, compare_all, kfold_cv, kfold_cv_covariances, kfold_cv_many, paired_units,
    ComparisonRow, CvConfig, EvalReport, FoldResult, TrialScore, THREADS_ENV,
};
pub use stats::{
    smd, wilcoxon_one_sided, PairedComparison, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N,
    SMALL_N,
};
