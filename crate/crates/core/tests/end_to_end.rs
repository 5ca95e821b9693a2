use tssf_core::dataio::{
    covariances, read_trials, synth_generate, write_trials, CovarianceConfig, SynthConfig, TrialSet,
};
use tssf_core::evalstats::{compare_all, kfold_cv_many, roc_auc, CvConfig};
use tssf_core::patterns::{compute_patterns, mean_covariance};
use tssf_core::pipeline::{fit, FittedPipeline, PipelineName, PipelineSpec};

fn data(channels: usize, sessions: usize) -> TrialSet {
    synth_generate(&SynthConfig {
        channels,
        samples: 120,
        trials_per_class: 24,
        sessions,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn trial_file_round_trip_preserves_everything() {
    let set = data(5, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.eegt");
    write_trials(&set, &path).unwrap();
    let back = read_trials(&path).unwrap();
    assert_eq!(back.labels(), set.labels());
    assert_eq!(back.sessions(), set.sessions());
    assert_eq!(back.channel_names(), set.channel_names());
    for (a, b) in back.trials().iter().zip(set.trials()) {
        assert_eq!(a, b);
    }
}

#[test]
fn every_pipeline_fits_separable_data() {
    let set = data(6, 1);
    let covs = covariances(&set, &CovarianceConfig::default()).unwrap();
    for name in PipelineName::ALL {
        let spec = PipelineSpec::new(name, 4);
        let model = fit(&spec, &covs, set.labels()).unwrap();
        let scores: Vec<f64> = covs.iter().map(|c| model.decision(c).unwrap()).collect();
        let auc = roc_auc(&scores, set.labels()).unwrap();
        assert!(auc > 0.9, "{name}: training auc {auc}");

        let text = toml::to_string(&model).unwrap();
        let back: FittedPipeline = toml::from_str(&text).unwrap();
        let predictor = back.predictor().unwrap();
        for (trial, cov) in set.trials().iter().zip(&covs).take(5) {
            let a = predictor.decision_trial(trial, &CovarianceConfig::default()).unwrap();
            let b = model.decision(cov).unwrap();
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn patterns_invert_square_filters() {
    let set = data(4, 1);
    let covs = covariances(&set, &CovarianceConfig::default()).unwrap();
    let model = fit(&PipelineSpec::new(PipelineName::TssfCov1Step, 4), &covs, set.labels()).unwrap();
    let f = model.filters().unwrap();
    let p = compute_patterns(f, &mean_covariance(&covs).unwrap()).unwrap();
    let prod = p.patterns.transpose() * f;
    assert!((prod - nalgebra::DMatrix::identity(4, 4)).amax() < 1e-9);
}

#[test]
fn cross_validation_and_comparison() {
    let set = data(6, 2);
    let specs = [
        PipelineSpec::new(PipelineName::Csp, 2),
        PipelineSpec::new(PipelineName::TssfVar1Step, 2),
        PipelineSpec::new(PipelineName::TsAirm, 2),
    ];
    let reports = kfold_cv_many(&set, &specs, &CvConfig::default()).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert_eq!(r.folds.len(), 10);
        assert_eq!(r.scores.len(), set.len());
        assert!(r.mean_auc > 0.8, "{}: {}", r.pipeline, r.mean_auc);
    }
    let rows = compare_all(&reports).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.units == 10));
    let again = kfold_cv_many(&set, &specs, &CvConfig::default()).unwrap();
    for (a, b) in reports.iter().zip(&again) {
        assert_eq!(a.aucs(), b.aucs());
    }
}
