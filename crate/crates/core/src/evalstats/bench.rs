use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::CovarianceConfig;
use crate::error::{Error, Result};
use crate::pipeline::{FittedPipeline, PipelineName};

pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Timed passes over all trials.
    pub repetitions: usize,
    /// Untimed passes before measuring.
    pub warmup: usize,
    pub covariance: CovarianceConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repetitions: 20,
            warmup: 2,
            covariance: CovarianceConfig::default(),
        }
    }
}

/// Per-trial prediction time of one model, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub pipeline: PipelineName,
    pub k: usize,
    pub trials: usize,
    pub repetitions: usize,
    pub median_us: f64,
    pub p10_us: f64,
    pub p90_us: f64,
    pub min_us: f64,
    pub max_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    /// Decision values per model, identical across repetitions.
    pub outputs: Vec<Vec<f64>>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Time raw-trial prediction for every model, one trial at a time, on the
/// calling thread and in a fixed order. Every repetition must reproduce the
/// decision values of the first bit for bit.
pub fn bench_predict(
    models: &[FittedPipeline],
    trials: &[DMatrix<f64>],
    cfg: &BenchConfig,
) -> Result<BenchResult> {
    if cfg.repetitions < MIN_REPETITIONS {
        return Err(Error::invalid(format!(
            "benchmark needs at least {MIN_REPETITIONS} repetitions, got {}",
            cfg.repetitions
        )));
    }
    if trials.is_empty() {
        return Err(Error::invalid("no trials to benchmark"));
    }
    let mut rows = Vec::with_capacity(models.len());
    let mut outputs = Vec::with_capacity(models.len());
    for model in models {
        let predictor = model.predictor()?;
        let reference = trials
            .iter()
            .map(|t| predictor.decision_trial(t, &cfg.covariance))
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..cfg.warmup {
            for t in trials {
                std::hint::black_box(predictor.decision_trial(t, &cfg.covariance)?);
            }
        }
        let mut times = Vec::with_capacity(cfg.repetitions * trials.len());
        for _ in 0..cfg.repetitions {
            for (t, expected) in trials.iter().zip(&reference) {
                let start = Instant::now();
                let v = predictor.decision_trial(std::hint::black_box(t), &cfg.covariance)?;
                times.push(start.elapsed().as_secs_f64() * 1e6);
                if v.to_bits() != expected.to_bits() {
                    return Err(Error::DegenerateModel(format!(
                        "{}: prediction changed between repetitions ({v} vs {expected})",
                        model.name()
                    )));
                }
            }
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            pipeline: model.name(),
            k: model.spec.k,
            trials: trials.len(),
            repetitions: cfg.repetitions,
            median_us: quantile(&times, 0.5),
            p10_us: quantile(&times, 0.1),
            p90_us: quantile(&times, 0.9),
            min_us: times[0],
            max_us: times[times.len() - 1],
        });
        outputs.push(reference);
    }
    Ok(BenchResult { rows, outputs })
}
