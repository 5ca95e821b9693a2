//! CSV output. Column schemas:
//!
//! * folds: `pipeline,k,session,fold,train_trials,test_trials,auc`
//! * scores: `pipeline,trial,session,fold,label,score`
//! * comparisons: `pipeline_a,pipeline_b,units,mean_difference,smd,p_value,statistic,nonzero,method`
//!   (`smd` and the test columns are empty when the statistic is degenerate)
//! * timing: `pipeline,session,fold,train_seconds,predict_seconds`
//! * bench: `pipeline,k,trials,repetitions,median_us,p10_us,p90_us,min_us,max_us`
//!
//! Everything except the two timing tables is a deterministic function of
//! the data, the pipelines and the seed.

use std::io::Write;

use serde::Serialize;

use super::bench::BenchRow;
use super::cv::{ComparisonRow, EvalReport};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format(format!("{other:?}")),
    }
}

fn write_rows<W: Write, R: Serialize>(out: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FoldRow<'a> {
    pipeline: &'a str,
    k: usize,
    session: u32,
    fold: usize,
    train_trials: usize,
    test_trials: usize,
    auc: f64,
}

pub fn write_folds_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    write_rows(
        out,
        reports.iter().flat_map(|r| {
            r.folds.iter().map(move |f| FoldRow {
                pipeline: r.pipeline.as_str(),
                k: r.k,
                session: f.session,
                fold: f.fold,
                train_trials: f.train_trials,
                test_trials: f.test_trials,
                auc: f.auc,
            })
        }),
    )
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    pipeline: &'a str,
    trial: usize,
    session: u32,
    fold: usize,
    label: i8,
    score: f64,
}

pub fn write_scores_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    write_rows(
        out,
        reports.iter().flat_map(|r| {
            r.scores.iter().map(move |s| ScoreRow {
                pipeline: r.pipeline.as_str(),
                trial: s.trial,
                session: s.session,
                fold: s.fold,
                label: s.label,
                score: s.score,
            })
        }),
    )
}

#[derive(Serialize)]
struct ComparisonCsvRow<'a> {
    pipeline_a: &'a str,
    pipeline_b: &'a str,
    units: usize,
    mean_difference: f64,
    smd: Option<f64>,
    p_value: Option<f64>,
    statistic: Option<f64>,
    nonzero: Option<usize>,
    method: Option<String>,
}

pub fn write_comparisons_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    write_rows(
        out,
        rows.iter().map(|c| ComparisonCsvRow {
            pipeline_a: c.pipeline_a.as_str(),
            pipeline_b: c.pipeline_b.as_str(),
            units: c.units,
            mean_difference: c.mean_difference,
            smd: c.smd,
            p_value: c.wilcoxon.map(|w| w.p_value),
            statistic: c.wilcoxon.map(|w| w.statistic),
            nonzero: c.wilcoxon.map(|w| w.n),
            method: c.wilcoxon.map(|w| format!("{:?}", w.method)),
        }),
    )
}

#[derive(Serialize)]
struct TimingRow<'a> {
    pipeline: &'a str,
    session: u32,
    fold: usize,
    train_seconds: f64,
    predict_seconds: f64,
}

pub fn write_timing_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    write_rows(
        out,
        reports.iter().flat_map(|r| {
            r.folds.iter().map(move |f| TimingRow {
                pipeline: r.pipeline.as_str(),
                session: f.session,
                fold: f.fold,
                train_seconds: f.train_seconds,
                predict_seconds: f.predict_seconds,
            })
        }),
    )
}

pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    write_rows(out, rows)
}
