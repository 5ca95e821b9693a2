//! The `tssf` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage, configuration and I/O problems,
//! 3 for numerical or degenerate failures.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tssf_core::dataio::{
    covariances, fir_bandpass, load_manifest, read_trials, synth_generate, write_trials,
    CovarianceConfig, FirConfig, SynthConfig, TrialSet,
};
use tssf_core::evalstats::report::{
    write_bench_csv, write_comparisons_csv, write_folds_csv, write_scores_csv, write_timing_csv,
};
use tssf_core::evalstats::{bench_predict, compare_all, kfold_cv_many, BenchConfig, CvConfig};
use tssf_core::linmodel::GridConfig;
use tssf_core::patterns::{compute_patterns, mean_covariance, write_patterns_csv};
use tssf_core::pipeline::{fit, FittedModel, FittedPipeline, PipelineName, PipelineSpec};
use tssf_core::tssf::TangentClassifier;
use tssf_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("I/O error: {e}"))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "tssf", version, about = "Tangent space spatial filters for EEG covariance classification")]
pub struct Cli {
    /// Seed for data synthesis, fold assignment and grid search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-class trial file.
    Synth(SynthArgs),
    /// Fit a pipeline on a trial file and save the model.
    Fit(FitArgs),
    /// Cross-validate pipelines within each session and compare them.
    Eval(EvalArgs),
    /// Export the spatial patterns of a fitted model.
    Patterns(PatternsArgs),
    /// Time per-trial prediction of fitted pipelines.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with generator settings; omitted keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Trial file.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub data: Option<PathBuf>,
    /// Session manifest listing trial files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Zero-phase band-pass before covariance estimation.
    #[arg(long, value_name = "LOW:HIGH:FS")]
    pub band: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    /// `svm-grid`, `svm=REG` or `lda`.
    #[arg(long, default_value = "svm-grid")]
    pub classifier: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub pipeline: String,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Pipelines to evaluate, repeated or comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub pipeline: Vec<String>,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Output directory for the CSV tables and report.toml.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PatternsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        "CSP".to_string(),
        "TSSF_Var_1_step".to_string(),
        "TS_AIRM".to_string(),
    ])]
    pub pipeline: Vec<String>,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Timing CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the decision values for every model and trial.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

pub const MODEL_VERSION_TSSF: &str = "tssf/1";
pub const MODEL_VERSION_CSP: &str = "csp/1";
pub const MODEL_VERSION_TS: &str = "ts/1";

/// On-disk model: the fitted pipeline plus the preprocessing it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: String,
    pub band: Option<FirConfig>,
    pub covariance: CovarianceConfig,
    pub pipeline: FittedPipeline,
}

impl ModelFile {
    pub fn version_for(name: PipelineName) -> &'static str {
        match name {
            PipelineName::Csp => MODEL_VERSION_CSP,
            PipelineName::TsAirm => MODEL_VERSION_TS,
            _ => MODEL_VERSION_TSSF,
        }
    }

    pub fn load(path: &Path) -> CliResult<ModelFile> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read model {}: {e}", path.display())))?;
        let m: ModelFile = toml::from_str(&text)
            .map_err(|e| usage(format!("model {}: {e}", path.display())))?;
        if m.version != Self::version_for(m.pipeline.name()) {
            return Err(usage(format!(
                "model {}: version {:?} does not match pipeline {}",
                path.display(),
                m.version,
                m.pipeline.name()
            )));
        }
        m.pipeline.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self).map_err(|e| usage(format!("serialize model: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }
}

pub fn parse_band(s: &str) -> CliResult<FirConfig> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--band expects LOW:HIGH:FS, got {s:?}")))?;
    if nums.len() != 3 {
        return Err(usage(format!("--band expects LOW:HIGH:FS, got {s:?}")));
    }
    Ok(FirConfig {
        low_hz: nums[0],
        high_hz: nums[1],
        ..FirConfig::new(nums[2])
    })
}

pub fn parse_classifier(s: &str, seed: u64) -> CliResult<TangentClassifier> {
    match s {
        "svm-grid" => Ok(TangentClassifier::SvmGrid(GridConfig {
            seed,
            ..GridConfig::default()
        })),
        "lda" => Ok(TangentClassifier::Lda),
        _ => match s.strip_prefix("svm=").map(str::parse::<f64>) {
            Some(Ok(reg)) if reg > 0.0 && reg.is_finite() => Ok(TangentClassifier::Svm { reg }),
            _ => Err(usage(format!(
                "--classifier expects svm-grid, svm=REG (REG > 0) or lda, got {s:?}"
            ))),
        },
    }
}

fn parse_specs(names: &[String], k: usize, classifier: &TangentClassifier) -> CliResult<Vec<PipelineSpec>> {
    let mut specs: Vec<PipelineSpec> = Vec::new();
    for n in names {
        let name: PipelineName = n.trim().parse()?;
        if specs.iter().any(|s| s.name == name) {
            return Err(usage(format!("pipeline {name} listed twice")));
        }
        specs.push(PipelineSpec::new(name, k).with_classifier(classifier.clone()));
    }
    Ok(specs)
}

struct LoadedData {
    set: TrialSet,
    band: Option<FirConfig>,
}

fn load_data(args: &DataArgs) -> CliResult<LoadedData> {
    let set = match (&args.data, &args.manifest) {
        (Some(p), None) => read_trials(p).map_err(|e| with_path(e, p))?,
        (None, Some(p)) => load_manifest(p).map_err(|e| with_path(e, p))?,
        _ => return Err(usage("exactly one of --data and --manifest is required")),
    };
    let band = args.band.as_deref().map(parse_band).transpose()?;
    let set = match &band {
        Some(cfg) => fir_bandpass(&set, cfg)?,
        None => set,
    };
    Ok(LoadedData { set, band })
}

fn with_path(e: Error, p: &Path) -> Failure {
    match e {
        Error::Io(io) => usage(format!("{}: {io}", p.display())),
        other => Failure::from(other),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot create {}: {e}", path.display())))
}

/// Parse arguments and run; returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, seed, out),
        Command::Fit(a) => cmd_fit(a, seed.unwrap_or(0), out),
        Command::Eval(a) => cmd_eval(a, seed.unwrap_or(0), out),
        Command::Patterns(a) => cmd_patterns(a, out),
        Command::Bench(a) => cmd_bench(a, seed.unwrap_or(0), out),
    }
}

pub fn cmd_synth(args: &SynthArgs, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<SynthConfig>(&text)
                .map_err(|e| usage(format!("config {}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let set = synth_generate(&cfg).map_err(|e| usage(e.to_string()))?;
    write_trials(&set, &args.out).map_err(|e| with_path(e, &args.out))?;
    let positives = set.labels().iter().filter(|&&l| l == 1).count();
    writeln!(
        out,
        "wrote {}: C={} N={} T={} (+1: {}, -1: {}), sessions={}",
        args.out.display(),
        set.channels(),
        set.samples(),
        set.len(),
        positives,
        set.len() - positives,
        set.session_ids().len()
    )?;
    Ok(())
}

pub fn cmd_fit(args: &FitArgs, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    let classifier = parse_classifier(&args.classifier.classifier, seed)?;
    let spec = parse_specs(std::slice::from_ref(&args.pipeline), args.k, &classifier)?.remove(0);
    let data = load_data(&args.data)?;
    spec.validate(data.set.channels())?;
    let cov_cfg = CovarianceConfig::default();
    let covs = covariances(&data.set, &cov_cfg)?;
    let fitted = fit(&spec, &covs, data.set.labels())?;

    writeln!(out, "{} fitted on {} trials, K={}", spec.name, data.set.len(), spec.k)?;
    match &fitted.model {
        FittedModel::Tssf { tssf, .. } => {
            writeln!(out, "{:>4} {:>9} {:>14} {:>14}", "rank", "component", "beta", "|beta|")?;
            for (rank, (&comp, b)) in tssf.sort_index.iter().zip(tssf.full_beta.iter()).enumerate() {
                let mark = if rank < tssf.k { "*" } else { "" };
                writeln!(out, "{rank:>4} {comp:>9} {b:>14.6e} {:>14.6e} {mark}", b.abs())?;
            }
        }
        FittedModel::Csp { csp, .. } => {
            writeln!(out, "{:>4} {:>9} {:>14}", "rank", "component", "eigenvalue")?;
            for (rank, &comp) in csp.selection.iter().enumerate() {
                writeln!(out, "{rank:>4} {comp:>9} {:>14.6e}", csp.eigenvalues[comp])?;
            }
        }
        FittedModel::TsAirm { classifier, .. } => {
            writeln!(out, "tangent classifier with {} weights", classifier.feature_dim)?;
        }
    }

    let file = ModelFile {
        version: ModelFile::version_for(spec.name).to_string(),
        band: data.band,
        covariance: cov_cfg,
        pipeline: fitted,
    };
    file.save(&args.out)?;
    writeln!(out, "model written to {}", args.out.display())?;
    Ok(())
}

/// Machine-readable summary of an evaluation.
#[derive(Debug, Serialize)]
struct EvalSummary {
    seed: u64,
    folds: usize,
    trials: usize,
    sessions: Vec<u32>,
    pipeline: Vec<PipelineSummary>,
}

#[derive(Debug, Serialize)]
struct PipelineSummary {
    name: String,
    k: usize,
    feature_kind: Option<String>,
    mean_auc: f64,
    std_auc: f64,
    auc: Vec<f64>,
}

pub fn cmd_eval(args: &EvalArgs, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    if args.folds < 2 {
        return Err(usage(format!("--folds must be at least 2, got {}", args.folds)));
    }
    let classifier = parse_classifier(&args.classifier.classifier, seed)?;
    let specs = parse_specs(&args.pipeline, args.k, &classifier)?;
    let data = load_data(&args.data)?;
    let cfg = CvConfig {
        folds: args.folds,
        seed,
        ..CvConfig::default()
    };
    let reports = kfold_cv_many(&data.set, &specs, &cfg)?;
    let comparisons = compare_all(&reports)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out.display())))?;
    write_folds_csv(create(&args.out.join("folds.csv"))?, &reports)?;
    write_scores_csv(create(&args.out.join("scores.csv"))?, &reports)?;
    write_comparisons_csv(create(&args.out.join("comparisons.csv"))?, &comparisons)?;
    write_timing_csv(create(&args.out.join("timing.csv"))?, &reports)?;
    let summary = EvalSummary {
        seed,
        folds: args.folds,
        trials: data.set.len(),
        sessions: data.set.session_ids(),
        pipeline: reports
            .iter()
            .map(|r| PipelineSummary {
                name: r.pipeline.to_string(),
                k: r.k,
                feature_kind: r.feature_kind.map(|k| format!("{k:?}")),
                mean_auc: r.mean_auc,
                std_auc: r.std_auc,
                auc: r.aucs(),
            })
            .collect(),
    };
    let text = toml::to_string(&summary).map_err(|e| usage(format!("serialize report: {e}")))?;
    fs::write(args.out.join("report.toml"), text)?;

    writeln!(out, "{:<20} {:>3} {:>9} {:>9}", "pipeline", "K", "mean AUC", "std")?;
    for r in &reports {
        writeln!(out, "{:<20} {:>3} {:>9.4} {:>9.4}", r.pipeline.as_str(), r.k, r.mean_auc, r.std_auc)?;
    }
    for c in &comparisons {
        let smd = c.smd.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let p = c.wilcoxon.map_or("n/a".to_string(), |w| format!("{:.4}", w.p_value));
        writeln!(out, "{} vs {}: SMD {smd}, p {p}", c.pipeline_a, c.pipeline_b)?;
    }
    writeln!(out, "reports written to {}", args.out.display())?;
    Ok(())
}

pub fn cmd_patterns(args: &PatternsArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let filters = model
        .pipeline
        .filters()
        .ok_or_else(|| usage(format!("{} has no spatial filters", model.pipeline.name())))?;
    let mut data_args = DataArgs {
        data: args.data.data.clone(),
        manifest: args.data.manifest.clone(),
        band: args.data.band.clone(),
    };
    if data_args.band.is_none() {
        if let Some(b) = model.band {
            data_args.band = Some(format!("{}:{}:{}", b.low_hz, b.high_hz, b.fs_hz));
        }
    }
    let data = load_data(&data_args)?;
    if data.set.channels() != filters.nrows() {
        return Err(usage(format!(
            "model expects {} channels, data has {}",
            filters.nrows(),
            data.set.channels()
        )));
    }
    let covs = covariances(&data.set, &model.covariance)?;
    let set = compute_patterns(filters, &mean_covariance(&covs)?)?;
    if filters.is_square() {
        let product = set.patterns.transpose() * filters;
        let residual = (0..product.nrows())
            .flat_map(|i| (0..product.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (product[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        log::info!("patterns are the inverse transpose of the filters (residual {residual:e})");
    }
    let mut w = create(&args.out)?;
    write_patterns_csv(&mut w, &set.patterns, data.set.channel_names())?;
    w.flush()?;
    writeln!(
        out,
        "{} patterns over {} channels written to {}",
        set.patterns.ncols(),
        set.patterns.nrows(),
        args.out.display()
    )?;
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    if args.reps < tssf_core::evalstats::MIN_REPETITIONS {
        return Err(usage(format!(
            "--reps must be at least {}, got {}",
            tssf_core::evalstats::MIN_REPETITIONS,
            args.reps
        )));
    }
    let classifier = parse_classifier(&args.classifier.classifier, seed)?;
    let specs = parse_specs(&args.pipeline, args.k, &classifier)?;
    let data = load_data(&args.data)?;
    let cfg = BenchConfig {
        repetitions: args.reps,
        ..BenchConfig::default()
    };
    let covs = covariances(&data.set, &cfg.covariance)?;
    let models = specs
        .iter()
        .map(|s| fit(s, &covs, data.set.labels()))
        .collect::<Result<Vec<_>, _>>()?;
    let result = bench_predict(&models, data.set.trials(), &cfg)?;

    writeln!(
        out,
        "{:<20} {:>3} {:>7} {:>12} {:>12} {:>12}",
        "pipeline", "K", "trials", "median_us", "p10_us", "p90_us"
    )?;
    for r in &result.rows {
        writeln!(
            out,
            "{:<20} {:>3} {:>7} {:>12.2} {:>12.2} {:>12.2}",
            r.pipeline.as_str(),
            r.k,
            r.trials,
            r.median_us,
            r.p10_us,
            r.p90_us
        )?;
    }
    if let Some(p) = &args.out {
        write_bench_csv(create(p)?, &result.rows)?;
    }
    if let Some(p) = &args.predictions {
        let mut w = create(p)?;
        writeln!(w, "pipeline,trial,score")?;
        for (m, values) in models.iter().zip(&result.outputs) {
            for (i, v) in values.iter().enumerate() {
                writeln!(w, "{},{i},{v}", m.name())?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
