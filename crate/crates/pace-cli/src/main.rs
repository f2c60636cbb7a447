//! `pace` — commit-level performance impact prediction.
//!
//! Each pipeline phase is its own subcommand so CI jobs can run stages
//! independently; `run` chains them end to end. Stage failures exit with a
//! stable per-stage code: 10 snapshot, 20 extract, 30 represent, 40 bench,
//! 50 predict, 60 report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pace_core::bench::{
    join_targets, parse_surefire_dir, parse_times_csv, write_times_csv, BenchSource, KeyedVector,
    Microbenchmark, SuiteAggregation,
};
use pace_core::cstyle::{select_features, FeatureTaxonomy, ParsePolicy};
use pace_core::pipeline::artifacts::{
    read_json, report_csv, write_json, FeaturesArtifact, PredictionsArtifact, SeriesManifest,
    SingleVectorArtifact, SingleVectorTiming, SrEntry, VectorsArtifact,
};
use pace_core::pipeline::{
    extract_per_file, represent_keyed_nr, represent_rolling_nr, run_pipeline, split_predictions,
    stage_report, BenchFormat, PipelineConfig, PipelineError, PredictorKind, RepresentationMode,
    Stage,
};
use pace_core::predict::{run_rolling, DatasetMode, PredictorSpec};
use pace_core::represent::{represent_sr, NrAggregation};
use pace_core::snapshot::{snapshot_series, CommitSnapshot, SnapshotManifest};

#[derive(Parser)]
#[command(name = "pace", version, about = "Predicts the test-time impact of pending code updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize point-in-time snapshots of a repository's history
    Snapshot(SnapshotArgs),
    /// Count stylometry features over a snapshot (or per file)
    Extract(ExtractArgs),
    /// Turn feature counts into numeric vectors
    Represent(RepresentArgs),
    /// Ingest functional-test execution times
    Bench(BenchArgs),
    /// Fit predictors and evaluate the rolling or split protocol
    Predict(PredictArgs),
    /// Summarize predictions into the final report
    Report(ReportArgs),
    /// Run the whole pipeline from a config file
    Run(RunArgs),
}

#[derive(Args)]
struct SnapshotArgs {
    /// Source repository path
    #[arg(long)]
    repo: PathBuf,
    /// Number of most recent first-parent commits
    #[arg(long, default_value_t = 5)]
    commits: u64,
    /// Branch or revision to walk
    #[arg(long, default_value = "HEAD")]
    branch: String,
    /// Source file extension to match
    #[arg(long, default_value = ".java")]
    ext: String,
    /// Output directory for trees and manifests
    #[arg(long)]
    out: PathBuf,
    /// Overwrite non-empty snapshot directories
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Materialized snapshot directory (expects a sibling `<dir>.json`
    /// manifest) or any source directory with --per-file
    #[arg(long)]
    snapshot: PathBuf,
    /// Explicit manifest path when it is not the sibling default
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// What to do with unparsable files
    #[arg(long, value_enum, default_value_t = PolicyArg::Skip)]
    policy: PolicyArg,
    /// Emit one feature set per file instead of one per snapshot
    #[arg(long)]
    per_file: bool,
    /// Extension filter for --per-file
    #[arg(long, default_value = ".java")]
    ext: String,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Skip,
    Abort,
}

impl From<PolicyArg> for ParsePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Skip => ParsePolicy::Skip,
            PolicyArg::Abort => ParsePolicy::Abort,
        }
    }
}

#[derive(Args)]
struct RepresentArgs {
    /// A features.json file or a directory of *.features.json
    #[arg(long)]
    features: PathBuf,
    /// Representation to produce
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Seed for embedding training
    #[arg(long, default_value_t = pace_core::pipeline::default_seed())]
    seed: u64,
    /// How the neural block becomes a regression input
    #[arg(long, value_enum, default_value_t = NrAggArg::Flatten)]
    nr_agg: NrAggArg,
    /// Training window used to arrange neural rolling pairs
    #[arg(long, default_value_t = 1)]
    window: usize,
    /// Self-train one model per key instead of rolling pairs (split use)
    #[arg(long)]
    per_key: bool,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sr,
    Nr,
}

#[derive(Clone, Copy, ValueEnum)]
enum NrAggArg {
    Flatten,
    Meanpool,
}

impl From<NrAggArg> for NrAggregation {
    fn from(a: NrAggArg) -> Self {
        match a {
            NrAggArg::Flatten => NrAggregation::Flatten,
            NrAggArg::Meanpool => NrAggregation::MeanPool,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Surefire report directory or CSV file
    #[arg(long)]
    reports: PathBuf,
    /// Report format
    #[arg(long, value_enum)]
    format: FormatArg,
    /// Benchmark key for surefire ingestion (the commit hash)
    #[arg(long)]
    key: Option<String>,
    /// How per-suite times combine into one target
    #[arg(long, value_enum, default_value_t = SuiteAggArg::Sum)]
    suite_agg: SuiteAggArg,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Surefire,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteAggArg {
    Sum,
    Mean,
    Max,
}

impl From<SuiteAggArg> for SuiteAggregation {
    fn from(a: SuiteAggArg) -> Self {
        match a {
            SuiteAggArg::Sum => SuiteAggregation::Sum,
            SuiteAggArg::Mean => SuiteAggregation::Mean,
            SuiteAggArg::Max => SuiteAggregation::Max,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    /// vectors.json produced by `represent`
    #[arg(long)]
    vectors: PathBuf,
    /// times.csv produced by `bench`
    #[arg(long)]
    times: PathBuf,
    /// Predictor to fit
    #[arg(long, value_enum, default_value_t = ModelArg::Knn)]
    model: ModelArg,
    /// Evaluation protocol
    #[arg(long, value_enum, default_value_t = ProtocolArg::Rolling)]
    mode: ProtocolArg,
    /// Neighbors for knn
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// L2 strength for ridge
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Rolling training window
    #[arg(long, default_value_t = 1)]
    window: usize,
    /// Seed for the split shuffle
    #[arg(long, default_value_t = pace_core::pipeline::default_seed())]
    seed: u64,
    /// Training fraction for the split protocol
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// z-score features using training-side statistics (split only)
    #[arg(long)]
    standardize: bool,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Knn,
    Ridge,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Rolling,
    Split,
}

#[derive(Args)]
struct ReportArgs {
    /// predictions.json produced by `predict`
    #[arg(long)]
    predictions: PathBuf,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
    /// Also write a flat per-pair CSV table here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (JSON or flat key=value); flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    repo: Option<PathBuf>,
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    commits: Option<u64>,
    #[arg(long)]
    ext: Option<String>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bench: Option<PathBuf>,
    #[arg(long, value_enum)]
    bench_format: Option<FormatArg>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resume from this stage, reusing earlier artifacts in the output dir
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    force: bool,
}

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn stage(stage: Stage, err: impl std::fmt::Display) -> Self {
        CliFailure {
            code: stage.exit_code() as u8,
            message: format!("{} stage failed: {err}", stage.name()),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliFailure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for CliFailure {
    fn from(e: PipelineError) -> Self {
        CliFailure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Snapshot(args) => cmd_snapshot(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Represent(args) => cmd_represent(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Report(args) => cmd_report(args),
        Command::Run(args) => cmd_run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_snapshot(args: SnapshotArgs) -> Result<(), CliFailure> {
    let fail = |e| CliFailure::stage(Stage::Snapshot, e);
    let snapshots = snapshot_series(
        &args.repo,
        args.commits,
        &args.branch,
        &args.out,
        &args.ext,
        args.force,
    )
    .map_err(fail)?;

    let mut dirs = Vec::new();
    for snapshot in &snapshots {
        let dir_name = snapshot
            .root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let manifest_path = args.out.join(format!("{dir_name}.json"));
        write_json(&manifest_path, &SnapshotManifest::from(snapshot))?;
        dirs.push(dir_name);
    }
    let series = SeriesManifest {
        branch: args.branch.clone(),
        extension: args.ext.clone(),
        commits: snapshots.iter().map(|s| s.commit.clone()).collect(),
        snapshot_dirs: dirs,
    };
    write_json(&args.out.join("series.json"), &series)?;
    for snapshot in &snapshots {
        println!(
            "c{} {} files={} loc={} chars={}",
            snapshot.commit.index,
            snapshot.commit.short_hash(),
            snapshot.total_files,
            snapshot.total_loc,
            snapshot.total_chars
        );
    }
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliFailure> {
    let fail = |e| CliFailure::stage(Stage::Extract, e);
    if args.per_file {
        let features = extract_per_file(&args.snapshot, &args.ext).map_err(fail)?;
        write_json(&args.out, &features)?;
        println!(
            "extracted {} files from {}",
            features.len(),
            args.snapshot.display()
        );
        return Ok(());
    }

    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut p = args.snapshot.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    });
    let manifest: SnapshotManifest = read_json(&manifest_path)?;
    let snapshot = CommitSnapshot {
        commit: pace_core::snapshot::CommitRef {
            hash: manifest.hash.clone(),
            index: manifest.index,
            timestamp: 0,
        },
        root: args.snapshot.clone(),
        files: manifest.files,
        total_files: manifest.total_files,
        total_loc: manifest.total_loc,
        total_chars: manifest.total_chars,
    };
    let (counts, timing) =
        select_features(&snapshot, &FeatureTaxonomy::java(), args.policy.into()).map_err(fail)?;
    let artifact = FeaturesArtifact::new(&counts, &timing);
    write_json(&args.out, &artifact)?;
    println!(
        "{}: {} matches over {} chars",
        counts.key,
        counts.total_matches(),
        counts.corpus_chars
    );
    Ok(())
}

/// Orders feature files by snapshot index when named `c_<i>_<hash>...`,
/// falling back to name order.
fn load_features_dir(dir: &Path) -> Result<Vec<FeaturesArtifact>, CliFailure> {
    let mut named: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| CliFailure::usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| {
            let entry = entry.ok()?;
            let name = entry.file_name().to_string_lossy().into_owned();
            name.ends_with(".features.json")
                .then(|| (name, entry.path()))
        })
        .collect();
    named.sort_by_key(|(name, _)| {
        let index = name
            .strip_prefix("c_")
            .and_then(|rest| rest.split('_').next())
            .and_then(|idx| idx.parse::<u64>().ok());
        (index.is_none(), index, name.clone())
    });
    if named.is_empty() {
        return Err(CliFailure::usage(format!(
            "no *.features.json files in {}",
            dir.display()
        )));
    }
    named
        .into_iter()
        .map(|(_, path)| read_json(&path).map_err(CliFailure::from))
        .collect()
}

fn cmd_represent(args: RepresentArgs) -> Result<(), CliFailure> {
    let fail = |e| CliFailure::stage(Stage::Represent, e);
    let aggregation: NrAggregation = args.nr_agg.into();

    if args.features.is_file() {
        let artifact: FeaturesArtifact = read_json(&args.features)?;
        let start = Instant::now();
        let single = match args.mode {
            ModeArg::Sr => {
                let sr = represent_sr(&artifact.counts()).map_err(fail)?;
                SingleVectorArtifact {
                    key: sr.key,
                    mode: "sr".to_string(),
                    values: Some(sr.values),
                    flat: None,
                    timing: SingleVectorTiming {
                        representation_seconds: start.elapsed().as_secs_f64(),
                    },
                }
            }
            ModeArg::Nr => {
                let sides =
                    represent_keyed_nr(std::slice::from_ref(&artifact), args.seed, aggregation)
                        .map_err(fail)?;
                let side = sides.into_iter().next().expect("one input, one output");
                SingleVectorArtifact {
                    key: side.key,
                    mode: "nr".to_string(),
                    values: None,
                    flat: Some(side.flat),
                    timing: SingleVectorTiming {
                        representation_seconds: start.elapsed().as_secs_f64(),
                    },
                }
            }
        };
        write_json(&args.out, &single)?;
        println!("represented {}", single.key);
        return Ok(());
    }

    let features = load_features_dir(&args.features)?;
    let start = Instant::now();
    let artifact = match (args.mode, args.per_key) {
        (ModeArg::Sr, _) => {
            let mut vectors = Vec::new();
            for f in &features {
                let sr = represent_sr(&f.counts()).map_err(fail)?;
                vectors.push(SrEntry {
                    key: sr.key,
                    values: sr.values,
                });
            }
            VectorsArtifact::Sr {
                vectors,
                representation_seconds: start.elapsed().as_secs_f64(),
            }
        }
        (ModeArg::Nr, true) => {
            let vectors = represent_keyed_nr(&features, args.seed, aggregation).map_err(fail)?;
            VectorsArtifact::NrKeyed {
                vectors,
                representation_seconds: start.elapsed().as_secs_f64(),
            }
        }
        (ModeArg::Nr, false) => {
            let pairs = represent_rolling_nr(&features, args.window, args.seed, aggregation)
                .map_err(fail)?;
            VectorsArtifact::Nr {
                pairs,
                representation_seconds: start.elapsed().as_secs_f64(),
            }
        }
    };
    write_json(&args.out, &artifact)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliFailure> {
    let fail = |e| CliFailure::stage(Stage::Bench, e);
    let benchmarks = match args.format {
        FormatArg::Csv => parse_times_csv(&args.reports).map_err(fail)?,
        FormatArg::Surefire => {
            let key = args
                .key
                .clone()
                .ok_or_else(|| CliFailure::usage("--key is required for surefire ingestion"))?;
            let total = parse_surefire_dir(&args.reports).map_err(fail)?;
            println!(
                "{} suites, total {:.6}s",
                total.per_suite.len(),
                total.total_seconds
            );
            vec![Microbenchmark {
                key,
                seconds: total.aggregate(args.suite_agg.into()),
                source: BenchSource::SurefireXml,
            }]
        }
    };
    let csv = write_times_csv(&benchmarks).map_err(fail)?;
    std::fs::write(&args.out, csv)
        .map_err(|e| CliFailure::usage(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote {} ({} rows)", args.out.display(), benchmarks.len());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliFailure> {
    let fail = |e| CliFailure::stage(Stage::Predict, e);
    let vectors: VectorsArtifact = read_json(&args.vectors)?;
    let benchmarks =
        parse_times_csv(&args.times).map_err(|e| CliFailure::stage(Stage::Bench, e))?;
    let spec = match args.model {
        ModelArg::Knn => PredictorSpec::knn(args.k),
        ModelArg::Ridge => PredictorSpec::ridge(args.lambda),
    };

    let keyed: Option<Vec<KeyedVector>> = match &vectors {
        VectorsArtifact::Sr { vectors, .. } => Some(
            vectors
                .iter()
                .map(|v| KeyedVector {
                    key: v.key.clone(),
                    features: v.values.clone(),
                })
                .collect(),
        ),
        VectorsArtifact::NrKeyed { vectors, .. } => Some(
            vectors
                .iter()
                .map(|v| KeyedVector {
                    key: v.key.clone(),
                    features: v.flat.clone(),
                })
                .collect(),
        ),
        VectorsArtifact::Nr { .. } => None,
    };

    let artifact = match (args.mode, keyed) {
        (ProtocolArg::Rolling, Some(keyed)) => {
            let dataset = join_targets(&keyed, &benchmarks, DatasetMode::Rolling)
                .map_err(|e| CliFailure::stage(Stage::Predict, e))?;
            let records = run_rolling(&dataset, &spec, args.window).map_err(fail)?;
            PredictionsArtifact {
                model: spec.name().to_string(),
                protocol: "rolling".to_string(),
                window: args.window,
                records,
                aggregate: None,
            }
        }
        (ProtocolArg::Split, Some(keyed)) => {
            let dataset = join_targets(&keyed, &benchmarks, DatasetMode::Split)
                .map_err(|e| CliFailure::stage(Stage::Predict, e))?;
            split_predictions(
                &dataset,
                &spec,
                args.train_fraction,
                args.seed,
                args.standardize,
            )
            .map_err(fail)?
        }
        (ProtocolArg::Rolling, None) => {
            // neural rolling pairs carry their own train/test structure
            let config = PipelineConfig {
                model: match args.model {
                    ModelArg::Knn => PredictorKind::Knn,
                    ModelArg::Ridge => PredictorKind::Ridge,
                },
                k: args.k,
                lambda: args.lambda,
                window: args.window,
                ..PipelineConfig::default()
            };
            pace_core::pipeline::predict_from_vectors(&config, &vectors, &benchmarks)
                .map_err(CliFailure::from)?
        }
        (ProtocolArg::Split, None) => {
            return Err(CliFailure::usage(
                "split mode needs per-key vectors; regenerate with `pace represent --per-key` \
                 (neural) or SR vectors",
            ));
        }
    };
    write_json(&args.out, &artifact)?;
    println!(
        "{} records via {} ({})",
        artifact.records.len(),
        artifact.model,
        artifact.protocol
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliFailure> {
    let predictions: PredictionsArtifact = read_json(&args.predictions)?;
    let report = stage_report(&predictions).map_err(|e| CliFailure::stage(Stage::Report, e))?;
    write_json(&args.out, &report)?;
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, report_csv(&report))
            .map_err(|e| CliFailure::usage(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    println!(
        "{} pairs, overall rmmr {:.4}, {} positive / {} negative impacts",
        report.records.len(),
        report.summary.overall_rmmr,
        report
            .delta_impacts
            .iter()
            .filter(|d| d.sign == pace_core::metrics::ImpactSign::Positive)
            .count(),
        report
            .delta_impacts
            .iter()
            .filter(|d| d.sign == pace_core::metrics::ImpactSign::Negative)
            .count(),
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliFailure> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.repo {
        config.repo = v;
    }
    if let Some(v) = args.branch {
        config.branch = v;
    }
    if let Some(v) = args.commits {
        config.max_commits = v;
    }
    if let Some(v) = args.ext {
        config.extension = v;
    }
    if let Some(v) = args.policy {
        config.policy = v.into();
    }
    if let Some(v) = args.mode {
        config.mode = match v {
            ModeArg::Sr => RepresentationMode::Sr,
            ModeArg::Nr => RepresentationMode::Nr,
        };
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.bench {
        config.bench_source = v;
    }
    if let Some(v) = args.bench_format {
        config.bench_format = match v {
            FormatArg::Surefire => BenchFormat::Surefire,
            FormatArg::Csv => BenchFormat::Csv,
        };
    }
    if let Some(v) = args.model {
        config.model = match v {
            ModelArg::Knn => PredictorKind::Knn,
            ModelArg::Ridge => PredictorKind::Ridge,
        };
    }
    if let Some(v) = args.k {
        config.k = v;
    }
    if let Some(v) = args.lambda {
        config.lambda = v;
    }
    if let Some(v) = args.window {
        config.window = v as usize;
    }
    if let Some(v) = args.out {
        config.out_dir = v;
    }
    if args.force {
        config.force = true;
    }

    let from = match args.from.as_deref() {
        None => Stage::Snapshot,
        Some(name) => Stage::parse(name).ok_or_else(|| {
            CliFailure::usage(format!(
                "unknown stage {name:?}; expected one of snapshot, extract, represent, bench, predict, report"
            ))
        })?,
    };

    let outcome = run_pipeline(&config, from)?;
    println!(
        "report: {} ({} pairs, overall rmmr {:.4}, {} delta impacts)",
        outcome.report_path.display(),
        outcome.report.records.len(),
        outcome.report.summary.overall_rmmr,
        outcome.report.delta_impacts.len()
    );
    println!("timings: {}", outcome.timings_path.display());
    Ok(())
}
