//! End-to-end pipeline orchestration.
//!
//! Stages run in a fixed order — snapshot, extract, represent, bench,
//! predict, report — each persisting its artifacts under the output
//! directory so any later stage can resume from disk. A failing stage
//! aborts the run with a stage-specific exit code (10, 20, 30, 40, 50, 60),
//! giving CI scripts a stable contract.

pub mod artifacts;
pub mod timing;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{
    self, join_targets, parse_surefire_dir, parse_times_csv, write_times_csv, BenchError,
    BenchSource, KeyedVector, Microbenchmark, SuiteAggregation,
};
use crate::cstyle::{
    select_features, CstyleError, FeatureTaxonomy, ParsePolicy,
};
use crate::metrics::{delta_impacts, summarize, MetricsError};
use crate::predict::{
    run_rolling, run_rolling_pairs, run_split, Dataset, DatasetMode, Observation, PredictError,
    PredictorSpec, RollingPair, DEFAULT_KNN_K, DEFAULT_RIDGE_LAMBDA,
};
use crate::represent::{
    represent_nr, represent_sr, train_embeddings, Hyperparameters, NrAggregation, RepresentError,
};
use crate::snapshot::{snapshot_series, SnapshotError, SnapshotManifest};

use artifacts::{
    read_json, write_json, FeaturesArtifact, Layout, NrPairEntry, NrSide, PredictionsArtifact,
    Report, ReportRecord, SeriesManifest, SrEntry, TimingsReport, VectorsArtifact,
};
use timing::StageTiming;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Snapshot,
    Extract,
    Represent,
    Bench,
    Predict,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Snapshot,
        Stage::Extract,
        Stage::Represent,
        Stage::Bench,
        Stage::Predict,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Snapshot => "snapshot",
            Stage::Extract => "extract",
            Stage::Represent => "represent",
            Stage::Bench => "bench",
            Stage::Predict => "predict",
            Stage::Report => "report",
        }
    }

    /// Stable per-stage exit code for CI scripting.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Snapshot => 10,
            Stage::Extract => 20,
            Stage::Represent => 30,
            Stage::Bench => 40,
            Stage::Predict => 50,
            Stage::Report => 60,
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.iter().copied().find(|s| s.name() == name)
    }
}

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Cstyle(#[from] CstyleError),
    #[error(transparent)]
    Represent(#[from] RepresentError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output directory is locked ({path}); remove the lock if no other run is active")]
    Locked { path: PathBuf },
    #[error("io error at {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{} stage failed: {failure}", stage.name())]
    Stage { stage: Stage, failure: StageFailure },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Locked { .. } => 1,
            PipelineError::Io { .. } => 1,
            PipelineError::Stage { stage, .. } => stage.exit_code(),
        }
    }

    fn at<E: Into<StageFailure>>(stage: Stage) -> impl Fn(E) -> PipelineError + Copy {
        move |e| PipelineError::Stage {
            stage,
            failure: e.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationMode {
    Sr,
    Nr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchFormat {
    Surefire,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Knn,
    Ridge,
}

/// Everything one run needs, validated before any stage executes. The file
/// form is JSON or flat `key=value` lines; every key can be overridden by a
/// CLI flag, and `PACE_SEED` serves as the seed fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub repo: PathBuf,
    pub branch: String,
    pub max_commits: u64,
    pub extension: String,
    pub policy: ParsePolicy,
    pub mode: RepresentationMode,
    pub nr_aggregation: NrAggregation,
    pub seed: u64,
    pub bench_source: PathBuf,
    pub bench_format: BenchFormat,
    pub suite_aggregation: SuiteAggregation,
    pub model: PredictorKind,
    pub k: usize,
    pub lambda: f64,
    pub window: usize,
    pub out_dir: PathBuf,
    pub force: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            repo: PathBuf::new(),
            branch: "HEAD".to_string(),
            max_commits: 5,
            extension: ".java".to_string(),
            policy: ParsePolicy::Skip,
            mode: RepresentationMode::Sr,
            nr_aggregation: NrAggregation::Flatten,
            seed: default_seed(),
            bench_source: PathBuf::new(),
            bench_format: BenchFormat::Surefire,
            suite_aggregation: SuiteAggregation::Sum,
            model: PredictorKind::Knn,
            k: DEFAULT_KNN_K,
            lambda: DEFAULT_RIDGE_LAMBDA,
            window: 1,
            out_dir: PathBuf::new(),
            force: false,
        }
    }
}

/// Seed resolution falls back to the PACE_SEED environment variable.
pub fn default_seed() -> u64 {
    std::env::var("PACE_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(42)
}

impl PipelineConfig {
    /// Parses the JSON or flat `key=value` config file form.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_str_any(&text)
    }

    pub fn from_str_any(text: &str) -> Result<Self, PipelineError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
        } else {
            Self::from_flat(text)
        }
    }

    /// Flat form: one `key = value` per line, `#` comments.
    fn from_flat(text: &str) -> Result<Self, PipelineError> {
        let mut object = serde_json::Map::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key=value", idx + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim();
            let json_value = match key.as_str() {
                "max_commits" | "seed" | "k" | "window" => serde_json::Value::from(
                    value.parse::<u64>().map_err(|_| {
                        PipelineError::Config(format!("{key}: expected an integer, got {value:?}"))
                    })?,
                ),
                "lambda" => serde_json::Value::from(value.parse::<f64>().map_err(|_| {
                    PipelineError::Config(format!("{key}: expected a number, got {value:?}"))
                })?),
                "force" => serde_json::Value::from(value.parse::<bool>().map_err(|_| {
                    PipelineError::Config(format!("{key}: expected true/false, got {value:?}"))
                })?),
                _ => serde_json::Value::from(value.to_string()),
            };
            object.insert(key, json_value);
        }
        serde_json::from_value(serde_json::Value::Object(object))
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn predictor_spec(&self) -> PredictorSpec {
        match self.model {
            PredictorKind::Knn => PredictorSpec::knn(self.k),
            PredictorKind::Ridge => PredictorSpec::ridge(self.lambda),
        }
    }

    /// Validates every field before any stage runs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |msg: String| Err(PipelineError::Config(msg));
        if self.repo.as_os_str().is_empty() {
            return fail("repo is required".into());
        }
        if !self.repo.exists() {
            return fail(format!("repo {} does not exist", self.repo.display()));
        }
        if self.out_dir.as_os_str().is_empty() {
            return fail("out_dir is required".into());
        }
        if self.bench_source.as_os_str().is_empty() {
            return fail("bench_source is required".into());
        }
        if self.max_commits == 0 {
            return fail("max_commits must be at least 1".into());
        }
        if self.window == 0 {
            return fail("window must be at least 1".into());
        }
        if !self.extension.starts_with('.') {
            return fail(format!(
                "extension must start with a dot, got {:?}",
                self.extension
            ));
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.lambda < 0.0 {
            return fail("lambda must be non-negative".into());
        }
        if self.branch.is_empty() {
            return fail("branch must not be empty".into());
        }
        Ok(())
    }

    /// Round-trips losslessly through the JSON config form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Exclusive per-output-directory lock, released on drop.
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(path: &Path) -> Result<Self, PipelineError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::Io {
                path: parent.to_path_buf(),
                message: e.to_string(),
            })?;
        }
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
        {
            Ok(_) => Ok(LockGuard {
                path: path.to_path_buf(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked {
                path: path.to_path_buf(),
            }),
            Err(e) => Err(PipelineError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            }),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// The finished run: where the report landed and what it contains.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub report_path: PathBuf,
    pub timings_path: PathBuf,
}

/// Runs the pipeline from `from` (inclusive) to the report, loading earlier
/// artifacts from the output directory when resuming.
pub fn run_pipeline(config: &PipelineConfig, from: Stage) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let layout = Layout::new(&config.out_dir);
    std::fs::create_dir_all(&config.out_dir).map_err(|e| PipelineError::Io {
        path: config.out_dir.clone(),
        message: e.to_string(),
    })?;
    let _lock = LockGuard::acquire(&layout.lock())?;

    let mut stage_timings: Vec<StageTiming> = Vec::new();
    let runs = |stage: Stage| stage >= from;

    // snapshot
    let series = if runs(Stage::Snapshot) {
        let (result, timing) = timing::time_stage("snapshot", || stage_snapshot(config, &layout));
        stage_timings.push(timing);
        result?
    } else {
        read_json::<SeriesManifest>(&layout.series())?
    };

    // extract
    let features = if runs(Stage::Extract) {
        stage_extract(config, &layout, &series, &mut stage_timings)?
    } else {
        load_features(&layout, &series)?
    };

    // represent
    let vectors = if runs(Stage::Represent) {
        let result = stage_represent(config, &features)?;
        stage_timings.push(StageTiming::new(
            match config.mode {
                RepresentationMode::Sr => "sr",
                RepresentationMode::Nr => "nr",
            },
            match &result {
                VectorsArtifact::Sr {
                    representation_seconds,
                    ..
                }
                | VectorsArtifact::Nr {
                    representation_seconds,
                    ..
                }
                | VectorsArtifact::NrKeyed {
                    representation_seconds,
                    ..
                } => *representation_seconds,
            },
        ));
        write_json(&layout.vectors(), &result)?;
        result
    } else {
        read_json::<VectorsArtifact>(&layout.vectors())?
    };

    // bench
    let benchmarks = if runs(Stage::Bench) {
        let (result, timing) = timing::time_stage("bench", || stage_bench(config, &series));
        stage_timings.push(timing);
        let benchmarks = result?;
        let csv = write_times_csv(&benchmarks).map_err(PipelineError::at(Stage::Bench))?;
        std::fs::write(layout.times(), csv).map_err(|e| PipelineError::Io {
            path: layout.times(),
            message: e.to_string(),
        })?;
        benchmarks
    } else {
        parse_times_csv(&layout.times()).map_err(PipelineError::at(Stage::Bench))?
    };

    // predict
    let predictions = if runs(Stage::Predict) {
        let result = predict_from_vectors(config, &vectors, &benchmarks)?;
        let fit_total: f64 = result.records.iter().map(|r| r.timing.train_seconds).sum();
        let predict_total: f64 = result
            .records
            .iter()
            .map(|r| r.timing.predict_seconds)
            .sum();
        stage_timings.push(StageTiming::new("fit", fit_total));
        stage_timings.push(StageTiming::new("predict", predict_total));
        write_json(&layout.predictions(), &result)?;
        result
    } else {
        read_json::<PredictionsArtifact>(&layout.predictions())?
    };

    // report
    let report = stage_report(&predictions).map_err(PipelineError::at(Stage::Report))?;
    write_json(&layout.report(), &report)?;
    let timings = TimingsReport {
        stages: stage_timings,
        per_record: predictions
            .records
            .iter()
            .map(|r| artifacts::RecordTimingEntry::new(r.pair_label(), &r.timing))
            .collect(),
    };
    write_json(&layout.timings(), &timings)?;

    Ok(RunOutcome {
        report,
        report_path: layout.report(),
        timings_path: layout.timings(),
    })
}

fn stage_snapshot(
    config: &PipelineConfig,
    layout: &Layout,
) -> Result<SeriesManifest, PipelineError> {
    let fail = PipelineError::at(Stage::Snapshot);
    let snapshots = snapshot_series(
        &config.repo,
        config.max_commits,
        &config.branch,
        &layout.snapshots_dir(),
        &config.extension,
        config.force,
    )
    .map_err(fail)?;

    let mut dirs = Vec::new();
    for snapshot in &snapshots {
        let dir_name = snapshot
            .root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        write_json(
            &layout.snapshot_manifest(&dir_name),
            &SnapshotManifest::from(snapshot),
        )?;
        dirs.push(dir_name);
    }
    let series = SeriesManifest {
        branch: config.branch.clone(),
        extension: config.extension.clone(),
        commits: snapshots.iter().map(|s| s.commit.clone()).collect(),
        snapshot_dirs: dirs,
    };
    write_json(&layout.series(), &series)?;
    Ok(series)
}

fn stage_extract(
    config: &PipelineConfig,
    layout: &Layout,
    series: &SeriesManifest,
    stage_timings: &mut Vec<StageTiming>,
) -> Result<Vec<FeaturesArtifact>, PipelineError> {
    let fail = PipelineError::at(Stage::Extract);
    let taxonomy = FeatureTaxonomy::java();
    let mut out = Vec::new();
    let mut per_class_total: indexmap::IndexMap<String, f64> = indexmap::IndexMap::new();
    for (commit, dir_name) in series.commits.iter().zip(series.snapshot_dirs.iter()) {
        let manifest: SnapshotManifest = read_json(&layout.snapshot_manifest(dir_name))?;
        let snapshot = crate::snapshot::CommitSnapshot {
            commit: commit.clone(),
            root: layout.snapshots_dir().join(dir_name),
            files: manifest.files,
            total_files: manifest.total_files,
            total_loc: manifest.total_loc,
            total_chars: manifest.total_chars,
        };
        let (counts, timing) =
            select_features(&snapshot, &taxonomy, config.policy).map_err(fail)?;
        for (class, secs) in &timing.seconds_per_class {
            *per_class_total.entry(class.clone()).or_insert(0.0) += secs;
        }
        let artifact = FeaturesArtifact::new(&counts, &timing);
        write_json(&layout.features(dir_name), &artifact)?;
        out.push(artifact);
    }
    stage_timings.push(StageTiming::with_breakdown("selection", per_class_total));
    Ok(out)
}

fn load_features(
    layout: &Layout,
    series: &SeriesManifest,
) -> Result<Vec<FeaturesArtifact>, PipelineError> {
    series
        .snapshot_dirs
        .iter()
        .map(|dir| read_json(&layout.features(dir)))
        .collect()
}

fn stage_represent(
    config: &PipelineConfig,
    features: &[FeaturesArtifact],
) -> Result<VectorsArtifact, PipelineError> {
    let fail = PipelineError::at(Stage::Represent);
    let start = std::time::Instant::now();
    match config.mode {
        RepresentationMode::Sr => {
            let mut vectors = Vec::new();
            for artifact in features {
                let sr = represent_sr(&artifact.counts()).map_err(fail)?;
                vectors.push(SrEntry {
                    key: sr.key,
                    values: sr.values,
                });
            }
            Ok(VectorsArtifact::Sr {
                vectors,
                representation_seconds: start.elapsed().as_secs_f64(),
            })
        }
        RepresentationMode::Nr => {
            let pairs = represent_rolling_nr(
                features,
                config.window,
                config.seed,
                config.nr_aggregation,
            )
            .map_err(fail)?;
            Ok(VectorsArtifact::Nr {
                pairs,
                representation_seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

/// Builds the neural rolling pairs: for each window the embedding model is
/// trained on the training commits' token sequences only and then applied
/// to both sides, so the test commit never leaks into training.
pub fn represent_rolling_nr(
    features: &[FeaturesArtifact],
    window: usize,
    seed: u64,
    aggregation: NrAggregation,
) -> Result<Vec<NrPairEntry>, RepresentError> {
    if features.len() < window + 1 {
        // not enough commits to form a single pair; surfaced later by the
        // predictor as WindowTooLarge, but guard the slicing here
        return Ok(Vec::new());
    }
    let hp = Hyperparameters::default();
    let mut pairs = Vec::new();
    for i in 0..features.len() - window {
        let train_side = &features[i..i + window];
        let test_side = &features[i + window];
        let sequences: Vec<Vec<String>> = train_side
            .iter()
            .map(|f| f.token_sequence.clone())
            .collect();
        let model = train_embeddings(&sequences, seed, &hp)?;
        let mut train = Vec::new();
        for f in train_side {
            let nr = represent_nr(&f.counts(), &model, aggregation)?;
            train.push(NrSide {
                key: nr.key,
                flat: nr.flat,
            });
        }
        let nr = represent_nr(&test_side.counts(), &model, aggregation)?;
        pairs.push(NrPairEntry {
            pair_index: i,
            train,
            test: NrSide {
                key: nr.key,
                flat: nr.flat,
            },
            vocabulary_size: model.vocabulary.len(),
        });
    }
    Ok(pairs)
}

fn stage_bench(
    config: &PipelineConfig,
    series: &SeriesManifest,
) -> Result<Vec<Microbenchmark>, PipelineError> {
    let fail = PipelineError::at(Stage::Bench);
    match config.bench_format {
        BenchFormat::Csv => parse_times_csv(&config.bench_source).map_err(fail),
        BenchFormat::Surefire => {
            let mut out = Vec::new();
            for commit in &series.commits {
                let dir = resolve_report_dir(&config.bench_source, &commit.hash, commit.index)
                    .ok_or_else(|| {
                        PipelineError::Stage {
                            stage: Stage::Bench,
                            failure: BenchError::NoReportsFound {
                                dir: config.bench_source.join(&commit.hash),
                            }
                            .into(),
                        }
                    })?;
                let total = parse_surefire_dir(&dir).map_err(fail)?;
                out.push(Microbenchmark {
                    key: commit.hash.clone(),
                    seconds: total.aggregate(config.suite_aggregation),
                    source: BenchSource::SurefireXml,
                });
            }
            Ok(out)
        }
    }
}

/// Surefire report directories may be named by full hash, short hash or the
/// snapshot directory convention.
fn resolve_report_dir(root: &Path, hash: &str, index: u64) -> Option<PathBuf> {
    let candidates = [
        root.join(hash),
        root.join(&hash[..7.min(hash.len())]),
        root.join(format!("c_{}_{}", index, &hash[..7.min(hash.len())])),
    ];
    candidates.into_iter().find(|p| p.is_dir())
}

/// Evaluates the rolling protocol over a vectors artifact joined to its
/// benchmarks. Neural pair artifacts carry their own train/test structure;
/// per-key artifacts are joined and rolled by window.
pub fn predict_from_vectors(
    config: &PipelineConfig,
    vectors: &VectorsArtifact,
    benchmarks: &[Microbenchmark],
) -> Result<PredictionsArtifact, PipelineError> {
    let fail = PipelineError::at(Stage::Predict);
    let fail_bench = PipelineError::at(Stage::Predict);
    let spec = config.predictor_spec();
    let records = match vectors {
        VectorsArtifact::Sr { vectors, .. } => {
            let keyed: Vec<KeyedVector> = vectors
                .iter()
                .map(|v| KeyedVector {
                    key: v.key.clone(),
                    features: v.values.clone(),
                })
                .collect();
            let dataset =
                join_targets(&keyed, benchmarks, DatasetMode::Rolling).map_err(fail_bench)?;
            run_rolling(&dataset, &spec, config.window).map_err(fail)?
        }
        VectorsArtifact::NrKeyed { vectors, .. } => {
            let keyed: Vec<KeyedVector> = vectors
                .iter()
                .map(|v| KeyedVector {
                    key: v.key.clone(),
                    features: v.flat.clone(),
                })
                .collect();
            let dataset =
                join_targets(&keyed, benchmarks, DatasetMode::Rolling).map_err(fail_bench)?;
            run_rolling(&dataset, &spec, config.window).map_err(fail)?
        }
        VectorsArtifact::Nr { pairs, .. } => {
            let seconds =
                bench::seconds_by_key(benchmarks).map_err(PipelineError::at(Stage::Predict))?;
            let lookup = |key: &str| -> Result<f64, PipelineError> {
                seconds.get(key).copied().ok_or_else(|| PipelineError::Stage {
                    stage: Stage::Predict,
                    failure: BenchError::MissingTarget {
                        key: key.to_string(),
                    }
                    .into(),
                })
            };
            let mut rolling_pairs = Vec::new();
            for pair in pairs {
                let mut train = Vec::new();
                for side in &pair.train {
                    train.push(Observation {
                        key: side.key.clone(),
                        features: side.flat.clone(),
                        target: lookup(&side.key)?,
                    });
                }
                rolling_pairs.push(RollingPair {
                    train,
                    test: Observation {
                        key: pair.test.key.clone(),
                        features: pair.test.flat.clone(),
                        target: lookup(&pair.test.key)?,
                    },
                });
            }
            if rolling_pairs.is_empty() {
                return Err(PipelineError::Stage {
                    stage: Stage::Predict,
                    failure: PredictError::TooFewObservations {
                        needed: config.window + 1,
                        got: rolling_pairs.len(),
                    }
                    .into(),
                });
            }
            run_rolling_pairs(&rolling_pairs, &spec).map_err(fail)?
        }
    };
    Ok(PredictionsArtifact {
        model: spec.name().to_string(),
        protocol: "rolling".to_string(),
        window: config.window,
        records,
        aggregate: None,
    })
}

/// Builds the report from evaluated records: per-pair rows, consecutive
/// delta impacts (rolling only) and the summary table.
pub fn stage_report(predictions: &PredictionsArtifact) -> Result<Report, MetricsError> {
    let records: Vec<ReportRecord> = predictions.records.iter().map(ReportRecord::from).collect();
    let labeled: Vec<(String, crate::metrics::MetricSet)> = records
        .iter()
        .map(|r| (r.pair.clone(), r.metrics.clone()))
        .collect();
    let summary = summarize(&labeled)?;
    let deltas = if predictions.protocol == "rolling" && records.len() >= 2 {
        let rmmr: Vec<(String, f64)> = records
            .iter()
            .map(|r| (r.pair.clone(), r.metrics.rmmr))
            .collect();
        delta_impacts(&rmmr)?
    } else {
        Vec::new()
    };
    Ok(Report {
        model: predictions.model.clone(),
        protocol: predictions.protocol.clone(),
        records,
        delta_impacts: deltas,
        summary,
        aggregate: predictions.aggregate.clone(),
    })
}

/// Per-file feature extraction for the file-level split protocol: each file
/// matching `extension` under `dir` becomes its own observation keyed by
/// its relative path.
pub fn extract_per_file(
    dir: &Path,
    extension: &str,
) -> Result<Vec<FeaturesArtifact>, CstyleError> {
    let taxonomy = FeatureTaxonomy::java();
    let mut files = Vec::new();
    collect_matching(dir, dir, extension, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(CstyleError::EmptyCorpus);
    }
    let mut out = Vec::new();
    for rel in files {
        let path = dir.join(&rel);
        let source = std::fs::read(&path).map_err(|source| CstyleError::Io {
            path: path.clone(),
            source,
        })?;
        let (counts, timing) = crate::cstyle::select_features_source(&rel, &source, &taxonomy)?;
        out.push(FeaturesArtifact::new(&counts, &timing));
    }
    Ok(out)
}

fn collect_matching(
    root: &Path,
    dir: &Path,
    extension: &str,
    out: &mut Vec<String>,
) -> Result<(), CstyleError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CstyleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CstyleError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() {
            if entry.file_name() != ".git" {
                collect_matching(root, &path, extension, out)?;
            }
        } else if entry.file_name().to_string_lossy().ends_with(extension) {
            out.push(
                path.strip_prefix(root)
                    .expect("walk stays under root")
                    .to_string_lossy()
                    .into_owned(),
            );
        }
    }
    Ok(())
}

/// Self-trained per-key neural vectors: every observation is embedded with
/// a model trained on its own token sequence only, so no observation leaks
/// into another's representation. Used by the split protocol.
pub fn represent_keyed_nr(
    features: &[FeaturesArtifact],
    seed: u64,
    aggregation: NrAggregation,
) -> Result<Vec<NrSide>, RepresentError> {
    let hp = Hyperparameters::default();
    let mut out = Vec::new();
    for artifact in features {
        let model = train_embeddings(
            std::slice::from_ref(&artifact.token_sequence),
            seed,
            &hp,
        )?;
        let nr = represent_nr(&artifact.counts(), &model, aggregation)?;
        out.push(NrSide {
            key: nr.key,
            flat: nr.flat,
        });
    }
    Ok(out)
}

/// Runs the split protocol over pre-joined observations (the file-level
/// dataset path used outside `run`).
pub fn split_predictions(
    dataset: &Dataset,
    spec: &PredictorSpec,
    train_fraction: f64,
    seed: u64,
    standardize: bool,
) -> Result<PredictionsArtifact, PredictError> {
    let outcome = run_split(dataset, spec, train_fraction, seed, standardize)?;
    Ok(PredictionsArtifact {
        model: spec.name().to_string(),
        protocol: "split".to_string(),
        window: 0,
        records: outcome.records,
        aggregate: Some(outcome.aggregate),
    })
}
