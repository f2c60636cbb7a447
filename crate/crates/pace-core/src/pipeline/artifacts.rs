//! On-disk artifact schemas for each pipeline stage.
//!
//! Every stage writes enough for the next stage to resume from disk. All
//! files are UTF-8 JSON with LF endings except `times.csv`, whose exact
//! format lives in the bench module. `report.json` is the one artifact
//! guaranteed byte-identical across reruns with the same inputs and seed;
//! wall-clock measurements therefore go to `timings.json` instead.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cstyle::{class_totals, FeatureCounts, SelectionTiming};
use crate::metrics::{DeltaImpact, MetricSet, Summary};
use crate::predict::{PredictionRecord, RecordTiming};
use crate::snapshot::CommitRef;

use super::timing::StageTiming;
use super::PipelineError;

/// Index of one snapshot run: the ordered commits and their directories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesManifest {
    pub branch: String,
    pub extension: String,
    pub commits: Vec<CommitRef>,
    /// Snapshot directory names under `snapshots/`, one per commit.
    pub snapshot_dirs: Vec<String>,
}

/// `features/<dir>.features.json`: counts plus class totals and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesArtifact {
    pub key: String,
    pub corpus_chars: u64,
    pub per_type: IndexMap<String, u64>,
    pub class_totals: IndexMap<String, u64>,
    pub token_sequence: Vec<String>,
    pub skipped_files: Vec<String>,
    pub timing: FeaturesTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesTiming {
    pub selection_seconds_per_class: IndexMap<String, f64>,
    pub selection_seconds_total: f64,
    pub parse_seconds: f64,
}

impl FeaturesArtifact {
    pub fn new(counts: &FeatureCounts, timing: &SelectionTiming) -> Self {
        FeaturesArtifact {
            key: counts.key.clone(),
            corpus_chars: counts.corpus_chars,
            per_type: counts.per_type.clone(),
            class_totals: class_totals(counts),
            token_sequence: counts.token_sequence.clone(),
            skipped_files: counts.skipped_files.clone(),
            timing: FeaturesTiming {
                selection_seconds_per_class: timing.seconds_per_class.clone(),
                selection_seconds_total: timing.total_seconds(),
                parse_seconds: timing.parse_seconds,
            },
        }
    }

    pub fn counts(&self) -> FeatureCounts {
        FeatureCounts {
            key: self.key.clone(),
            per_type: self.per_type.clone(),
            corpus_chars: self.corpus_chars,
            token_sequence: self.token_sequence.clone(),
            skipped_files: self.skipped_files.clone(),
        }
    }
}

/// One statistically-represented commit or file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrEntry {
    pub key: String,
    pub values: Vec<f64>,
}

/// One neural rolling pair: the training window and the test commit, all
/// embedded with the model trained on the training side only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrPairEntry {
    pub pair_index: usize,
    pub train: Vec<NrSide>,
    pub test: NrSide,
    pub vocabulary_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrSide {
    pub key: String,
    pub flat: Vec<f64>,
}

/// `vectors.json`: per-key statistical vectors, neural rolling pairs, or
/// independently self-trained per-key neural vectors (split protocol).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum VectorsArtifact {
    Sr {
        vectors: Vec<SrEntry>,
        representation_seconds: f64,
    },
    Nr {
        pairs: Vec<NrPairEntry>,
        representation_seconds: f64,
    },
    NrKeyed {
        vectors: Vec<NrSide>,
        representation_seconds: f64,
    },
}

/// The single-input form of `pace represent`: one key, one vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleVectorArtifact {
    pub key: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat: Option<Vec<f64>>,
    pub timing: SingleVectorTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleVectorTiming {
    pub representation_seconds: f64,
}

/// `predictions.json`: evaluated records plus the protocol that made them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsArtifact {
    pub model: String,
    pub protocol: String,
    pub window: usize,
    pub records: Vec<PredictionRecord>,
    /// Metrics over the whole test set (split protocol only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<MetricSet>,
}

/// One row of `report.json`: a record with its wall-clock timing stripped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub pair: String,
    pub train_key: String,
    pub test_key: String,
    pub predicted: f64,
    pub actual: f64,
    pub metrics: MetricSet,
}

impl From<&PredictionRecord> for ReportRecord {
    fn from(r: &PredictionRecord) -> Self {
        ReportRecord {
            pair: r.pair_label(),
            train_key: r.train_key.clone(),
            test_key: r.test_key.clone(),
            predicted: r.predicted,
            actual: r.actual,
            metrics: r.metrics.clone(),
        }
    }
}

/// `report.json`: per-pair results, consecutive delta impacts and the
/// summary table. Deterministic for fixed inputs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub protocol: String,
    pub records: Vec<ReportRecord>,
    pub delta_impacts: Vec<DeltaImpact>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<MetricSet>,
}

/// `timings.json`: stage wall times and per-record fit/predict times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingsReport {
    pub stages: Vec<StageTiming>,
    pub per_record: Vec<RecordTimingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTimingEntry {
    pub pair: String,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

impl RecordTimingEntry {
    pub fn new(pair: String, timing: &RecordTiming) -> Self {
        RecordTimingEntry {
            pair,
            train_seconds: timing.train_seconds,
            predict_seconds: timing.predict_seconds,
        }
    }
}

/// The flat per-pair CSV emitted next to the report for plotting.
pub fn report_csv(report: &Report) -> String {
    let mut out =
        String::from("pair,train_key,test_key,predicted,actual,rmse,mse,mae,rmsle,rmmr\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.pair,
            r.train_key,
            r.test_key,
            r.predicted,
            r.actual,
            r.metrics.rmse,
            r.metrics.mse,
            r.metrics.mae,
            r.metrics.rmsle,
            r.metrics.rmmr
        ));
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    body.push('\n');
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::Io {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    std::fs::write(path, body).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let body = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&body).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: format!("invalid JSON: {e}"),
    })
}

/// Artifact locations under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub out_dir: PathBuf,
}

impl Layout {
    pub fn new(out_dir: &Path) -> Self {
        Layout {
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn series(&self) -> PathBuf {
        self.out_dir.join("series.json")
    }

    pub fn snapshots_dir(&self) -> PathBuf {
        self.out_dir.join("snapshots")
    }

    pub fn snapshot_manifest(&self, dir_name: &str) -> PathBuf {
        self.snapshots_dir().join(format!("{dir_name}.json"))
    }

    pub fn features_dir(&self) -> PathBuf {
        self.out_dir.join("features")
    }

    pub fn features(&self, dir_name: &str) -> PathBuf {
        self.features_dir().join(format!("{dir_name}.features.json"))
    }

    pub fn vectors(&self) -> PathBuf {
        self.out_dir.join("vectors.json")
    }

    pub fn times(&self) -> PathBuf {
        self.out_dir.join("times.csv")
    }

    pub fn predictions(&self) -> PathBuf {
        self.out_dir.join("predictions.json")
    }

    pub fn report(&self) -> PathBuf {
        self.out_dir.join("report.json")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.out_dir.join("report.csv")
    }

    pub fn timings(&self) -> PathBuf {
        self.out_dir.join("timings.json")
    }

    pub fn lock(&self) -> PathBuf {
        self.out_dir.join(".pace.lock")
    }
}
