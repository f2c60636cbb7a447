//! Microbenchmark ingestion: functional-test execution times from
//! Surefire-style XML reports or from CSV, and the join against feature
//! vectors that produces a labeled dataset.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predict::{Dataset, DatasetMode, Observation, PredictError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no XML reports found in {dir}")]
    NoReportsFound { dir: PathBuf },
    #[error("malformed report {path}: {reason}")]
    MalformedReport { path: PathBuf, reason: String },
    #[error("malformed CSV row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("non-positive time {value} at line {line}")]
    NonPositiveTime { line: usize, value: f64 },
    #[error("no benchmark for key {key:?}")]
    MissingTarget { key: String },
    #[error("more than one benchmark for key {key:?}")]
    DuplicateTarget { key: String },
    #[error("seconds value {0} cannot be written with 6 fractional digits")]
    UnrepresentableSeconds(f64),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] PredictError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchSource {
    SurefireXml,
    Csv,
}

/// One execution-time target: commit hash in rolling mode, file path in
/// split mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microbenchmark {
    pub key: String,
    pub seconds: f64,
    pub source: BenchSource,
}

/// Total suite time of one report directory plus the per-report breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurefireTotal {
    pub total_seconds: f64,
    /// report file name -> root test-suite time
    pub per_suite: IndexMap<String, f64>,
}

/// How per-suite times combine into the commit-level target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteAggregation {
    Sum,
    Mean,
    Max,
}

impl SurefireTotal {
    pub fn aggregate(&self, how: SuiteAggregation) -> f64 {
        let n = self.per_suite.len().max(1) as f64;
        match how {
            SuiteAggregation::Sum => self.total_seconds,
            SuiteAggregation::Mean => self.total_seconds / n,
            SuiteAggregation::Max => self
                .per_suite
                .values()
                .copied()
                .fold(0.0f64, f64::max),
        }
    }
}

/// Reads the root test-suite `time` attribute from every `.xml` report in
/// `dir` (sorted by file name) and sums them.
pub fn parse_surefire_dir(dir: &Path) -> Result<SurefireTotal, BenchError> {
    let mut reports = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "xml") && path.is_file() {
            reports.push(path);
        }
    }
    if reports.is_empty() {
        return Err(BenchError::NoReportsFound {
            dir: dir.to_path_buf(),
        });
    }
    reports.sort();

    let mut per_suite = IndexMap::new();
    let mut total = 0.0;
    for path in reports {
        let seconds = parse_surefire_report(&path)?;
        total += seconds;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        per_suite.insert(name, seconds);
    }
    Ok(SurefireTotal {
        total_seconds: total,
        per_suite,
    })
}

/// Extracts the `time` attribute of the root element. The value is a plain
/// decimal with a dot separator regardless of locale.
fn parse_surefire_report(path: &Path) -> Result<f64, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |reason: &str| BenchError::MalformedReport {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    let mut reader = Reader::from_str(&text);
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => {
                for attr in e.attributes() {
                    let attr = attr.map_err(|e| malformed(&e.to_string()))?;
                    if attr.key.as_ref() == b"time" {
                        let raw = attr
                            .unescape_value()
                            .map_err(|e| malformed(&e.to_string()))?;
                        return raw
                            .trim()
                            .parse::<f64>()
                            .map_err(|_| malformed(&format!("unparsable time {raw:?}")));
                    }
                }
                return Err(malformed("root element has no time attribute"));
            }
            Ok(Event::Eof) => return Err(malformed("no root element")),
            Err(e) => return Err(malformed(&e.to_string())),
            _ => continue,
        }
    }
}

/// Parses a `key,seconds` CSV file into benchmarks. Rejects non-positive or
/// non-numeric times, identifying the offending line.
pub fn parse_times_csv(path: &Path) -> Result<Vec<Microbenchmark>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_times_csv_text(&text)
}

pub fn parse_times_csv_text(text: &str) -> Result<Vec<Microbenchmark>, BenchError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == "key,seconds" => {}
        Some((_, header)) => {
            return Err(BenchError::MalformedRow {
                line: 1,
                reason: format!("expected header \"key,seconds\", got {header:?}"),
            })
        }
        None => {
            return Err(BenchError::MalformedRow {
                line: 1,
                reason: "empty file".to_string(),
            })
        }
    }

    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let (key, seconds) = row.split_once(',').ok_or_else(|| BenchError::MalformedRow {
            line,
            reason: "missing comma".to_string(),
        })?;
        if key.is_empty() {
            return Err(BenchError::MalformedRow {
                line,
                reason: "empty key".to_string(),
            });
        }
        let value: f64 = seconds.parse().map_err(|_| BenchError::MalformedRow {
            line,
            reason: format!("unparsable seconds {seconds:?}"),
        })?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(BenchError::NonPositiveTime { line, value });
        }
        out.push(Microbenchmark {
            key: key.to_string(),
            seconds: value,
            source: BenchSource::Csv,
        });
    }
    Ok(out)
}

/// Renders benchmarks in the interchange CSV form: `key,seconds` header,
/// LF endings, seconds with up to six fractional digits, dot separator.
pub fn write_times_csv(benchmarks: &[Microbenchmark]) -> Result<String, BenchError> {
    let mut out = String::from("key,seconds\n");
    for b in benchmarks {
        out.push_str(&b.key);
        out.push(',');
        out.push_str(&format_seconds(b.seconds)?);
        out.push('\n');
    }
    Ok(out)
}

fn format_seconds(seconds: f64) -> Result<String, BenchError> {
    let s = format!("{seconds:.6}");
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    if trimmed.parse::<f64>().map(|v| v > 0.0) != Ok(true) {
        return Err(BenchError::UnrepresentableSeconds(seconds));
    }
    Ok(trimmed.to_string())
}

/// A feature vector reduced to what the join needs: its key and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedVector {
    pub key: String,
    pub features: Vec<f64>,
}

/// Indexes benchmarks by key, rejecting duplicates.
pub fn seconds_by_key(
    benchmarks: &[Microbenchmark],
) -> Result<IndexMap<String, f64>, BenchError> {
    let mut by_key = IndexMap::new();
    for b in benchmarks {
        if by_key.insert(b.key.clone(), b.seconds).is_some() {
            return Err(BenchError::DuplicateTarget { key: b.key.clone() });
        }
    }
    Ok(by_key)
}

/// Joins vectors to their benchmarks, preserving vector order. Every vector
/// key must have exactly one benchmark.
pub fn join_targets(
    vectors: &[KeyedVector],
    benchmarks: &[Microbenchmark],
    mode: DatasetMode,
) -> Result<Dataset, BenchError> {
    let by_key = seconds_by_key(benchmarks)?;
    let mut observations = Vec::with_capacity(vectors.len());
    for v in vectors {
        let &seconds = by_key
            .get(v.key.as_str())
            .ok_or_else(|| BenchError::MissingTarget { key: v.key.clone() })?;
        observations.push(Observation {
            key: v.key.clone(),
            features: v.features.clone(),
            target: seconds,
        });
    }
    Ok(Dataset::new(mode, observations)?)
}
