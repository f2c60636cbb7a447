//! Regression error metrics and per-pair impact reporting.
//!
//! Four error measures are computed over each (actual, predicted) sample:
//! RMSE, MSE, MAE and RMSLE, plus their arithmetic mean (`rmmr`). MSE uses
//! the mean (1/n) convention so that `rmse * rmse == mse` holds as an
//! identity. RMSLE is the natural-log form with no +1 offset, which is why
//! every input value must be strictly positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("actual and predicted lengths differ: {actual} vs {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("metrics require at least one observation")]
    EmptyInput,
    #[error("non-positive value {value} at index {index}; RMSLE requires strictly positive inputs")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("delta impacts require at least two prediction records, got {0}")]
    TooFewRecords(usize),
    #[error("summary requires at least one prediction record")]
    NoRecords,
}

/// The four error measures for one prediction pair plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mse: f64,
    pub mae: f64,
    pub rmsle: f64,
    /// Arithmetic mean of the four values above.
    pub rmmr: f64,
}

impl MetricSet {
    /// A set whose four metrics all equal `value` (so `rmmr == value` too).
    pub fn uniform(value: f64) -> Self {
        MetricSet {
            rmse: value,
            mse: value,
            mae: value,
            rmsle: value,
            rmmr: value,
        }
    }
}

/// Computes RMSE, MSE, MAE and RMSLE between `actual` and `predicted`.
///
/// Both slices must have the same nonzero length and contain only strictly
/// positive values.
pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricSet, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    for (index, &value) in actual.iter().chain(predicted.iter()).enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(MetricsError::NonPositiveValue {
                index: index % actual.len(),
                value,
            });
        }
    }

    let n = actual.len() as f64;
    let mut sq_sum = 0.0;
    let mut abs_sum = 0.0;
    let mut log_sq_sum = 0.0;
    for (&a, &p) in actual.iter().zip(predicted.iter()) {
        let diff = a - p;
        sq_sum += diff * diff;
        abs_sum += diff.abs();
        let log_diff = a.ln() - p.ln();
        log_sq_sum += log_diff * log_diff;
    }

    let mse = sq_sum / n;
    let rmse = mse.sqrt();
    let mae = abs_sum / n;
    let rmsle = (log_sq_sum / n).sqrt();
    let rmmr = (rmse + mse + mae + rmsle) / 4.0;
    Ok(MetricSet {
        rmse,
        mse,
        mae,
        rmsle,
        rmmr,
    })
}

/// Whether a later prediction pair improved on the one before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactSign {
    Positive,
    Negative,
}

/// Error-rate delta between two consecutive prediction pairs.
///
/// `delta = rmmr(earlier) - rmmr(later)`. The sign is positive if and only
/// if the later pair's error is strictly smaller; a zero delta counts as
/// negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaImpact {
    pub earlier_pair: String,
    pub later_pair: String,
    pub delta: f64,
    pub sign: ImpactSign,
}

/// Computes the N-1 consecutive deltas over N labeled rmmr values, given in
/// rolling order (newest pair first).
pub fn delta_impacts(labeled_rmmr: &[(String, f64)]) -> Result<Vec<DeltaImpact>, MetricsError> {
    if labeled_rmmr.len() < 2 {
        return Err(MetricsError::TooFewRecords(labeled_rmmr.len()));
    }
    Ok(labeled_rmmr
        .windows(2)
        .map(|w| {
            let delta = w[0].1 - w[1].1;
            DeltaImpact {
                earlier_pair: w[0].0.clone(),
                later_pair: w[1].0.clone(),
                delta,
                sign: if delta > 0.0 {
                    ImpactSign::Positive
                } else {
                    ImpactSign::Negative
                },
            }
        })
        .collect())
}

/// Per-pair table plus column means, mirroring a per-commit results table
/// with its trailing average row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pairs: Vec<(String, MetricSet)>,
    pub mean_rmse: f64,
    pub mean_mse: f64,
    pub mean_mae: f64,
    pub mean_rmsle: f64,
    /// Mean of the per-pair rmmr values (the grand average).
    pub overall_rmmr: f64,
}

/// Aggregates labeled per-pair metric sets into column means and the grand
/// rmmr average.
pub fn summarize(pairs: &[(String, MetricSet)]) -> Result<Summary, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let n = pairs.len() as f64;
    let mean = |f: fn(&MetricSet) -> f64| pairs.iter().map(|(_, m)| f(m)).sum::<f64>() / n;
    Ok(Summary {
        pairs: pairs.to_vec(),
        mean_rmse: mean(|m| m.rmse),
        mean_mse: mean(|m| m.mse),
        mean_mae: mean(|m| m.mae),
        mean_rmsle: mean(|m| m.rmsle),
        overall_rmmr: mean(|m| m.rmmr),
    })
}
