//! Regression predictors and the two evaluation protocols.
//!
//! Rolling mode walks commit history: the newer commit of each consecutive
//! pair trains the model and the older one is predicted, so with a window
//! of 1 every record is a constant prediction of the training commit's test
//! time. Split mode is the file-level protocol: a seeded shuffle puts a
//! fraction of observations into training and evaluates on the rest.

mod knn;
mod ridge;

pub use knn::KnnModel;
pub use ridge::RidgeModel;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{compute_metrics, MetricSet, MetricsError};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("cannot fit on an empty training set")]
    EmptyTrainingSet,
    #[error("singular system: lambda is 0 and the design matrix is not full rank")]
    SingularSystem,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("window {window} leaves no test observations for {observations} observations")]
    WindowTooLarge { window: usize, observations: usize },
    #[error("protocol needs at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("dataset mode {actual:?} does not match the {expected:?} protocol")]
    InvalidMode {
        expected: DatasetMode,
        actual: DatasetMode,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("observation {key:?} has non-positive target {target}")]
    NonPositiveTarget { key: String, target: f64 },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetMode {
    Rolling,
    Split,
}

/// One labeled observation: a feature vector and its measured seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub key: String,
    pub features: Vec<f64>,
    pub target: f64,
}

/// An ordered set of observations sharing one feature dimension. Rolling
/// datasets are ordered by commit index (newest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub mode: DatasetMode,
    pub observations: Vec<Observation>,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(mode: DatasetMode, observations: Vec<Observation>) -> Result<Self, PredictError> {
        let feature_dim = observations
            .first()
            .map(|o| o.features.len())
            .unwrap_or(0);
        for obs in &observations {
            if obs.features.len() != feature_dim {
                return Err(PredictError::DimensionMismatch {
                    expected: feature_dim,
                    got: obs.features.len(),
                });
            }
            if !(obs.target > 0.0) {
                return Err(PredictError::NonPositiveTarget {
                    key: obs.key.clone(),
                    target: obs.target,
                });
            }
        }
        Ok(Dataset {
            mode,
            observations,
            feature_dim,
        })
    }

    pub fn rolling(observations: Vec<Observation>) -> Result<Self, PredictError> {
        Self::new(DatasetMode::Rolling, observations)
    }

    pub fn split(observations: Vec<Observation>) -> Result<Self, PredictError> {
        Self::new(DatasetMode::Split, observations)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Ridge predictions are clipped to this floor so RMSLE stays defined.
pub const DEFAULT_POSITIVE_FLOOR: f64 = 1e-6;
pub const DEFAULT_KNN_K: usize = 5;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;

/// Predictor configuration. kNN uses Euclidean distance with uniform
/// weights; ridge carries its L2 strength and positive prediction floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorSpec {
    Knn { k: usize },
    Ridge { lambda: f64, positive_floor: f64 },
}

impl PredictorSpec {
    pub fn knn(k: usize) -> Self {
        PredictorSpec::Knn { k }
    }

    pub fn ridge(lambda: f64) -> Self {
        PredictorSpec::Ridge {
            lambda,
            positive_floor: DEFAULT_POSITIVE_FLOOR,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PredictorSpec::Knn { .. } => "knn",
            PredictorSpec::Ridge { .. } => "ridge",
        }
    }
}

/// A fitted predictor; immutable, so concurrent prediction is safe.
#[derive(Debug, Clone)]
pub enum FittedPredictor {
    Knn(KnnModel),
    Ridge(RidgeModel),
}

/// Fits a predictor on the given observations.
pub fn fit(spec: &PredictorSpec, train: &[Observation]) -> Result<FittedPredictor, PredictError> {
    let features: Vec<Vec<f64>> = train.iter().map(|o| o.features.clone()).collect();
    let targets: Vec<f64> = train.iter().map(|o| o.target).collect();
    match *spec {
        PredictorSpec::Knn { k } => Ok(FittedPredictor::Knn(KnnModel::fit(
            k, &features, &targets,
        )?)),
        PredictorSpec::Ridge {
            lambda,
            positive_floor,
        } => Ok(FittedPredictor::Ridge(RidgeModel::fit(
            lambda,
            positive_floor,
            &features,
            &targets,
        )?)),
    }
}

impl FittedPredictor {
    pub fn predict(&self, features: &[f64]) -> Result<f64, PredictError> {
        match self {
            FittedPredictor::Knn(m) => m.predict(features),
            FittedPredictor::Ridge(m) => m.predict(features),
        }
    }
}

/// Wall-clock cost of one fit/predict cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordTiming {
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

/// One evaluated (train, test) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub train_key: String,
    pub test_key: String,
    pub predicted: f64,
    pub actual: f64,
    pub metrics: MetricSet,
    pub timing: RecordTiming,
}

impl PredictionRecord {
    pub fn rmmr(&self) -> f64 {
        self.metrics.rmmr
    }

    /// Short display label for delta and summary tables.
    pub fn pair_label(&self) -> String {
        format!("({},{})", shorten(&self.train_key), shorten(&self.test_key))
    }
}

fn shorten(key: &str) -> &str {
    if key.len() == 40 && key.bytes().all(|b| b.is_ascii_hexdigit()) {
        &key[..7]
    } else {
        key
    }
}

/// One rolling pair: the training window and the observation it predicts.
#[derive(Debug, Clone)]
pub struct RollingPair {
    pub train: Vec<Observation>,
    pub test: Observation,
}

/// Evaluates explicit (train window, test) pairs in order.
pub fn run_rolling_pairs(
    pairs: &[RollingPair],
    spec: &PredictorSpec,
) -> Result<Vec<PredictionRecord>, PredictError> {
    let mut records = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let fit_start = Instant::now();
        let model = fit(spec, &pair.train)?;
        let train_seconds = fit_start.elapsed().as_secs_f64();

        let predict_start = Instant::now();
        let predicted = model.predict(&pair.test.features)?;
        let predict_seconds = predict_start.elapsed().as_secs_f64();

        let metrics = compute_metrics(&[pair.test.target], &[predicted])?;
        let train_key = pair
            .train
            .iter()
            .map(|o| o.key.as_str())
            .collect::<Vec<_>>()
            .join("+");
        records.push(PredictionRecord {
            train_key,
            test_key: pair.test.key.clone(),
            predicted,
            actual: pair.test.target,
            metrics,
            timing: RecordTiming {
                train_seconds,
                predict_seconds,
            },
        });
    }
    Ok(records)
}

/// Rolls along commit history: observations i..i+window train, observation
/// i+window is predicted. N observations yield N-window records.
pub fn run_rolling(
    dataset: &Dataset,
    spec: &PredictorSpec,
    window: usize,
) -> Result<Vec<PredictionRecord>, PredictError> {
    if dataset.mode != DatasetMode::Rolling {
        return Err(PredictError::InvalidMode {
            expected: DatasetMode::Rolling,
            actual: dataset.mode,
        });
    }
    let n = dataset.len();
    if n < 2 {
        return Err(PredictError::TooFewObservations { needed: 2, got: n });
    }
    if window == 0 {
        return Err(PredictError::InvalidArgument(
            "window must be at least 1".to_string(),
        ));
    }
    if window >= n {
        return Err(PredictError::WindowTooLarge {
            window,
            observations: n,
        });
    }
    let pairs: Vec<RollingPair> = (0..n - window)
        .map(|i| RollingPair {
            train: dataset.observations[i..i + window].to_vec(),
            test: dataset.observations[i + window].clone(),
        })
        .collect();
    run_rolling_pairs(&pairs, spec)
}

/// Result of the split protocol: per-observation records plus metrics
/// aggregated over the whole test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub records: Vec<PredictionRecord>,
    pub aggregate: MetricSet,
    pub train_keys: Vec<String>,
    pub test_keys: Vec<String>,
}

/// Seeded 80/20-style shuffle split: fit once on the training side, predict
/// every held-out observation.
pub fn run_split(
    dataset: &Dataset,
    spec: &PredictorSpec,
    train_fraction: f64,
    seed: u64,
    standardize: bool,
) -> Result<SplitOutcome, PredictError> {
    if dataset.mode != DatasetMode::Split {
        return Err(PredictError::InvalidMode {
            expected: DatasetMode::Split,
            actual: dataset.mode,
        });
    }
    let n = dataset.len();
    if n < 5 {
        return Err(PredictError::TooFewObservations { needed: 5, got: n });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PredictError::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = ((n as f64 * train_fraction).floor() as usize).clamp(1, n - 1);
    let (train_idx, test_idx) = order.split_at(n_train);

    let mut train: Vec<Observation> = train_idx
        .iter()
        .map(|&i| dataset.observations[i].clone())
        .collect();
    let mut test: Vec<Observation> = test_idx
        .iter()
        .map(|&i| dataset.observations[i].clone())
        .collect();

    if standardize {
        let stats = FeatureStats::from(&train);
        for obs in train.iter_mut().chain(test.iter_mut()) {
            stats.apply(&mut obs.features);
        }
    }

    let fit_start = Instant::now();
    let model = fit(spec, &train)?;
    let train_seconds = fit_start.elapsed().as_secs_f64();

    let mut records = Vec::with_capacity(test.len());
    let mut actuals = Vec::with_capacity(test.len());
    let mut predictions = Vec::with_capacity(test.len());
    let train_label = format!("train[n={n_train}]");
    for obs in &test {
        let predict_start = Instant::now();
        let predicted = model.predict(&obs.features)?;
        let predict_seconds = predict_start.elapsed().as_secs_f64();
        let metrics = compute_metrics(&[obs.target], &[predicted])?;
        actuals.push(obs.target);
        predictions.push(predicted);
        records.push(PredictionRecord {
            train_key: train_label.clone(),
            test_key: obs.key.clone(),
            predicted,
            actual: obs.target,
            metrics,
            timing: RecordTiming {
                train_seconds,
                predict_seconds,
            },
        });
    }
    let aggregate = compute_metrics(&actuals, &predictions)?;
    Ok(SplitOutcome {
        records,
        aggregate,
        train_keys: train.iter().map(|o| o.key.clone()).collect(),
        test_keys: test.iter().map(|o| o.key.clone()).collect(),
    })
}

/// Per-dimension z-score parameters estimated on the training side only.
struct FeatureStats {
    means: Vec<f64>,
    deviations: Vec<f64>,
}

impl FeatureStats {
    fn from(train: &[Observation]) -> Self {
        let n = train.len() as f64;
        let dim = train.first().map(|o| o.features.len()).unwrap_or(0);
        let mut means = vec![0.0; dim];
        for obs in train {
            for (m, v) in means.iter_mut().zip(obs.features.iter()) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut deviations = vec![0.0; dim];
        for obs in train {
            for ((s, v), m) in deviations.iter_mut().zip(obs.features.iter()).zip(means.iter()) {
                let d = v - m;
                *s += d * d;
            }
        }
        for s in &mut deviations {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        FeatureStats { means, deviations }
    }

    fn apply(&self, features: &mut [f64]) {
        for ((v, m), s) in features
            .iter_mut()
            .zip(self.means.iter())
            .zip(self.deviations.iter())
        {
            *v = (*v - m) / s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(key: &str, features: &[f64], target: f64) -> Observation {
        Observation {
            key: key.to_string(),
            features: features.to_vec(),
            target,
        }
    }

    fn rolling_dataset(times: &[f64]) -> Dataset {
        let observations: Vec<Observation> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| obs(&format!("c{i}"), &[i as f64, (i * i) as f64], t))
            .collect();
        Dataset::rolling(observations).unwrap()
    }

    #[test]
    fn dataset_validates_targets_and_dims() {
        assert!(matches!(
            Dataset::rolling(vec![obs("a", &[1.0], 0.0)]),
            Err(PredictError::NonPositiveTarget { .. })
        ));
        assert!(matches!(
            Dataset::rolling(vec![obs("a", &[1.0], 1.0), obs("b", &[1.0, 2.0], 1.0)]),
            Err(PredictError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fit_on_empty_dataset_fails() {
        assert!(matches!(
            fit(&PredictorSpec::knn(5), &[]),
            Err(PredictError::EmptyTrainingSet)
        ));
        assert!(matches!(
            fit(&PredictorSpec::ridge(1.0), &[]),
            Err(PredictError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn five_commits_window_one_yield_four_records() {
        let ds = rolling_dataset(&[3.262, 3.042, 2.862, 2.842, 2.912]);
        let records = run_rolling(&ds, &PredictorSpec::knn(DEFAULT_KNN_K), 1).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].train_key, "c0");
        assert_eq!(records[0].test_key, "c1");
        assert_eq!(records[3].train_key, "c3");
        assert_eq!(records[3].test_key, "c4");
    }

    #[test]
    fn window_equal_to_length_is_too_large() {
        let ds = rolling_dataset(&[3.0, 2.0]);
        assert!(matches!(
            run_rolling(&ds, &PredictorSpec::knn(5), 2),
            Err(PredictError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn two_commit_constant_prediction_arithmetic() {
        let ds = rolling_dataset(&[3.0, 2.78]);
        for spec in [PredictorSpec::knn(5), PredictorSpec::ridge(1.0)] {
            let records = run_rolling(&ds, &spec, 1).unwrap();
            assert_eq!(records.len(), 1);
            let r = &records[0];
            assert_eq!(r.predicted, 3.0);
            let expected = 3.0 - 2.78;
            assert!((r.metrics.rmse - expected).abs() < 1e-12);
            assert!((r.metrics.mae - expected).abs() < 1e-12);
        }
    }

    // with a single training observation both predictors collapse to a
    // constant, so the four metrics obey exact identities
    #[test]
    fn constant_prediction_metric_identities() {
        let times = [3.262, 3.042, 2.862, 2.842, 2.912];
        let ds = rolling_dataset(&times);
        for spec in [PredictorSpec::knn(DEFAULT_KNN_K), PredictorSpec::ridge(1.0)] {
            let records = run_rolling(&ds, &spec, 1).unwrap();
            for (i, r) in records.iter().enumerate() {
                let train_time = times[i];
                let test_time = times[i + 1];
                assert_eq!(r.predicted, train_time);
                let diff = (test_time - train_time).abs();
                assert!((r.metrics.rmse - diff).abs() <= 1e-12);
                assert!((r.metrics.mae - diff).abs() <= 1e-12);
                assert!((r.metrics.mse - diff * diff).abs() <= 1e-12);
                let log_ratio = (test_time / train_time).ln().abs();
                assert!((r.metrics.rmsle - log_ratio).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rolling_rejects_split_dataset() {
        let observations = (0..5)
            .map(|i| obs(&format!("f{i}"), &[i as f64], 1.0 + i as f64))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        assert!(matches!(
            run_rolling(&ds, &PredictorSpec::knn(1), 1),
            Err(PredictError::InvalidMode { .. })
        ));
    }

    #[test]
    fn split_8_2_partition() {
        let observations = (0..10)
            .map(|i| obs(&format!("f{i}"), &[i as f64], 1.0 + i as f64))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        let out = run_split(&ds, &PredictorSpec::knn(3), 0.8, 42, false).unwrap();
        assert_eq!(out.train_keys.len(), 8);
        assert_eq!(out.test_keys.len(), 2);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let observations: Vec<Observation> = (0..12)
            .map(|i| obs(&format!("f{i}"), &[i as f64, (i % 3) as f64], 1.0 + i as f64))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        let a = run_split(&ds, &PredictorSpec::knn(3), 0.8, 7, false).unwrap();
        let b = run_split(&ds, &PredictorSpec::knn(3), 0.8, 7, false).unwrap();
        assert_eq!(a.test_keys, b.test_keys);
        assert_eq!(a.aggregate, b.aggregate);
        let c = run_split(&ds, &PredictorSpec::knn(3), 0.8, 8, false).unwrap();
        assert!(a.test_keys != c.test_keys || a.train_keys != c.train_keys);
    }

    #[test]
    fn split_identical_targets_give_zero_error() {
        let observations = (0..10)
            .map(|i| obs(&format!("f{i}"), &[i as f64], 2.5))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        let out = run_split(&ds, &PredictorSpec::knn(3), 0.8, 1, false).unwrap();
        assert_eq!(out.aggregate.rmse, 0.0);
        assert_eq!(out.aggregate.rmmr, 0.0);
    }

    #[test]
    fn split_noiseless_linear_data_is_recovered_by_ridge() {
        let observations: Vec<Observation> = (0..20)
            .map(|i| obs(&format!("f{i}"), &[i as f64], 2.0 * i as f64 + 5.0))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        let out = run_split(&ds, &PredictorSpec::ridge(0.0), 0.8, 3, false).unwrap();
        assert!(out.aggregate.mse < 1e-9, "mse = {}", out.aggregate.mse);
    }

    #[test]
    fn split_too_few_observations() {
        let observations = (0..4)
            .map(|i| obs(&format!("f{i}"), &[i as f64], 1.0))
            .collect();
        let ds = Dataset::split(observations).unwrap();
        assert!(matches!(
            run_split(&ds, &PredictorSpec::knn(1), 0.8, 1, false),
            Err(PredictError::TooFewObservations { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn ridge_predictions_survive_training_permutation() {
        let base = vec![
            obs("a", &[1.0, 2.0], 2.0),
            obs("b", &[3.0, 1.0], 3.0),
            obs("c", &[0.5, 4.0], 4.0),
            obs("d", &[2.0, 2.0], 5.0),
        ];
        let mut shuffled = base.clone();
        shuffled.swap(0, 3);
        shuffled.swap(1, 2);
        let spec = PredictorSpec::ridge(0.5);
        let m1 = fit(&spec, &base).unwrap();
        let m2 = fit(&spec, &shuffled).unwrap();
        for q in [[1.0, 1.0], [4.0, 0.0], [-2.0, 7.5]] {
            let a = m1.predict(&q).unwrap();
            let b = m2.predict(&q).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_predictions_survive_training_permutation_without_ties() {
        let base = vec![
            obs("a", &[1.0], 2.0),
            obs("b", &[5.0], 3.0),
            obs("c", &[9.0], 4.0),
        ];
        let mut shuffled = base.clone();
        shuffled.rotate_left(1);
        let spec = PredictorSpec::knn(2);
        let m1 = fit(&spec, &base).unwrap();
        let m2 = fit(&spec, &shuffled).unwrap();
        for q in [[0.0], [4.9], [100.0]] {
            assert_eq!(m1.predict(&q).unwrap(), m2.predict(&q).unwrap());
        }
    }

    #[test]
    fn standardization_is_computed_on_train_side_only() {
        let train = vec![
            obs("a", &[0.0, 10.0], 1.0),
            obs("b", &[2.0, 30.0], 2.0),
            obs("c", &[4.0, 50.0], 3.0),
        ];
        let stats = FeatureStats::from(&train);
        let mut probe = vec![2.0, 30.0];
        stats.apply(&mut probe);
        // train means are (2, 30), so the center maps to the origin
        assert!(probe.iter().all(|&v| v.abs() < 1e-12));
        // a constant dimension gets unit deviation instead of dividing by zero
        let constant = vec![obs("a", &[7.0], 1.0), obs("b", &[7.0], 2.0)];
        let stats = FeatureStats::from(&constant);
        let mut v = vec![9.0];
        stats.apply(&mut v);
        assert_eq!(v[0], 2.0);
    }
}
