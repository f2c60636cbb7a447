//! k-nearest-neighbors regression: Euclidean distance, uniform weights,
//! distance ties broken by lower training index.

use super::PredictError;

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn fit(k: usize, features: &[Vec<f64>], targets: &[f64]) -> Result<Self, PredictError> {
        if features.is_empty() {
            return Err(PredictError::EmptyTrainingSet);
        }
        Ok(KnnModel {
            k,
            features: features.to_vec(),
            targets: targets.to_vec(),
        })
    }

    /// k clamped to the training-set size.
    pub fn effective_k(&self) -> usize {
        self.k.min(self.features.len()).max(1)
    }

    pub fn predict(&self, query: &[f64]) -> Result<f64, PredictError> {
        let dim = self.features[0].len();
        if query.len() != dim {
            return Err(PredictError::DimensionMismatch {
                expected: dim,
                got: query.len(),
            });
        }
        let mut ranked: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(row, query), i))
            .collect();
        ranked.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let k = self.effective_k();
        let sum: f64 = ranked[..k].iter().map(|&(_, i)| self.targets[i]).sum();
        Ok(sum / k as f64)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation_clamps_k() {
        let m = KnnModel::fit(5, &[vec![1.0, 2.0]], &[3.5]).unwrap();
        assert_eq!(m.effective_k(), 1);
        assert_eq!(m.predict(&[100.0, -4.0]).unwrap(), 3.5);
    }

    #[test]
    fn nearest_neighbor_wins_with_k1() {
        let m = KnnModel::fit(1, &[vec![0.0, 0.0], vec![1.0, 1.0]], &[1.0, 3.0]).unwrap();
        assert_eq!(m.predict(&[0.1, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn k2_averages_both_targets() {
        let m = KnnModel::fit(2, &[vec![0.0, 0.0], vec![1.0, 1.0]], &[1.0, 3.0]).unwrap();
        assert_eq!(m.predict(&[0.1, 0.0]).unwrap(), 2.0);
        assert_eq!(m.predict(&[50.0, 50.0]).unwrap(), 2.0);
    }

    #[test]
    fn exact_match_returns_its_target() {
        let m = KnnModel::fit(
            1,
            &[vec![2.0, 3.0], vec![5.0, 1.0], vec![0.5, 0.5]],
            &[10.0, 20.0, 30.0],
        )
        .unwrap();
        assert_eq!(m.predict(&[5.0, 1.0]).unwrap(), 20.0);
    }

    #[test]
    fn distance_ties_take_lower_index() {
        // both training points are equidistant from the query
        let m = KnnModel::fit(1, &[vec![1.0], vec![-1.0]], &[7.0, 9.0]).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 7.0);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(matches!(
            KnnModel::fit(3, &[], &[]),
            Err(PredictError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = KnnModel::fit(1, &[vec![0.0, 0.0]], &[1.0]).unwrap();
        assert!(matches!(
            m.predict(&[1.0]),
            Err(PredictError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }
}
