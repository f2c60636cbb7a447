//! Seeded skip-gram negative-sampling embedding trainer.
//!
//! The vocabulary here is tiny (at most the 42 taxonomy type names), so the
//! trainer favors exact reproducibility over throughput: a single ChaCha
//! stream drives vector initialization, window shrinking and negative
//! sampling in a fixed consumption order, making the trained matrix a pure
//! function of (sequences, seed, hyperparameters).

use indexmap::IndexMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::RepresentError;

/// Skip-gram training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negative_samples: usize,
    pub learning_rate: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            dim: 32,
            window: 5,
            epochs: 5,
            negative_samples: 5,
            learning_rate: 0.025,
        }
    }
}

const MIN_LEARNING_RATE: f64 = 1e-4;
// unigram distribution is raised to this power for negative sampling
const NEGATIVE_SAMPLING_POWER: f64 = 0.75;

/// A trained token-embedding model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    /// Token to row index, ordered by descending frequency then token name.
    pub vocabulary: IndexMap<String, usize>,
    /// One `dim`-sized row per vocabulary entry.
    pub vectors: Vec<Vec<f64>>,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
}

impl EmbeddingModel {
    pub fn vector_of(&self, token: &str) -> Option<&[f64]> {
        self.vocabulary
            .get(token)
            .map(|&idx| self.vectors[idx].as_slice())
    }
}

/// Trains skip-gram-with-negative-sampling embeddings over token sequences.
pub fn train_embeddings(
    sequences: &[Vec<String>],
    seed: u64,
    hp: &Hyperparameters,
) -> Result<EmbeddingModel, RepresentError> {
    let total_tokens: usize = sequences.iter().map(|s| s.len()).sum();
    if total_tokens == 0 {
        return Err(RepresentError::EmptyTrainingSet);
    }

    // vocabulary ordered by frequency desc, then token asc
    let mut freq: IndexMap<String, u64> = IndexMap::new();
    for seq in sequences {
        for tok in seq {
            *freq.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = freq.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let vocabulary: IndexMap<String, usize> = entries
        .iter()
        .enumerate()
        .map(|(i, (tok, _))| (tok.clone(), i))
        .collect();
    let vocab_size = vocabulary.len();

    let encoded: Vec<Vec<usize>> = sequences
        .iter()
        .map(|seq| seq.iter().map(|t| vocabulary[t]).collect())
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // input vectors uniform in [-0.5/dim, 0.5/dim), output vectors zero
    let mut input: Vec<Vec<f64>> = (0..vocab_size)
        .map(|_| {
            (0..hp.dim)
                .map(|_| (rng.random::<f64>() - 0.5) / hp.dim as f64)
                .collect()
        })
        .collect();
    let mut output: Vec<Vec<f64>> = vec![vec![0.0; hp.dim]; vocab_size];

    // cumulative weights of freq^0.75 for negative sampling
    let weights: Vec<f64> = entries
        .iter()
        .map(|(_, f)| (*f as f64).powf(NEGATIVE_SAMPLING_POWER))
        .collect();
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let weight_total = *cumulative.last().expect("non-empty vocabulary");

    let scheduled = (total_tokens * hp.epochs) as f64;
    let mut processed = 0usize;

    for _epoch in 0..hp.epochs {
        for seq in &encoded {
            for (pos, &center) in seq.iter().enumerate() {
                let alpha = (hp.learning_rate * (1.0 - processed as f64 / (scheduled + 1.0)))
                    .max(MIN_LEARNING_RATE);
                processed += 1;

                let shrink = rng.random_range(0..hp.window);
                let span = hp.window - shrink;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(seq.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = seq[ctx_pos];
                    train_pair(
                        &mut input,
                        &mut output,
                        context,
                        center,
                        alpha,
                        hp,
                        &cumulative,
                        weight_total,
                        &mut rng,
                    );
                }
            }
        }
    }

    Ok(EmbeddingModel {
        vocabulary,
        vectors: input,
        seed,
        hyperparameters: hp.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn train_pair(
    input: &mut [Vec<f64>],
    output: &mut [Vec<f64>],
    context: usize,
    center: usize,
    alpha: f64,
    hp: &Hyperparameters,
    cumulative: &[f64],
    weight_total: f64,
    rng: &mut ChaCha20Rng,
) {
    let dim = hp.dim;
    let mut accum = vec![0.0; dim];
    for k in 0..=hp.negative_samples {
        let (target, label) = if k == 0 {
            (center, 1.0)
        } else {
            let draw: f64 = rng.random::<f64>() * weight_total;
            let sampled = cumulative.partition_point(|&c| c < draw).min(cumulative.len() - 1);
            if sampled == center {
                continue;
            }
            (sampled, 0.0)
        };
        let dot: f64 = input[context]
            .iter()
            .zip(output[target].iter())
            .map(|(a, b)| a * b)
            .sum();
        let gradient = (label - sigmoid(dot)) * alpha;
        for d in 0..dim {
            accum[d] += gradient * output[target][d];
            output[target][d] += gradient * input[context][d];
        }
    }
    for d in 0..dim {
        input[context][d] += accum[d];
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}
