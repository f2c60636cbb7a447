//! Numeric representations of feature counts.
//!
//! Two encodings are produced per snapshot: the statistical form applies
//! `fe(count, corpus_chars) = -log10(count / corpus_chars)` to each of the
//! 42 taxonomy counts, and the neural form embeds the matched-token
//! sequence with a trained skip-gram model, truncated or zero-padded to 64
//! rows of 32 dimensions.
//!
//! `fe` is undefined at count 0 (log of zero); absent features are encoded
//! as 0.0 by convention. That merges the "absent" and "ubiquitous"
//! boundaries: a count equal to the corpus size also yields 0.0.

mod embedding;

pub use embedding::{train_embeddings, EmbeddingModel, Hyperparameters};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cstyle::{FeatureCounts, FeatureTaxonomy, TYPE_COUNT};

/// Fixed row count of the neural block.
pub const SEQUENCE_LENGTH: usize = 64;
/// Fixed embedding width.
pub const EMBEDDING_DIM: usize = 32;
/// Row-major size of the flattened neural block.
pub const NR_FLAT_LEN: usize = SEQUENCE_LENGTH * EMBEDDING_DIM;

#[derive(Debug, Error)]
pub enum RepresentError {
    #[error("corpus has zero characters; the transform is undefined")]
    InvalidCorpus,
    #[error("count {count} exceeds corpus size {corpus_chars}")]
    CountExceedsCorpus { count: u64, corpus_chars: u64 },
    #[error("no non-empty training sequences")]
    EmptyTrainingSet,
    #[error("token {token:?} is not in the embedding vocabulary")]
    OutOfVocabulary { token: String },
}

/// The transformation `-log10(count / corpus_chars)`, with `fe(0, _) = 0`.
pub fn fe(count: u64, corpus_chars: u64) -> Result<f64, RepresentError> {
    if corpus_chars == 0 {
        return Err(RepresentError::InvalidCorpus);
    }
    if count > corpus_chars {
        return Err(RepresentError::CountExceedsCorpus {
            count,
            corpus_chars,
        });
    }
    if count == 0 {
        return Ok(0.0);
    }
    let value = -((count as f64 / corpus_chars as f64).log10());
    // ratio 1 gives -log10(1) = -0.0; normalize the sign
    Ok(if value == 0.0 { 0.0 } else { value })
}

/// Statistical representation: one `fe` value per taxonomy type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrVector {
    pub key: String,
    /// 42 values in taxonomy order.
    pub values: Vec<f64>,
}

/// Applies `fe` to every taxonomy count in taxonomy order.
pub fn represent_sr(counts: &FeatureCounts) -> Result<SrVector, RepresentError> {
    let mut values = Vec::with_capacity(TYPE_COUNT);
    for name in FeatureTaxonomy::type_names() {
        values.push(fe(counts.count_of(name), counts.corpus_chars)?);
    }
    Ok(SrVector {
        key: counts.key.clone(),
        values,
    })
}

/// How the 64x32 block becomes one regression input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NrAggregation {
    /// Row-major flattening to 2048 values (the default; preserves order).
    Flatten,
    /// Mean over the occupied rows, 32 values.
    MeanPool,
}

/// Neural representation: the embedded token block and its flattened form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrVector {
    pub key: String,
    /// 64 rows of 32 values; rows past the sequence length are zero.
    pub block: Vec<Vec<f64>>,
    /// The regression input derived from `block` per the aggregation.
    pub flat: Vec<f64>,
}

/// Embeds the first 64 tokens of the sequence, zero-padding short sequences.
pub fn represent_nr(
    counts: &FeatureCounts,
    model: &EmbeddingModel,
    aggregation: NrAggregation,
) -> Result<NrVector, RepresentError> {
    let mut block = vec![vec![0.0; EMBEDDING_DIM]; SEQUENCE_LENGTH];
    let occupied = counts.token_sequence.len().min(SEQUENCE_LENGTH);
    for (row, token) in counts.token_sequence.iter().take(SEQUENCE_LENGTH).enumerate() {
        let vector = model
            .vector_of(token)
            .ok_or_else(|| RepresentError::OutOfVocabulary {
                token: token.clone(),
            })?;
        block[row].copy_from_slice(vector);
    }

    let flat = match aggregation {
        NrAggregation::Flatten => block.iter().flatten().copied().collect(),
        NrAggregation::MeanPool => {
            let mut mean = vec![0.0; EMBEDDING_DIM];
            if occupied > 0 {
                for row in block.iter().take(occupied) {
                    for (d, v) in row.iter().enumerate() {
                        mean[d] += v;
                    }
                }
                for v in &mut mean {
                    *v /= occupied as f64;
                }
            }
            mean
        }
    };

    Ok(NrVector {
        key: counts.key.clone(),
        block,
        flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn counts_with(per_type: &[(&str, u64)], corpus_chars: u64, seq: &[&str]) -> FeatureCounts {
        let mut map: IndexMap<String, u64> = FeatureTaxonomy::type_names()
            .map(|n| (n.to_string(), 0))
            .collect();
        for (name, c) in per_type {
            map.insert(name.to_string(), *c);
        }
        FeatureCounts {
            key: "k".to_string(),
            per_type: map,
            corpus_chars,
            token_sequence: seq.iter().map(|s| s.to_string()).collect(),
            skipped_files: Vec::new(),
        }
    }

    #[test]
    fn fe_known_values() {
        assert_eq!(fe(10, 1000).unwrap(), 2.0);
        assert_eq!(fe(0, 500).unwrap(), 0.0);
        assert_eq!(fe(1000, 1000).unwrap(), 0.0);
        assert!(fe(1000, 1000).unwrap().is_sign_positive());
        assert_eq!(fe(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn fe_guards() {
        assert!(matches!(fe(1, 0), Err(RepresentError::InvalidCorpus)));
        assert!(matches!(
            fe(11, 10),
            Err(RepresentError::CountExceedsCorpus { .. })
        ));
    }

    #[test]
    fn sr_zero_counts_give_zero_vector() {
        let counts = counts_with(&[], 100, &[]);
        let sr = represent_sr(&counts).unwrap();
        assert_eq!(sr.values.len(), TYPE_COUNT);
        assert!(sr.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sr_places_value_at_taxonomy_position() {
        let counts = counts_with(&[("IfStatement", 10)], 1000, &[]);
        let sr = represent_sr(&counts).unwrap();
        let if_pos = FeatureTaxonomy::type_index("IfStatement").unwrap();
        assert_eq!(sr.values[if_pos], 2.0);
        assert!(sr
            .values
            .iter()
            .enumerate()
            .all(|(i, &v)| i == if_pos || v == 0.0));
    }

    #[test]
    fn sr_rejects_empty_corpus() {
        let counts = counts_with(&[], 0, &[]);
        assert!(matches!(
            represent_sr(&counts),
            Err(RepresentError::InvalidCorpus)
        ));
    }

    #[test]
    fn nr_empty_sequence_is_all_zero() {
        let model = train_embeddings(&[vec!["A".to_string()]], 1, &Hyperparameters::default())
            .unwrap();
        let counts = counts_with(&[], 10, &[]);
        let nr = represent_nr(&counts, &model, NrAggregation::Flatten).unwrap();
        assert_eq!(nr.block.len(), SEQUENCE_LENGTH);
        assert_eq!(nr.flat.len(), NR_FLAT_LEN);
        assert!(nr.flat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nr_truncates_to_64_rows() {
        let tokens: Vec<String> = (0..100).map(|i| format!("T{}", i % 3)).collect();
        let model = train_embeddings(&[tokens.clone()], 1, &Hyperparameters::default()).unwrap();
        let refs: Vec<&str> = tokens.iter().map(|s| s.as_str()).collect();
        let counts = counts_with(&[], 10, &refs);
        let nr = represent_nr(&counts, &model, NrAggregation::Flatten).unwrap();
        assert_eq!(nr.block.len(), SEQUENCE_LENGTH);
        // row 63 is the embedding of token 63, not zero padding
        assert!(nr.block[63].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn nr_rows_match_model_vectors_and_pad_with_zeros() {
        let seq = vec!["A".to_string(), "B".to_string(), "A".to_string()];
        let model = train_embeddings(&[seq.clone()], 9, &Hyperparameters::default()).unwrap();
        let counts = counts_with(&[], 10, &["A", "B", "A"]);
        let nr = represent_nr(&counts, &model, NrAggregation::Flatten).unwrap();
        assert_eq!(nr.block[0], model.vector_of("A").unwrap());
        assert_eq!(nr.block[1], model.vector_of("B").unwrap());
        assert_eq!(nr.block[2], model.vector_of("A").unwrap());
        for row in 3..SEQUENCE_LENGTH {
            assert!(nr.block[row].iter().all(|&v| v == 0.0));
        }
        // flat is the row-major flattening of block
        assert_eq!(nr.flat[0..EMBEDDING_DIM], nr.block[0][..]);
        assert_eq!(
            nr.flat[EMBEDDING_DIM..2 * EMBEDDING_DIM],
            nr.block[1][..]
        );
    }

    #[test]
    fn nr_out_of_vocabulary_errors() {
        let model = train_embeddings(&[vec!["A".to_string()]], 1, &Hyperparameters::default())
            .unwrap();
        let counts = counts_with(&[], 10, &["B"]);
        assert!(matches!(
            represent_nr(&counts, &model, NrAggregation::Flatten),
            Err(RepresentError::OutOfVocabulary { .. })
        ));
    }

    #[test]
    fn mean_pool_averages_occupied_rows() {
        let seq = vec!["A".to_string(), "B".to_string()];
        let model = train_embeddings(&[seq], 3, &Hyperparameters::default()).unwrap();
        let counts = counts_with(&[], 10, &["A", "B"]);
        let nr = represent_nr(&counts, &model, NrAggregation::MeanPool).unwrap();
        assert_eq!(nr.flat.len(), EMBEDDING_DIM);
        let a = model.vector_of("A").unwrap();
        let b = model.vector_of("B").unwrap();
        for d in 0..EMBEDDING_DIM {
            assert!((nr.flat[d] - (a[d] + b[d]) / 2.0).abs() < 1e-15);
        }
    }
}
