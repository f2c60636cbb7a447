//! Golden-corpus feature counts.
//!
//! The fixtures under `tests/golden/src` were counted with an independent
//! parser (see `tools/golden-oracle`) and the resulting dumps are frozen
//! under `tests/golden/oracle`. Selection must reproduce every dump
//! byte-for-byte through the same canonical JSON rendering.

use std::path::{Path, PathBuf};

use pace_core::cstyle::{
    class_totals, select_features, select_features_source, FeatureTaxonomy, ParsePolicy,
};
use pace_core::snapshot::{CommitRef, CommitSnapshot};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn fixtures() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(golden_dir().join("src"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".java"))
        .collect();
    names.sort();
    names
}

fn canonical(per_type: &indexmap::IndexMap<String, u64>) -> String {
    let mut body = serde_json::to_string_pretty(per_type).unwrap();
    body.push('\n');
    body
}

fn oracle_bytes(name: &str) -> String {
    let path = golden_dir().join("oracle").join(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing oracle dump {}: {e}", path.display()))
}

#[test]
fn corpus_has_at_least_ten_files_covering_all_classes() {
    let names = fixtures();
    assert!(
        names.len() >= 10,
        "golden corpus must hold at least 10 fixtures, found {}",
        names.len()
    );
    let snapshot = corpus_snapshot(&names);
    let (counts, _) =
        select_features(&snapshot, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap();
    let totals = class_totals(&counts);
    for (class, total) in &totals {
        assert!(*total > 0, "class {class} has no occurrences in the corpus");
    }
}

#[test]
fn per_file_counts_match_oracle_dumps_exactly() {
    let taxonomy = FeatureTaxonomy::java();
    for name in fixtures() {
        let source = std::fs::read(golden_dir().join("src").join(&name)).unwrap();
        let (counts, _) = select_features_source(&name, &source, &taxonomy)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let produced = canonical(&counts.per_type);
        let expected = oracle_bytes(&name.replace(".java", ".counts.json"));
        assert_eq!(
            produced, expected,
            "{name}: counts diverge from the independent-parser dump"
        );
    }
}

#[test]
fn corpus_totals_match_oracle_dump_exactly() {
    let names = fixtures();
    let snapshot = corpus_snapshot(&names);
    let (counts, _) =
        select_features(&snapshot, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap();
    let produced = canonical(&counts.per_type);
    let expected = oracle_bytes("_corpus.counts.json");
    assert_eq!(produced, expected, "corpus totals diverge from the oracle");
}

fn corpus_snapshot(names: &[String]) -> CommitSnapshot {
    let root = golden_dir().join("src");
    let mut total_loc = 0;
    let mut total_chars = 0;
    for name in names {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        total_loc += text.lines().count() as u64;
        total_chars += text.chars().count() as u64;
    }
    CommitSnapshot {
        commit: CommitRef {
            hash: "f".repeat(40),
            index: 0,
            timestamp: 0,
        },
        root,
        files: names.to_vec(),
        total_files: names.len() as u64,
        total_loc,
        total_chars,
    }
}
