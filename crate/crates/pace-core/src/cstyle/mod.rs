//! Code-stylometry feature taxonomy and per-snapshot feature selection.
//!
//! The taxonomy is a fixed set of 42 syntax-tree node types grouped into
//! five classes. Statements, controls and expressions are the syntactic
//! side of the taxonomy; invocations and declarations the lexical side.
//! Selection walks every parsed file of a snapshot in manifest order and
//! preorder within the file, incrementing exactly one type per matched
//! node and recording the matched-type sequence for the neural
//! representation.

mod parser;

use std::path::PathBuf;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::CommitSnapshot;

pub use parser::{parse_file, parse_source, ParseFailure, Preorder, SyntaxNode, SyntaxTree};

const DEFAULT_KIND_MAP: &str = include_str!("kind_map.json");

/// The five feature classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureClass {
    Statements,
    Controls,
    Expressions,
    Invocations,
    Declarations,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 5] = [
        FeatureClass::Statements,
        FeatureClass::Controls,
        FeatureClass::Expressions,
        FeatureClass::Invocations,
        FeatureClass::Declarations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureClass::Statements => "Statements",
            FeatureClass::Controls => "Controls",
            FeatureClass::Expressions => "Expressions",
            FeatureClass::Invocations => "Invocations",
            FeatureClass::Declarations => "Declarations",
        }
    }

    /// Statements, controls and expressions are syntactic features; the
    /// invocation and declaration classes are lexical.
    pub fn is_syntactic(self) -> bool {
        matches!(
            self,
            FeatureClass::Statements | FeatureClass::Controls | FeatureClass::Expressions
        )
    }
}

/// The 42 node types in taxonomy order with their classes.
const TYPE_TABLE: &[(&str, FeatureClass)] = &[
    ("IfStatement", FeatureClass::Statements),
    ("WhileStatement", FeatureClass::Statements),
    ("DoStatement", FeatureClass::Statements),
    ("AssertStatement", FeatureClass::Statements),
    ("SwitchStatement", FeatureClass::Statements),
    ("ForStatement", FeatureClass::Statements),
    ("ContinueStatement", FeatureClass::Statements),
    ("ReturnStatement", FeatureClass::Statements),
    ("ThrowStatement", FeatureClass::Statements),
    ("SynchronizedStatement", FeatureClass::Statements),
    ("TryStatement", FeatureClass::Statements),
    ("BreakStatement", FeatureClass::Statements),
    ("BlockStatement", FeatureClass::Statements),
    ("BinaryOperation", FeatureClass::Statements),
    ("CatchClause", FeatureClass::Statements),
    ("For", FeatureClass::Controls),
    ("EnhancedFor", FeatureClass::Controls),
    ("StatementExpression", FeatureClass::Expressions),
    ("TernaryExpression", FeatureClass::Expressions),
    ("LambdaExpression", FeatureClass::Expressions),
    ("SuperConstructorInvocation", FeatureClass::Invocations),
    ("MethodInvocation", FeatureClass::Invocations),
    ("SuperMethodInvocation", FeatureClass::Invocations),
    ("SuperMemberReference", FeatureClass::Invocations),
    ("ExplicitConstructorInvocation", FeatureClass::Invocations),
    ("ArraySelector", FeatureClass::Invocations),
    ("AnnotationMethod", FeatureClass::Invocations),
    ("MethodReference", FeatureClass::Invocations),
    ("TypeDeclaration", FeatureClass::Declarations),
    ("FieldDeclaration", FeatureClass::Declarations),
    ("MethodDeclaration", FeatureClass::Declarations),
    ("ConstructorDeclaration", FeatureClass::Declarations),
    ("PackageDeclaration", FeatureClass::Declarations),
    ("ClassDeclaration", FeatureClass::Declarations),
    ("EnumDeclaration", FeatureClass::Declarations),
    ("InterfaceDeclaration", FeatureClass::Declarations),
    ("AnnotationDeclaration", FeatureClass::Declarations),
    ("ConstantDeclaration", FeatureClass::Declarations),
    ("VariableDeclaration", FeatureClass::Declarations),
    ("LocalVariableDeclaration", FeatureClass::Declarations),
    ("EnumConstantDeclaration", FeatureClass::Declarations),
    ("VariableDeclarator", FeatureClass::Declarations),
];

pub const TYPE_COUNT: usize = 42;

#[derive(Debug, Error)]
pub enum CstyleError {
    #[error("snapshot has no source files; nothing to select features from")]
    EmptyCorpus,
    #[error("unparsable file under abort policy: {failure}")]
    UnparsableCorpus { failure: ParseFailure },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid kind map: {0}")]
    InvalidKindMap(String),
}

/// The taxonomy plus the grammar-kind mapping used to match tree nodes.
#[derive(Debug, Clone)]
pub struct FeatureTaxonomy {
    kind_map: IndexMap<String, usize>,
}

impl FeatureTaxonomy {
    /// The built-in Java mapping.
    pub fn java() -> Self {
        Self::from_kind_map_json(DEFAULT_KIND_MAP).expect("built-in kind map is valid")
    }

    /// Loads a mapping from its JSON form: an object of
    /// `"grammar_kind": "TypeName"` entries. Keys starting with `_` are
    /// ignored so the file can carry comments.
    pub fn from_kind_map_json(json: &str) -> Result<Self, CstyleError> {
        let raw: IndexMap<String, String> = serde_json::from_str(json)
            .map_err(|e| CstyleError::InvalidKindMap(e.to_string()))?;
        let mut kind_map = IndexMap::new();
        for (kind, type_name) in raw {
            if kind.starts_with('_') {
                continue;
            }
            let index = Self::type_index(&type_name).ok_or_else(|| {
                CstyleError::InvalidKindMap(format!("unknown taxonomy type {type_name:?}"))
            })?;
            if kind_map.insert(kind.clone(), index).is_some() {
                return Err(CstyleError::InvalidKindMap(format!(
                    "kind {kind:?} mapped more than once"
                )));
            }
        }
        Ok(FeatureTaxonomy { kind_map })
    }

    /// Type names in taxonomy order.
    pub fn type_names() -> impl Iterator<Item = &'static str> {
        TYPE_TABLE.iter().map(|(name, _)| *name)
    }

    pub fn type_index(name: &str) -> Option<usize> {
        TYPE_TABLE.iter().position(|(n, _)| *n == name)
    }

    pub fn type_name(index: usize) -> &'static str {
        TYPE_TABLE[index].0
    }

    pub fn class_of_index(index: usize) -> FeatureClass {
        TYPE_TABLE[index].1
    }

    pub fn class_of(name: &str) -> Option<FeatureClass> {
        TYPE_TABLE
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, class)| *class)
    }

    /// The taxonomy type a normalized grammar kind maps to, if any.
    pub fn match_kind(&self, kind: &str) -> Option<usize> {
        self.kind_map.get(kind).copied()
    }

    /// Grammar kinds matching types of one class.
    fn kinds_of_class(&self, class: FeatureClass) -> Vec<&str> {
        self.kind_map
            .iter()
            .filter(|(_, &idx)| TYPE_TABLE[idx].1 == class)
            .map(|(kind, _)| kind.as_str())
            .collect()
    }
}

/// What to do when a snapshot file fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParsePolicy {
    /// Exclude failed files from counts and corpus size, recording them.
    Skip,
    /// Fail the whole snapshot on the first unparsable file.
    Abort,
}

/// Per-snapshot occurrence counts of the taxonomy types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCounts {
    /// Commit hash for snapshot-level counts, file path for per-file counts.
    pub key: String,
    /// Count per taxonomy type, all 42 keys present in taxonomy order.
    pub per_type: IndexMap<String, u64>,
    /// Corpus size in characters over the files that contributed counts.
    pub corpus_chars: u64,
    /// Matched type names in file order, preorder within each file.
    pub token_sequence: Vec<String>,
    /// Files excluded under the skip policy.
    pub skipped_files: Vec<String>,
}

impl FeatureCounts {
    pub fn count_of(&self, type_name: &str) -> u64 {
        self.per_type.get(type_name).copied().unwrap_or(0)
    }

    pub fn total_matches(&self) -> u64 {
        self.per_type.values().sum()
    }
}

/// Wall-clock cost of the selection pass, one entry per feature class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTiming {
    /// Seconds spent matching each class, in class order.
    pub seconds_per_class: IndexMap<String, f64>,
    /// Seconds spent parsing the corpus (not part of selection proper).
    pub parse_seconds: f64,
}

impl SelectionTiming {
    /// Total selection time, defined as the sum of the class entries.
    pub fn total_seconds(&self) -> f64 {
        self.seconds_per_class.values().sum()
    }
}

/// Selects taxonomy features over every file of a materialized snapshot.
pub fn select_features(
    snapshot: &CommitSnapshot,
    taxonomy: &FeatureTaxonomy,
    policy: ParsePolicy,
) -> Result<(FeatureCounts, SelectionTiming), CstyleError> {
    if snapshot.files.is_empty() {
        return Err(CstyleError::EmptyCorpus);
    }

    let parse_start = Instant::now();
    let mut trees = Vec::new();
    let mut skipped_files = Vec::new();
    let mut corpus_chars = 0u64;
    for rel in &snapshot.files {
        let path = snapshot.root.join(rel);
        match parse_file(&path)? {
            Ok(tree) => {
                corpus_chars += file_chars(&snapshot.root.join(rel))?;
                trees.push(tree);
            }
            Err(failure) => match policy {
                ParsePolicy::Abort => return Err(CstyleError::UnparsableCorpus { failure }),
                ParsePolicy::Skip => skipped_files.push(rel.clone()),
            },
        }
    }
    let parse_seconds = parse_start.elapsed().as_secs_f64();

    let (per_type, token_sequence, seconds_per_class) = match_classes(&trees, taxonomy);

    Ok((
        FeatureCounts {
            key: snapshot.commit.hash.clone(),
            per_type,
            corpus_chars,
            token_sequence,
            skipped_files,
        },
        SelectionTiming {
            seconds_per_class,
            parse_seconds,
        },
    ))
}

/// Selects features for a single in-memory source, keyed by `key`. Used for
/// the per-file dataset protocol.
pub fn select_features_source(
    key: &str,
    source: &[u8],
    taxonomy: &FeatureTaxonomy,
) -> Result<(FeatureCounts, SelectionTiming), CstyleError> {
    let tree = parse_source(source).map_err(|failure| CstyleError::UnparsableCorpus { failure })?;
    let corpus_chars = String::from_utf8_lossy(source).chars().count() as u64;
    let (per_type, token_sequence, seconds_per_class) =
        match_classes(std::slice::from_ref(&tree), taxonomy);
    Ok((
        FeatureCounts {
            key: key.to_string(),
            per_type,
            corpus_chars,
            token_sequence,
            skipped_files: Vec::new(),
        },
        SelectionTiming {
            seconds_per_class,
            parse_seconds: 0.0,
        },
    ))
}

/// One timed matching pass per feature class over the parsed corpus. The
/// per-class hits are merged back into the global (file, preorder) order, so
/// counts and the token sequence are identical to a single combined pass.
fn match_classes(
    trees: &[SyntaxTree],
    taxonomy: &FeatureTaxonomy,
) -> (IndexMap<String, u64>, Vec<String>, IndexMap<String, f64>) {
    let mut hits: Vec<(usize, usize, usize)> = Vec::new(); // (file, preorder position, type)
    let mut seconds_per_class = IndexMap::new();

    for class in FeatureClass::ALL {
        let kinds = taxonomy.kinds_of_class(class);
        let start = Instant::now();
        for (file_idx, tree) in trees.iter().enumerate() {
            for (node_idx, node) in tree.preorder().enumerate() {
                if kinds.contains(&node.kind.as_str()) {
                    let type_idx = taxonomy
                        .match_kind(&node.kind)
                        .expect("kinds_of_class only returns mapped kinds");
                    hits.push((file_idx, node_idx, type_idx));
                }
            }
        }
        seconds_per_class.insert(class.name().to_string(), start.elapsed().as_secs_f64());
    }

    hits.sort_unstable_by_key(|&(file, node, _)| (file, node));

    let mut per_type: IndexMap<String, u64> = FeatureTaxonomy::type_names()
        .map(|name| (name.to_string(), 0))
        .collect();
    let mut token_sequence = Vec::with_capacity(hits.len());
    for (_, _, type_idx) in hits {
        let name = FeatureTaxonomy::type_name(type_idx);
        *per_type.get_mut(name).expect("all types present") += 1;
        token_sequence.push(name.to_string());
    }
    (per_type, token_sequence, seconds_per_class)
}

/// Sums per-type counts within each of the five classes.
pub fn class_totals(counts: &FeatureCounts) -> IndexMap<String, u64> {
    let mut totals: IndexMap<String, u64> = FeatureClass::ALL
        .iter()
        .map(|c| (c.name().to_string(), 0))
        .collect();
    for (name, &count) in &counts.per_type {
        if let Some(class) = FeatureTaxonomy::class_of(name) {
            *totals.get_mut(class.name()).expect("all classes present") += count;
        }
    }
    totals
}

pub(crate) fn file_chars(path: &std::path::Path) -> Result<u64, CstyleError> {
    let bytes = std::fs::read(path).map_err(|source| CstyleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(String::from_utf8_lossy(&bytes).chars().count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{CommitRef, CommitSnapshot};
    use std::io::Write;

    fn write_file(dir: &std::path::Path, name: &str, contents: &str) {
        let mut f = std::fs::File::create(dir.join(name)).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
    }

    fn snapshot_over(dir: &std::path::Path, files: &[&str]) -> CommitSnapshot {
        let mut total_loc = 0;
        let mut total_chars = 0;
        for f in files {
            let text = std::fs::read_to_string(dir.join(f)).unwrap();
            total_loc += text.lines().count() as u64;
            total_chars += text.chars().count() as u64;
        }
        CommitSnapshot {
            commit: CommitRef {
                hash: "0".repeat(40),
                index: 0,
                timestamp: 0,
            },
            root: dir.to_path_buf(),
            files: files.iter().map(|s| s.to_string()).collect(),
            total_files: files.len() as u64,
            total_loc,
            total_chars,
        }
    }

    #[test]
    fn taxonomy_has_42_types_in_5_classes() {
        assert_eq!(TYPE_TABLE.len(), TYPE_COUNT);
        let taxonomy = FeatureTaxonomy::java();
        for (kind, &idx) in &taxonomy.kind_map {
            assert!(idx < TYPE_COUNT, "kind {kind} out of range");
        }
        // class partition sizes from the taxonomy table
        let count_of = |c: FeatureClass| TYPE_TABLE.iter().filter(|(_, cl)| *cl == c).count();
        assert_eq!(count_of(FeatureClass::Statements), 15);
        assert_eq!(count_of(FeatureClass::Controls), 2);
        assert_eq!(count_of(FeatureClass::Expressions), 3);
        assert_eq!(count_of(FeatureClass::Invocations), 8);
        assert_eq!(count_of(FeatureClass::Declarations), 14);
    }

    #[test]
    fn syntactic_lexical_split() {
        assert!(FeatureClass::Statements.is_syntactic());
        assert!(FeatureClass::Controls.is_syntactic());
        assert!(FeatureClass::Expressions.is_syntactic());
        assert!(!FeatureClass::Invocations.is_syntactic());
        assert!(!FeatureClass::Declarations.is_syntactic());
    }

    #[test]
    fn rejects_unknown_type_in_kind_map() {
        let err = FeatureTaxonomy::from_kind_map_json(r#"{"x": "NotAType"}"#).unwrap_err();
        assert!(matches!(err, CstyleError::InvalidKindMap(_)));
    }

    #[test]
    fn selection_counts_known_snippet() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "A.java",
            "class A { void m(int x) { if (x > 0) { for (int i = 0; i < 2; i++) { m(i); } } } }",
        );
        let snap = snapshot_over(dir.path(), &["A.java"]);
        let (counts, timing) =
            select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap();
        assert_eq!(counts.count_of("ClassDeclaration"), 1);
        assert_eq!(counts.count_of("MethodDeclaration"), 1);
        assert_eq!(counts.count_of("IfStatement"), 1);
        assert_eq!(counts.count_of("ForStatement"), 1);
        assert_eq!(counts.count_of("For"), 1);
        assert_eq!(counts.count_of("MethodInvocation"), 1);
        assert_eq!(counts.count_of("VariableDeclaration"), 1);
        assert_eq!(counts.count_of("VariableDeclarator"), 1);
        assert_eq!(counts.count_of("BinaryOperation"), 2);
        assert_eq!(counts.count_of("BlockStatement"), 2);
        assert_eq!(counts.count_of("StatementExpression"), 1);
        assert_eq!(counts.total_matches(), counts.token_sequence.len() as u64);
        assert_eq!(counts.corpus_chars, snap.total_chars);
        assert_eq!(timing.seconds_per_class.len(), 5);
    }

    #[test]
    fn empty_file_yields_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "Empty.java", "");
        let snap = snapshot_over(dir.path(), &["Empty.java"]);
        let (counts, _) =
            select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap();
        assert!(counts.per_type.values().all(|&c| c == 0));
        assert!(counts.token_sequence.is_empty());
        assert_eq!(counts.per_type.len(), TYPE_COUNT);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let snap = snapshot_over(dir.path(), &[]);
        assert!(matches!(
            select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Skip),
            Err(CstyleError::EmptyCorpus)
        ));
    }

    #[test]
    fn abort_policy_fails_on_broken_file() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "Bad.java", "class {");
        write_file(dir.path(), "Good.java", "class G {}");
        let snap = snapshot_over(dir.path(), &["Bad.java", "Good.java"]);
        let err = select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap_err();
        assert!(matches!(err, CstyleError::UnparsableCorpus { .. }));
    }

    #[test]
    fn skip_policy_excludes_failed_files() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "Bad.java", "class {");
        write_file(dir.path(), "Good.java", "class G {}");
        let snap = snapshot_over(dir.path(), &["Bad.java", "Good.java"]);
        let (counts, _) =
            select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Skip).unwrap();
        assert_eq!(counts.skipped_files, vec!["Bad.java".to_string()]);
        assert_eq!(counts.count_of("ClassDeclaration"), 1);
        assert_eq!(
            counts.corpus_chars,
            std::fs::read_to_string(dir.path().join("Good.java"))
                .unwrap()
                .chars()
                .count() as u64
        );
    }

    #[test]
    fn counts_are_additive_over_disjoint_files() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "A.java", "class A { void a() { if (true) {} } }");
        write_file(dir.path(), "B.java", "class B { int f = 1; }");
        let taxonomy = FeatureTaxonomy::java();
        let both = snapshot_over(dir.path(), &["A.java", "B.java"]);
        let only_a = snapshot_over(dir.path(), &["A.java"]);
        let only_b = snapshot_over(dir.path(), &["B.java"]);
        let (cb, _) = select_features(&both, &taxonomy, ParsePolicy::Abort).unwrap();
        let (ca, _) = select_features(&only_a, &taxonomy, ParsePolicy::Abort).unwrap();
        let (cbb, _) = select_features(&only_b, &taxonomy, ParsePolicy::Abort).unwrap();
        for name in FeatureTaxonomy::type_names() {
            assert_eq!(cb.count_of(name), ca.count_of(name) + cbb.count_of(name));
        }
    }

    #[test]
    fn reordering_files_permutes_sequence_not_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "A.java", "class A { void a() { a(); } }");
        write_file(dir.path(), "B.java", "class B { int f = 1; }");
        let taxonomy = FeatureTaxonomy::java();
        let ab = snapshot_over(dir.path(), &["A.java", "B.java"]);
        let ba = snapshot_over(dir.path(), &["B.java", "A.java"]);
        let (c_ab, _) = select_features(&ab, &taxonomy, ParsePolicy::Abort).unwrap();
        let (c_ba, _) = select_features(&ba, &taxonomy, ParsePolicy::Abort).unwrap();
        assert_eq!(c_ab.per_type, c_ba.per_type);
        assert_ne!(c_ab.token_sequence, c_ba.token_sequence);
        let mut sorted_ab = c_ab.token_sequence.clone();
        let mut sorted_ba = c_ba.token_sequence.clone();
        sorted_ab.sort();
        sorted_ba.sort();
        assert_eq!(sorted_ab, sorted_ba);
    }

    #[test]
    fn class_totals_partition_the_matches() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "A.java",
            "class A { void m() { if (m2()) { for (int i = 0; i < 3; i++) {} } } boolean m2() { return true; } }",
        );
        let snap = snapshot_over(dir.path(), &["A.java"]);
        let (counts, _) =
            select_features(&snap, &FeatureTaxonomy::java(), ParsePolicy::Abort).unwrap();
        let totals = class_totals(&counts);
        assert_eq!(totals.len(), 5);
        let sum: u64 = totals.values().sum();
        assert_eq!(sum, counts.total_matches());
        assert_eq!(totals["Controls"], 1);
    }

    #[test]
    fn per_file_selection_is_keyed_by_path() {
        let (counts, _) = select_features_source(
            "src/A.java",
            b"class A { void m() {} }",
            &FeatureTaxonomy::java(),
        )
        .unwrap();
        assert_eq!(counts.key, "src/A.java");
        assert_eq!(counts.count_of("MethodDeclaration"), 1);
    }
}
