//! Point-in-time repository snapshots.
//!
//! History is walked first-parent only, newest first, by shelling out to the
//! `git` executable. Each selected commit is materialized into its own
//! working directory via a detached worktree that is immediately unlinked
//! from the source repository, so the source repo's HEAD, branches and index
//! are never touched and the materialized tree is a plain directory.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path} is not a git repository")]
    NotARepository { path: PathBuf },
    #[error("repository {path} has no commits")]
    EmptyHistory { path: PathBuf },
    #[error("unknown branch or revision {branch:?}")]
    UnknownBranch { branch: String },
    #[error("git checkout of {hash} failed: {stderr}")]
    CheckoutFailed { hash: String, stderr: String },
    #[error("workdir {path} is not empty; pass force to overwrite")]
    DirtyWorkdir { path: PathBuf },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("git {args:?} failed: {stderr}")]
    Git { args: Vec<String>, stderr: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One commit in an extraction run. Index 0 is the newest selected commit
/// and indices increase going back in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub hash: String,
    pub index: u64,
    pub timestamp: i64,
}

impl CommitRef {
    pub fn short_hash(&self) -> &str {
        &self.hash[..7.min(self.hash.len())]
    }
}

/// A materialized repository state: the tree on disk plus the manifest of
/// matched source files and their corpus statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitSnapshot {
    pub commit: CommitRef,
    pub root: PathBuf,
    /// Relative paths of matched source files, lexicographically sorted.
    pub files: Vec<String>,
    pub total_files: u64,
    /// Physical line count over matched files (a final partial line counts).
    pub total_loc: u64,
    /// Character count over matched files.
    pub total_chars: u64,
}

/// The per-commit JSON manifest written next to each materialized tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub hash: String,
    pub index: u64,
    pub files: Vec<String>,
    pub total_files: u64,
    pub total_loc: u64,
    pub total_chars: u64,
}

impl From<&CommitSnapshot> for SnapshotManifest {
    fn from(s: &CommitSnapshot) -> Self {
        SnapshotManifest {
            hash: s.commit.hash.clone(),
            index: s.commit.index,
            files: s.files.clone(),
            total_files: s.total_files,
            total_loc: s.total_loc,
            total_chars: s.total_chars,
        }
    }
}

fn run_git(repo: &Path, args: &[&str]) -> Result<String, SnapshotError> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|source| SnapshotError::Io {
            path: repo.to_path_buf(),
            source,
        })?;
    if output.status.success() {
        Ok(String::from_utf8_lossy(&output.stdout).into_owned())
    } else {
        Err(SnapshotError::Git {
            args: args.iter().map(|s| s.to_string()).collect(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        })
    }
}

fn ensure_repository(repo: &Path) -> Result<(), SnapshotError> {
    run_git(repo, &["rev-parse", "--git-dir"]).map_err(|_| SnapshotError::NotARepository {
        path: repo.to_path_buf(),
    })?;
    Ok(())
}

/// Lists up to `max_commits` first-parent commits reachable from `branch`,
/// newest first.
pub fn enumerate_commits(
    repo: &Path,
    max_commits: u64,
    branch: &str,
) -> Result<Vec<CommitRef>, SnapshotError> {
    if max_commits == 0 {
        return Err(SnapshotError::InvalidArgument(
            "max_commits must be at least 1".to_string(),
        ));
    }
    ensure_repository(repo)?;
    let any = run_git(repo, &["rev-list", "-n", "1", "--all"])?;
    if any.trim().is_empty() {
        return Err(SnapshotError::EmptyHistory {
            path: repo.to_path_buf(),
        });
    }
    let probe = format!("{branch}^{{commit}}");
    run_git(repo, &["rev-parse", "--verify", "--quiet", &probe]).map_err(|_| {
        SnapshotError::UnknownBranch {
            branch: branch.to_string(),
        }
    })?;

    let n = max_commits.to_string();
    let log = run_git(
        repo,
        &["log", "--first-parent", "--format=%H %ct", "-n", &n, branch],
    )?;
    let mut commits = Vec::new();
    for (index, line) in log.lines().enumerate() {
        let (hash, ts) = line
            .split_once(' ')
            .ok_or_else(|| SnapshotError::InvalidArgument(format!("bad log line {line:?}")))?;
        commits.push(CommitRef {
            hash: hash.to_string(),
            index: index as u64,
            timestamp: ts.trim().parse().unwrap_or(0),
        });
    }
    if commits.is_empty() {
        return Err(SnapshotError::EmptyHistory {
            path: repo.to_path_buf(),
        });
    }
    Ok(commits)
}

/// Materializes the tree of one commit into `workdir` and collects the
/// manifest of files matching `extension`.
pub fn materialize_snapshot(
    repo: &Path,
    commit: &CommitRef,
    workdir: &Path,
    extension: &str,
    force: bool,
) -> Result<CommitSnapshot, SnapshotError> {
    ensure_repository(repo)?;
    if workdir.exists() {
        let occupied = std::fs::read_dir(workdir)
            .map_err(|source| SnapshotError::Io {
                path: workdir.to_path_buf(),
                source,
            })?
            .next()
            .is_some();
        if occupied && !force {
            return Err(SnapshotError::DirtyWorkdir {
                path: workdir.to_path_buf(),
            });
        }
        std::fs::remove_dir_all(workdir).map_err(|source| SnapshotError::Io {
            path: workdir.to_path_buf(),
            source,
        })?;
    }
    if let Some(parent) = workdir.parent() {
        std::fs::create_dir_all(parent).map_err(|source| SnapshotError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }

    let dest = workdir.to_string_lossy().into_owned();
    run_git(
        repo,
        &["worktree", "add", "--detach", &dest, &commit.hash],
    )
    .map_err(|e| match e {
        SnapshotError::Git { stderr, .. } => SnapshotError::CheckoutFailed {
            hash: commit.hash.clone(),
            stderr,
        },
        other => other,
    })?;
    // unlink the tree from the repository: drop the gitdir pointer file and
    // prune the stale registration
    let gitfile = workdir.join(".git");
    if gitfile.exists() {
        std::fs::remove_file(&gitfile).map_err(|source| SnapshotError::Io {
            path: gitfile.clone(),
            source,
        })?;
    }
    run_git(repo, &["worktree", "prune"])?;

    let mut files = Vec::new();
    collect_files(workdir, workdir, extension, &mut files)?;
    files.sort();

    let mut total_loc = 0u64;
    let mut total_chars = 0u64;
    for rel in &files {
        let (loc, chars) = file_stats(&workdir.join(rel))?;
        total_loc += loc;
        total_chars += chars;
    }

    Ok(CommitSnapshot {
        commit: commit.clone(),
        root: workdir.to_path_buf(),
        total_files: files.len() as u64,
        files,
        total_loc,
        total_chars,
    })
}

fn collect_files(
    root: &Path,
    dir: &Path,
    extension: &str,
    out: &mut Vec<String>,
) -> Result<(), SnapshotError> {
    let entries = std::fs::read_dir(dir).map_err(|source| SnapshotError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| SnapshotError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let name = entry.file_name();
        if path.is_dir() {
            if name == ".git" {
                continue;
            }
            collect_files(root, &path, extension, out)?;
        } else if name.to_string_lossy().ends_with(extension) {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .to_string_lossy()
                .into_owned();
            out.push(rel);
        }
    }
    Ok(())
}

fn file_stats(path: &Path) -> Result<(u64, u64), SnapshotError> {
    let bytes = std::fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    Ok((text.lines().count() as u64, text.chars().count() as u64))
}

/// Walks history and materializes one snapshot per commit under `workdir`,
/// in sub-directories named `c_{index}_{shorthash}`. All-or-nothing: on any
/// failure the directories created by this call are removed.
pub fn snapshot_series(
    repo: &Path,
    max_commits: u64,
    branch: &str,
    workdir: &Path,
    extension: &str,
    force: bool,
) -> Result<Vec<CommitSnapshot>, SnapshotError> {
    let commits = enumerate_commits(repo, max_commits, branch)?;
    let mut snapshots = Vec::new();
    let mut created = Vec::new();
    for commit in &commits {
        let sub = workdir.join(format!("c_{}_{}", commit.index, commit.short_hash()));
        match materialize_snapshot(repo, commit, &sub, extension, force) {
            Ok(snapshot) => {
                created.push(sub);
                snapshots.push(snapshot);
            }
            Err(e) => {
                for dir in created {
                    let _ = std::fs::remove_dir_all(dir);
                }
                return Err(e);
            }
        }
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_hash_is_seven_chars() {
        let c = CommitRef {
            hash: "0123456789abcdef0123456789abcdef01234567".to_string(),
            index: 0,
            timestamp: 0,
        };
        assert_eq!(c.short_hash(), "0123456");
    }

    #[test]
    fn zero_max_commits_is_invalid() {
        let err = enumerate_commits(Path::new("/nonexistent"), 0, "HEAD").unwrap_err();
        assert!(matches!(err, SnapshotError::InvalidArgument(_)));
    }

    #[test]
    fn non_repository_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = enumerate_commits(dir.path(), 5, "HEAD").unwrap_err();
        assert!(matches!(err, SnapshotError::NotARepository { .. }));
    }

    #[test]
    fn manifest_mirrors_snapshot() {
        let snap = CommitSnapshot {
            commit: CommitRef {
                hash: "a".repeat(40),
                index: 3,
                timestamp: 7,
            },
            root: PathBuf::from("/tmp/x"),
            files: vec!["A.java".to_string()],
            total_files: 1,
            total_loc: 10,
            total_chars: 100,
        };
        let manifest = SnapshotManifest::from(&snap);
        assert_eq!(manifest.index, 3);
        assert_eq!(manifest.files, snap.files);
        assert_eq!(manifest.total_chars, 100);
    }
}
