use std::path::{Path, PathBuf};
use std::process::Command;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_extractor::LogExtractor;
use crate::parallel::par_map;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("{0} is not a git repository")]
    NotARepository(PathBuf),
    #[error("git {args} failed: {reason}")]
    Git { args: String, reason: String },
    #[error("invalid keyword pattern: {0}")]
    Pattern(#[from] regex::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Whole-word, case-insensitive inclusion keywords.
    pub include: Vec<String>,
    /// Case-insensitive substrings that veto a commit.
    pub exclude: Vec<String>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            include: ["log", "logging", "logger", "logs"].map(String::from).to_vec(),
            exclude: ["login", "dialog"].map(String::from).to_vec(),
        }
    }
}

/// A changed line pair where either side holds a logging call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TouchedLine {
    pub file: String,
    /// Line in the new revision, or in the old one for pure removals.
    pub line: u32,
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitCandidate {
    pub repo: String,
    pub hash: String,
    pub time: i64,
    pub summary: String,
    pub touched_log_lines: Vec<TouchedLine>,
}

struct RawCommit {
    hash: String,
    time: i64,
    summary: String,
    body: String,
}

fn git(repo: &Path, args: &[&str]) -> Result<String, MineError> {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| MineError::Git { args: args.join(" "), reason: e.to_string() })?;
    if !out.status.success() {
        return Err(MineError::Git {
            args: args.join(" "),
            reason: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Whether a commit message passes the keyword filter.
pub fn message_matches(message: &str, include: &Regex, exclude: &[String]) -> bool {
    let lower = message.to_lowercase();
    include.is_match(message) && !exclude.iter().any(|x| lower.contains(&x.to_lowercase()))
}

fn include_regex(words: &[String]) -> Result<Regex, regex::Error> {
    let alts: Vec<String> = words.iter().map(|w| regex::escape(w)).collect();
    Regex::new(&format!(r"(?i)\b({})\b", alts.join("|")))
}

/// Commits whose message matches an include keyword and no exclude keyword,
/// with the changed lines that touch logging calls. Sorted by commit time,
/// then hash.
pub fn mine_commits(
    repo: &Path,
    cfg: &MiningConfig,
    extractor: &LogExtractor,
) -> Result<Vec<CommitCandidate>, MineError> {
    let inside = Command::new("git").arg("-C").arg(repo).args(["rev-parse", "--git-dir"]).output();
    if !matches!(inside, Ok(ref o) if o.status.success()) {
        return Err(MineError::NotARepository(repo.to_path_buf()));
    }
    let include = include_regex(&cfg.include)?;
    let log = git(repo, &["log", "--all", "--format=%H%x1f%ct%x1f%s%x1f%b%x1e"])?;
    let commits: Vec<RawCommit> = log
        .split('\x1e')
        .filter_map(|rec| {
            let mut parts = rec.trim_start_matches('\n').splitn(4, '\x1f');
            let hash = parts.next()?.trim().to_string();
            let time = parts.next()?.trim().parse().ok()?;
            let summary = parts.next()?.to_string();
            let body = parts.next().unwrap_or("").trim().to_string();
            (!hash.is_empty()).then_some(RawCommit { hash, time, summary, body })
        })
        .filter(|c| message_matches(&format!("{}\n{}", c.summary, c.body), &include, &cfg.exclude))
        .collect();
    let repo_name = repo.display().to_string();
    let results = par_map(&commits, |c| {
        let diff = git(repo, &["diff-tree", "-p", "-U0", "--root", "--no-color", "--no-ext-diff", &c.hash])?;
        Ok(CommitCandidate {
            repo: repo_name.clone(),
            hash: c.hash.clone(),
            time: c.time,
            summary: c.summary.clone(),
            touched_log_lines: touched_lines(&diff, extractor),
        })
    });
    let mut out = results.into_iter().collect::<Result<Vec<_>, MineError>>()?;
    out.sort_by(|a, b| (a.time, &a.hash).cmp(&(b.time, &b.hash)));
    Ok(out)
}

/// Pairs removed and added lines hunk by hunk and keeps pairs where either
/// side contains a logging call.
pub fn touched_lines(diff: &str, extractor: &LogExtractor) -> Vec<TouchedLine> {
    let hunk = Regex::new(r"^@@ -(\d+)(?:,\d+)? \+(\d+)(?:,\d+)? @@").unwrap();
    let mut out = Vec::new();
    let mut file = String::new();
    let mut removed: Vec<(u32, String)> = Vec::new();
    let mut added: Vec<(u32, String)> = Vec::new();
    let (mut old_line, mut new_line) = (0u32, 0u32);
    let mut flush = |file: &str, removed: &mut Vec<(u32, String)>, added: &mut Vec<(u32, String)>| {
        let n = removed.len().max(added.len());
        for i in 0..n {
            let before = removed.get(i).cloned();
            let after = added.get(i).cloned();
            let hit = |s: &Option<(u32, String)>| s.as_ref().is_some_and(|(_, t)| extractor.line_has_logging_call(t));
            if hit(&before) || hit(&after) {
                let line = after.as_ref().or(before.as_ref()).map_or(0, |(l, _)| *l);
                out.push(TouchedLine {
                    file: file.to_string(),
                    line,
                    before: before.map(|(_, t)| t),
                    after: after.map(|(_, t)| t),
                });
            }
        }
        removed.clear();
        added.clear();
    };
    for l in diff.lines() {
        if let Some(path) = l.strip_prefix("+++ ") {
            flush(&file, &mut removed, &mut added);
            file = path.strip_prefix("b/").unwrap_or(path).to_string();
        } else if l.starts_with("--- ") || l.starts_with("diff --git") {
            flush(&file, &mut removed, &mut added);
        } else if let Some(c) = hunk.captures(l) {
            flush(&file, &mut removed, &mut added);
            old_line = c[1].parse().unwrap_or(0);
            new_line = c[2].parse().unwrap_or(0);
        } else if let Some(t) = l.strip_prefix('-') {
            removed.push((old_line, t.to_string()));
            old_line += 1;
        } else if let Some(t) = l.strip_prefix('+') {
            added.push((new_line, t.to_string()));
            new_line += 1;
        }
    }
    flush(&file, &mut removed, &mut added);
    out
}
