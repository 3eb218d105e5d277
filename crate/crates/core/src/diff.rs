//! Unified diff parsing and pre-image range arithmetic.
//!
//! Patches fetched from GitHub (or concatenated from several commits) are
//! parsed into [`FileDiff`]s with their hunks, and each hunk maps to the line
//! range it touches in the *original* file. Labeling only ever looks at the
//! pre-fix side, so the range math here is all in old-file coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("hunk {hunk} of `{file}`: line counts do not match header (old {old_expected}/{old_seen}, new {new_expected}/{new_seen})")]
    HunkCountMismatch {
        file: String,
        hunk: usize,
        old_expected: u32,
        old_seen: u32,
        new_expected: u32,
        new_seen: u32,
    },
    #[error("hunk header `{0}` is malformed")]
    BadHunkHeader(String),
    #[error("hunk before any file header: `{0}`")]
    HunkWithoutFile(String),
    #[error("inverted range: start {0} > end {1}")]
    InvertedRange(u32, u32),
}

/// Tag of one line inside a hunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineTag {
    Context,
    Add,
    Del,
}

/// One contiguous change block, headed by `@@ -a,b +c,d @@`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    pub lines: Vec<(LineTag, String)>,
}

/// All hunks of one file, with the original and new file names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    /// Original path with the git `a/` prefix (or a leading `./`) removed.
    /// Labels attach to the pre-fix snapshot, so mapping always uses this.
    pub fn old_file(&self) -> &str {
        strip_diff_prefix(&self.old_path)
    }

    /// Re-serialize to unified diff text. Hunk headers and line tags are
    /// reproduced verbatim; file header timestamps are not retained.
    pub fn to_unified_string(&self) -> String {
        let mut out = String::new();
        out.push_str("--- ");
        out.push_str(&self.old_path);
        out.push('\n');
        out.push_str("+++ ");
        out.push_str(&self.new_path);
        out.push('\n');
        for h in &self.hunks {
            out.push_str(&format!(
                "@@ -{},{} +{},{} @@\n",
                h.old_start, h.old_len, h.new_start, h.new_len
            ));
            for (tag, text) in &h.lines {
                let prefix = match tag {
                    LineTag::Context => ' ',
                    LineTag::Add => '+',
                    LineTag::Del => '-',
                };
                out.push(prefix);
                out.push_str(text);
                out.push('\n');
            }
        }
        out
    }
}

/// Strip `a/`, `b/` or `./` from a diff header path.
pub fn strip_diff_prefix(path: &str) -> &str {
    for p in ["a/", "b/", "./"] {
        if let Some(rest) = path.strip_prefix(p) {
            return rest;
        }
    }
    path
}

struct PendingHunk {
    hunk: Hunk,
    old_remaining: i64,
    new_remaining: i64,
}

/// Parse unified diff text into per-file diffs.
///
/// Every `---`/`+++` header pair opens a file diff and every `@@` header a
/// hunk. Anything between diffs (git headers, commit messages of concatenated
/// patches, `index` lines) is skipped. Line counts are validated against the
/// hunk headers.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileDiff>, DiffError> {
    let mut files: Vec<FileDiff> = Vec::new();
    let mut pending_old: Option<String> = None;
    let mut current: Option<PendingHunk> = None;

    fn close_hunk(
        files: &mut [FileDiff],
        current: &mut Option<PendingHunk>,
    ) -> Result<(), DiffError> {
        if let Some(p) = current.take() {
            if p.old_remaining != 0 || p.new_remaining != 0 {
                let file = files.last().map(|f| f.old_path.clone()).unwrap_or_default();
                let hunk_idx = files.last().map(|f| f.hunks.len()).unwrap_or(0);
                return Err(DiffError::HunkCountMismatch {
                    file,
                    hunk: hunk_idx,
                    old_expected: p.hunk.old_len,
                    old_seen: (p.hunk.old_len as i64 - p.old_remaining) as u32,
                    new_expected: p.hunk.new_len,
                    new_seen: (p.hunk.new_len as i64 - p.new_remaining) as u32,
                });
            }
            files.last_mut().expect("open file").hunks.push(p.hunk);
        }
        Ok(())
    }

    for raw in text.lines() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if let Some(p) = current.as_mut() {
            if p.old_remaining > 0 || p.new_remaining > 0 {
                let (tag, rest) = match line.chars().next() {
                    Some(' ') => (Some(LineTag::Context), &line[1..]),
                    Some('+') => (Some(LineTag::Add), &line[1..]),
                    Some('-') => (Some(LineTag::Del), &line[1..]),
                    Some('\\') => (None, line), // "\ No newline at end of file"
                    None => (Some(LineTag::Context), ""),
                    _ => {
                        // Unexpected content while the header still promises
                        // lines: the hunk is inconsistent.
                        let file = files.last().map(|f| f.old_path.clone()).unwrap_or_default();
                        let hunk_idx = files.last().map(|f| f.hunks.len()).unwrap_or(0);
                        return Err(DiffError::HunkCountMismatch {
                            file,
                            hunk: hunk_idx,
                            old_expected: p.hunk.old_len,
                            old_seen: (p.hunk.old_len as i64 - p.old_remaining) as u32,
                            new_expected: p.hunk.new_len,
                            new_seen: (p.hunk.new_len as i64 - p.new_remaining) as u32,
                        });
                    }
                };
                if let Some(tag) = tag {
                    match tag {
                        LineTag::Context => {
                            p.old_remaining -= 1;
                            p.new_remaining -= 1;
                        }
                        LineTag::Add => p.new_remaining -= 1,
                        LineTag::Del => p.old_remaining -= 1,
                    }
                    if p.old_remaining < 0 || p.new_remaining < 0 {
                        let file = files.last().map(|f| f.old_path.clone()).unwrap_or_default();
                        let hunk_idx = files.last().map(|f| f.hunks.len()).unwrap_or(0);
                        return Err(DiffError::HunkCountMismatch {
                            file,
                            hunk: hunk_idx,
                            old_expected: p.hunk.old_len,
                            old_seen: (p.hunk.old_len as i64 - p.old_remaining) as u32,
                            new_expected: p.hunk.new_len,
                            new_seen: (p.hunk.new_len as i64 - p.new_remaining) as u32,
                        });
                    }
                    p.hunk.lines.push((tag, rest.to_string()));
                }
                continue;
            }
            close_hunk(&mut files, &mut current)?;
        }

        if let Some(old) = line.strip_prefix("--- ") {
            close_hunk(&mut files, &mut current)?;
            pending_old = Some(header_path(old));
        } else if let Some(new) = line.strip_prefix("+++ ") {
            if let Some(old_path) = pending_old.take() {
                files.push(FileDiff {
                    old_path,
                    new_path: header_path(new),
                    hunks: Vec::new(),
                });
            }
            // `+++` without `---` is garbage between diffs; skip.
        } else if line.starts_with("@@") {
            close_hunk(&mut files, &mut current)?;
            if files.is_empty() {
                return Err(DiffError::HunkWithoutFile(line.to_string()));
            }
            let (os, ol, ns, nl) = parse_hunk_header(line)?;
            current = Some(PendingHunk {
                hunk: Hunk {
                    old_start: os,
                    old_len: ol,
                    new_start: ns,
                    new_len: nl,
                    lines: Vec::new(),
                },
                old_remaining: ol as i64,
                new_remaining: nl as i64,
            });
        } else {
            pending_old = None; // anything else between diffs is skipped
        }
    }
    close_hunk(&mut files, &mut current)?;
    Ok(files)
}

fn header_path(rest: &str) -> String {
    // Timestamps after a tab (or run of spaces) are ignored.
    let cut = rest.split('\t').next().unwrap_or(rest);
    let cut = cut.split("    ").next().unwrap_or(cut);
    cut.trim_end().to_string()
}

fn parse_hunk_header(line: &str) -> Result<(u32, u32, u32, u32), DiffError> {
    let bad = || DiffError::BadHunkHeader(line.to_string());
    let body = line.strip_prefix("@@ -").ok_or_else(bad)?;
    let plus = body.find(" +").ok_or_else(bad)?;
    let old_part = &body[..plus];
    let rest = &body[plus + 2..];
    let end = rest.find(" @@").ok_or_else(bad)?;
    let new_part = &rest[..end];

    let parse_pair = |s: &str| -> Result<(u32, u32), DiffError> {
        let mut it = s.splitn(2, ',');
        let start = it
            .next()
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(bad)?;
        let len = match it.next() {
            Some(v) => v.parse::<u32>().map_err(|_| bad())?,
            None => 1,
        };
        Ok((start, len))
    };
    let (os, ol) = parse_pair(old_part)?;
    let (ns, nl) = parse_pair(new_part)?;
    Ok((os, ol, ns, nl))
}

/// Line range of the original file affected by a hunk:
/// `[old_start, old_start + max(old_len, new_len) - 1]`.
///
/// Using the larger of the two lengths means insertions that grow a function
/// still overlap its pre-fix span. A fully empty hunk degenerates to
/// `[old_start, old_start]`.
pub fn affected_old_range(h: &Hunk) -> (u32, u32) {
    let span = h.old_len.max(h.new_len);
    if span == 0 {
        (h.old_start, h.old_start)
    } else {
        (h.old_start, h.old_start + span - 1)
    }
}

/// True iff the two inclusive line ranges overlap.
pub fn ranges_intersect(a: (u32, u32), b: (u32, u32)) -> Result<bool, DiffError> {
    if a.0 > a.1 {
        return Err(DiffError::InvertedRange(a.0, a.1));
    }
    if b.0 > b.1 {
        return Err(DiffError::InvertedRange(b.0, b.1));
    }
    Ok(a.0.max(b.0) <= a.1.min(b.1))
}
