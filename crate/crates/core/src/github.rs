//! Fixing-commit resolution through the GitHub REST API.
//!
//! URLs classified by [`crate::advisory`] are turned into per-advisory
//! fixing-commit sets: commit URLs contribute their sha directly, pull
//! request URLs contribute every commit of the PR, and issue URLs only feed a
//! review queue that a human decides on offline. Once the set is final, the
//! per-commit diffs are concatenated into one combined patch in chronological
//! order and the parent of the earliest commit becomes the snapshot to label.
//!
//! The client runs either live (token + on-disk response cache, resumable)
//! or against a fixture directory that mirrors the endpoint paths; fixture
//! mode performs no network I/O, observable via [`ApiClient::network_calls`].

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::advisory::{
    classify_url, harvest_urls_from_text, AdvisoryEntry, ClassifiedUrl, UrlKind,
};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("resource not found: {0}")]
    NotFound(String),
    #[error("rate limited after {attempts} attempts: {url}")]
    RateLimited { url: String, attempts: u32 },
    #[error("http error for {url}: {message}")]
    Http { url: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed payload from {url}: {message}")]
    BadPayload { url: String, message: String },
    #[error("advisory {advisory}: no fixing commits to fetch a patch for")]
    NoFixingCommits { advisory: String },
    #[error("decision references unknown candidate commit {sha} for {advisory}")]
    UnknownCandidate { sha: String, advisory: String },
    #[error("decision for advisory {got} applied to {expected}")]
    WrongAdvisory { got: String, expected: String },
}

/// Commit metadata needed for chronological ordering and parent lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitInfo {
    pub sha: String,
    pub parents: Vec<String>,
    /// ISO-8601 UTC timestamps as returned by the API; lexicographic order
    /// is chronological order for these.
    pub author_date: String,
    pub committer_date: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    /// At least one fixing commit is known.
    Resolved,
    /// Nothing usable was found (or every reference was dead).
    Unresolved,
}

/// A URL found in issue comments, waiting for a human decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewCandidate {
    pub url: String,
    pub issue_number: u64,
}

/// The resolved fixing-commit set of one advisory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixResolution {
    pub advisory_id: String,
    pub repo_slug: String,
    /// Insertion-ordered, duplicate-free.
    pub fixing_commits: Vec<String>,
    pub review_candidates: Vec<ReviewCandidate>,
    pub sha_pre: Option<String>,
    /// File name of the stored combined patch, relative to the resolutions
    /// directory.
    pub combined_patch: Option<String>,
    pub status: ResolutionStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dead_urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// One human judgment about a review candidate commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub advisory_id: String,
    pub commit_sha: String,
    pub accepted: bool,
    #[serde(default)]
    pub reviewer_note: String,
}

enum ClientInner {
    Fixture {
        root: PathBuf,
    },
    Live {
        token: Option<String>,
        cache_dir: PathBuf,
        base: String,
        max_retries: u32,
        backoff_ms: u64,
    },
}

/// GitHub REST client, shareable across threads. The cache write path is
/// atomic per key (temp file + rename), so concurrent resolutions are safe.
pub struct ApiClient {
    inner: ClientInner,
    network_calls: AtomicU64,
}

impl ApiClient {
    /// Client that reads payloads from a directory tree mirroring endpoint
    /// paths; never touches the network.
    pub fn fixture(root: impl Into<PathBuf>) -> Self {
        ApiClient {
            inner: ClientInner::Fixture { root: root.into() },
            network_calls: AtomicU64::new(0),
        }
    }

    /// Live client with an on-disk response cache keyed by URL.
    pub fn live(token: Option<String>, cache_dir: impl Into<PathBuf>) -> Self {
        ApiClient {
            inner: ClientInner::Live {
                token,
                cache_dir: cache_dir.into(),
                base: "https://api.github.com".to_string(),
                max_retries: 4,
                backoff_ms: 1000,
            },
            network_calls: AtomicU64::new(0),
        }
    }

    /// Number of HTTP requests actually sent. Always zero in fixture mode.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn get_commit(&self, slug: &str, sha: &str) -> Result<CommitInfo, ResolveError> {
        match &self.inner {
            ClientInner::Fixture { root } => {
                let path = root.join(format!("repos/{slug}/commits/{sha}.json"));
                let value: Value = read_fixture_json(&path)?;
                parse_commit(&value, &path.display().to_string())
            }
            ClientInner::Live { base, .. } => {
                let url = format!("{base}/repos/{slug}/commits/{sha}");
                let body = self.http_cached(&url, "application/vnd.github+json")?;
                let value: Value =
                    serde_json::from_str(&body).map_err(|e| ResolveError::BadPayload {
                        url: url.clone(),
                        message: e.to_string(),
                    })?;
                parse_commit(&value, &url)
            }
        }
    }

    pub fn list_pull_commits(
        &self,
        slug: &str,
        number: u64,
    ) -> Result<Vec<CommitInfo>, ResolveError> {
        match &self.inner {
            ClientInner::Fixture { root } => {
                let path = root.join(format!("repos/{slug}/pulls/{number}/commits.json"));
                let value: Value = read_fixture_json(&path)?;
                parse_commit_list(&value, &path.display().to_string())
            }
            ClientInner::Live { base, .. } => {
                let mut all = Vec::new();
                let mut page = 1;
                loop {
                    let url = format!(
                        "{base}/repos/{slug}/pulls/{number}/commits?per_page=100&page={page}"
                    );
                    let body = self.http_cached(&url, "application/vnd.github+json")?;
                    let value: Value =
                        serde_json::from_str(&body).map_err(|e| ResolveError::BadPayload {
                            url: url.clone(),
                            message: e.to_string(),
                        })?;
                    let chunk = parse_commit_list(&value, &url)?;
                    let done = chunk.len() < 100;
                    all.extend(chunk);
                    if done {
                        break;
                    }
                    page += 1;
                }
                Ok(all)
            }
        }
    }

    /// Bodies of all comments on an issue.
    pub fn list_issue_comments(
        &self,
        slug: &str,
        number: u64,
    ) -> Result<Vec<String>, ResolveError> {
        match &self.inner {
            ClientInner::Fixture { root } => {
                let path = root.join(format!("repos/{slug}/issues/{number}/comments.json"));
                let value: Value = read_fixture_json(&path)?;
                parse_comment_bodies(&value)
            }
            ClientInner::Live { base, .. } => {
                let mut all = Vec::new();
                let mut page = 1;
                loop {
                    let url = format!(
                        "{base}/repos/{slug}/issues/{number}/comments?per_page=100&page={page}"
                    );
                    let body = self.http_cached(&url, "application/vnd.github+json")?;
                    let value: Value =
                        serde_json::from_str(&body).map_err(|e| ResolveError::BadPayload {
                            url: url.clone(),
                            message: e.to_string(),
                        })?;
                    let chunk = parse_comment_bodies(&value)?;
                    let done = chunk.len() < 100;
                    all.extend(chunk);
                    if done {
                        break;
                    }
                    page += 1;
                }
                Ok(all)
            }
        }
    }

    /// Unified diff of one commit (the `.diff` media type).
    pub fn get_commit_diff(&self, slug: &str, sha: &str) -> Result<String, ResolveError> {
        match &self.inner {
            ClientInner::Fixture { root } => {
                let path = root.join(format!("repos/{slug}/commits/{sha}.diff"));
                fs::read_to_string(&path).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => {
                        ResolveError::NotFound(path.display().to_string())
                    }
                    _ => ResolveError::Io {
                        path: path.display().to_string(),
                        source: e,
                    },
                })
            }
            ClientInner::Live { base, .. } => {
                let url = format!("{base}/repos/{slug}/commits/{sha}");
                self.http_cached(&url, "application/vnd.github.diff")
            }
        }
    }

    fn http_cached(&self, url: &str, accept: &str) -> Result<String, ResolveError> {
        let ClientInner::Live {
            token,
            cache_dir,
            max_retries,
            backoff_ms,
            ..
        } = &self.inner
        else {
            unreachable!("http_cached is only called in live mode");
        };

        let digest = Sha256::digest(format!("{url} {accept}").as_bytes());
        let key: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let cache_path = cache_dir.join(&key);
        if let Ok(cached) = fs::read_to_string(&cache_path) {
            return Ok(cached);
        }

        let mut attempt = 0u32;
        loop {
            attempt += 1;
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let mut req = ureq::get(url)
                .header("Accept", accept)
                .header("User-Agent", "jsvuln-dataset-builder");
            if let Some(t) = token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            match req.call() {
                Ok(mut resp) => {
                    let body = resp
                        .body_mut()
                        .with_config()
                        .limit(64 * 1024 * 1024)
                        .read_to_string()
                        .map_err(|e| ResolveError::Http {
                            url: url.to_string(),
                            message: e.to_string(),
                        })?;
                    write_cache_atomic(cache_dir, &cache_path, &body).map_err(|e| {
                        ResolveError::Io {
                            path: cache_path.display().to_string(),
                            source: e,
                        }
                    })?;
                    return Ok(body);
                }
                Err(ureq::Error::StatusCode(404)) => {
                    return Err(ResolveError::NotFound(url.to_string()));
                }
                Err(ureq::Error::StatusCode(code)) if code == 403 || code == 429 || code >= 500 => {
                    if attempt > *max_retries {
                        return Err(ResolveError::RateLimited {
                            url: url.to_string(),
                            attempts: attempt,
                        });
                    }
                    let wait = backoff_ms * 2u64.pow(attempt - 1);
                    log::warn!(target: "resolve", "HTTP {code} for {url}; retrying in {wait} ms");
                    std::thread::sleep(std::time::Duration::from_millis(wait));
                }
                Err(e) => {
                    return Err(ResolveError::Http {
                        url: url.to_string(),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
}

fn write_cache_atomic(dir: &Path, path: &Path, body: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)
}

fn read_fixture_json(path: &Path) -> Result<Value, ResolveError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ResolveError::NotFound(path.display().to_string()),
        _ => ResolveError::Io {
            path: path.display().to_string(),
            source: e,
        },
    })?;
    serde_json::from_str(&text).map_err(|e| ResolveError::BadPayload {
        url: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_commit(value: &Value, origin: &str) -> Result<CommitInfo, ResolveError> {
    let bad = |m: &str| ResolveError::BadPayload {
        url: origin.to_string(),
        message: m.to_string(),
    };
    let sha = value
        .get("sha")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing sha"))?
        .to_string();
    let parents = value
        .get("parents")
        .and_then(Value::as_array)
        .map(|ps| {
            ps.iter()
                .filter_map(|p| p.get("sha").and_then(Value::as_str))
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    let author_date = value
        .pointer("/commit/author/date")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing commit.author.date"))?
        .to_string();
    let committer_date = value
        .pointer("/commit/committer/date")
        .and_then(Value::as_str)
        .unwrap_or(&author_date)
        .to_string();
    Ok(CommitInfo {
        sha,
        parents,
        author_date,
        committer_date,
    })
}

fn parse_commit_list(value: &Value, origin: &str) -> Result<Vec<CommitInfo>, ResolveError> {
    let arr = value.as_array().ok_or_else(|| ResolveError::BadPayload {
        url: origin.to_string(),
        message: "expected a JSON array of commits".to_string(),
    })?;
    arr.iter().map(|v| parse_commit(v, origin)).collect()
}

fn parse_comment_bodies(value: &Value) -> Result<Vec<String>, ResolveError> {
    Ok(value
        .as_array()
        .map(|arr| {
            arr.iter()
                .filter_map(|c| c.get("body").and_then(Value::as_str))
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default())
}

/// Resolve an advisory's classified URLs into a [`FixResolution`].
///
/// Commit URLs feed `fixing_commits` directly; PR URLs contribute every
/// commit of the PR; issue URLs only contribute `review_candidates` (every
/// URL mentioned in the issue comments). Dead references are recorded and
/// resolution continues.
pub fn resolve_fixing_commits(
    entry: &AdvisoryEntry,
    urls: &[ClassifiedUrl],
    client: &ApiClient,
) -> Result<FixResolution, ResolveError> {
    let repo_slug = urls
        .iter()
        .find(|u| {
            matches!(
                u.kind,
                UrlKind::Commit | UrlKind::PullRequest | UrlKind::Issue
            ) && u.repo_slug.is_some()
        })
        .and_then(|u| u.repo_slug.clone());

    let mut res = FixResolution {
        advisory_id: entry.id.clone(),
        repo_slug: repo_slug.clone().unwrap_or_default(),
        fixing_commits: Vec::new(),
        review_candidates: Vec::new(),
        sha_pre: None,
        combined_patch: None,
        status: ResolutionStatus::Unresolved,
        dead_urls: Vec::new(),
        warnings: Vec::new(),
    };
    let Some(slug) = repo_slug else {
        return Ok(res);
    };

    let mut seen_commits: BTreeSet<String> = BTreeSet::new();
    let mut seen_candidates: BTreeSet<String> = BTreeSet::new();
    let mut push_commit = |res: &mut FixResolution, sha: String| {
        if seen_commits.insert(sha.clone()) {
            res.fixing_commits.push(sha);
        }
    };

    for u in urls {
        match u.kind {
            UrlKind::Commit => {
                if u.repo_slug.as_deref() != Some(slug.as_str()) {
                    res.warnings
                        .push(format!("commit in foreign repo skipped: {}", u.url));
                    continue;
                }
                push_commit(&mut res, u.ref_id.clone().expect("commit has sha"));
            }
            UrlKind::PullRequest => {
                if u.repo_slug.as_deref() != Some(slug.as_str()) {
                    res.warnings
                        .push(format!("pull request in foreign repo skipped: {}", u.url));
                    continue;
                }
                let number: u64 = u.ref_id.as_deref().unwrap_or("0").parse().unwrap_or(0);
                match client.list_pull_commits(&slug, number) {
                    Ok(commits) => {
                        for c in commits {
                            push_commit(&mut res, c.sha);
                        }
                    }
                    Err(ResolveError::NotFound(_)) => {
                        log::warn!(target: "resolve", "{}: dead PR url {}", entry.id, u.url);
                        res.dead_urls.push(u.url.clone());
                    }
                    Err(e) => return Err(e),
                }
            }
            UrlKind::Issue => {
                let number: u64 = u.ref_id.as_deref().unwrap_or("0").parse().unwrap_or(0);
                let issue_slug = u.repo_slug.clone().unwrap_or_else(|| slug.clone());
                match client.list_issue_comments(&issue_slug, number) {
                    Ok(bodies) => {
                        let mut seen = BTreeSet::new();
                        let mut mentioned = Vec::new();
                        for body in &bodies {
                            harvest_urls_from_text(body, &mut seen, &mut mentioned);
                        }
                        for m in mentioned {
                            if seen_candidates.insert(m.clone()) {
                                res.review_candidates.push(ReviewCandidate {
                                    url: m,
                                    issue_number: number,
                                });
                            }
                        }
                    }
                    Err(ResolveError::NotFound(_)) => {
                        log::warn!(target: "resolve", "{}: dead issue url {}", entry.id, u.url);
                        res.dead_urls.push(u.url.clone());
                    }
                    Err(e) => return Err(e),
                }
            }
            UrlKind::Other => {}
        }
    }

    if !res.fixing_commits.is_empty() {
        res.status = ResolutionStatus::Resolved;
    }
    Ok(res)
}

/// Shas that review candidates of a resolution expand to (only commit URLs
/// are decidable).
pub fn candidate_shas(res: &FixResolution) -> Vec<String> {
    res.review_candidates
        .iter()
        .filter_map(|c| {
            let cls = classify_url(&c.url);
            if cls.kind == UrlKind::Commit {
                cls.ref_id
            } else {
                None
            }
        })
        .collect()
}

/// Apply human review decisions: accepted candidates move into the fixing
/// set, rejected ones are dropped, and decided candidates leave the queue.
pub fn apply_review_decisions(
    mut res: FixResolution,
    decisions: &[ReviewDecision],
) -> Result<FixResolution, ResolveError> {
    let expansion = candidate_shas(&res);
    for d in decisions {
        if d.advisory_id != res.advisory_id {
            return Err(ResolveError::WrongAdvisory {
                got: d.advisory_id.clone(),
                expected: res.advisory_id.clone(),
            });
        }
        if !expansion.contains(&d.commit_sha) {
            return Err(ResolveError::UnknownCandidate {
                sha: d.commit_sha.clone(),
                advisory: res.advisory_id.clone(),
            });
        }
        if d.accepted && !res.fixing_commits.contains(&d.commit_sha) {
            res.fixing_commits.push(d.commit_sha.clone());
        }
        res.review_candidates.retain(|c| {
            let cls = classify_url(&c.url);
            !(cls.kind == UrlKind::Commit && cls.ref_id.as_deref() == Some(d.commit_sha.as_str()))
        });
    }
    if !res.fixing_commits.is_empty() {
        res.status = ResolutionStatus::Resolved;
    }
    Ok(res)
}

/// Fetch per-commit diffs, concatenate them in chronological order and set
/// `sha_pre` to the parent of the first commit in time.
///
/// "First in time" is ordered by author timestamp, ties broken by committer
/// timestamp then sha. A merge commit as the earliest fix contributes its
/// first parent.
pub fn fetch_combined_patch(
    mut res: FixResolution,
    client: &ApiClient,
) -> Result<(FixResolution, String), ResolveError> {
    if res.fixing_commits.is_empty() {
        return Err(ResolveError::NoFixingCommits {
            advisory: res.advisory_id.clone(),
        });
    }
    let mut infos = Vec::new();
    for sha in &res.fixing_commits {
        infos.push(client.get_commit(&res.repo_slug, sha)?);
    }
    infos.sort_by(|a, b| {
        (&a.author_date, &a.committer_date, &a.sha).cmp(&(
            &b.author_date,
            &b.committer_date,
            &b.sha,
        ))
    });

    res.sha_pre = infos[0].parents.first().cloned();

    let mut patch = String::new();
    for info in &infos {
        let diff = client.get_commit_diff(&res.repo_slug, &info.sha)?;
        patch.push_str(&diff);
        if !diff.ends_with('\n') {
            patch.push('\n');
        }
    }
    res.combined_patch = Some(format!("{}.patch", sanitize_id(&res.advisory_id)));
    Ok((res, patch))
}

/// Advisory id as a safe file stem.
pub fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
