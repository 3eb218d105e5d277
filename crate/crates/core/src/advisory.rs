//! Advisory dump ingestion and URL classification.
//!
//! Raw vulnerability dumps are unstructured: URLs of fixing commits, pull
//! requests or issues can appear in any string field of an entry, not only in
//! a `references` array. Ingestion therefore harvests URLs from every string
//! value of a record and normalizes both nsp-style and Snyk-style JSON into
//! one [`AdvisoryEntry`] shape.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown advisory source `{0}` (expected nsp or snyk)")]
    UnknownSource(String),
}

/// Which database an advisory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvisorySource {
    Nsp,
    Snyk,
}

impl fmt::Display for AdvisorySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdvisorySource::Nsp => write!(f, "nsp"),
            AdvisorySource::Snyk => write!(f, "snyk"),
        }
    }
}

impl FromStr for AdvisorySource {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nsp" => Ok(AdvisorySource::Nsp),
            "snyk" => Ok(AdvisorySource::Snyk),
            other => Err(IngestError::UnknownSource(other.to_string())),
        }
    }
}

/// One normalized vulnerability record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryEntry {
    /// Source-qualified id, e.g. `nsp:118`.
    pub id: String,
    pub source: AdvisorySource,
    pub module_name: String,
    pub title: String,
    pub description: String,
    /// Every absolute URL found anywhere in the record, in document order,
    /// first occurrence kept.
    pub reference_urls: Vec<String>,
}

/// How a reference URL is used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlKind {
    Commit,
    PullRequest,
    Issue,
    Other,
}

/// A reference URL with its GitHub coordinates, when it has any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedUrl {
    pub url: String,
    pub kind: UrlKind,
    /// `owner/name`, present for any github.com URL with both segments.
    pub repo_slug: Option<String>,
    /// Commit sha (lowercased) or PR/issue number, depending on `kind`.
    pub ref_id: Option<String>,
}

/// Result of ingesting one dump: parsed entries plus a count of records that
/// had no parseable body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub entries: Vec<AdvisoryEntry>,
    pub skipped: usize,
}

/// Ingest an advisory dump from a JSON file or a directory of JSON files.
///
/// A file is either a JSON array of records or a single record object; the
/// Snyk GitHub-mirror layout is read as a recursive directory of JSON files.
/// Records with no parseable body (non-objects, or objects without any id)
/// are skipped and counted. An unreadable file is fatal.
pub fn ingest_advisories(
    path: &Path,
    source: AdvisorySource,
) -> Result<IngestOutcome, IngestError> {
    let mut entries = Vec::new();
    let mut skipped = 0usize;

    let mut files: Vec<std::path::PathBuf> = Vec::new();
    if path.is_dir() {
        for e in WalkDir::new(path).sort_by_file_name() {
            let e = e.map_err(|err| IngestError::Io {
                path: path.display().to_string(),
                source: err.into(),
            })?;
            if e.file_type().is_file() && e.path().extension().map(|x| x == "json").unwrap_or(false)
            {
                files.push(e.path().to_path_buf());
            }
        }
    } else {
        files.push(path.to_path_buf());
    }

    for file in files {
        let text = fs::read_to_string(&file).map_err(|err| IngestError::Io {
            path: file.display().to_string(),
            source: err,
        })?;
        let value: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(err) => {
                log::warn!(target: "ingest", "skipping {}: invalid JSON ({err})", file.display());
                skipped += 1;
                continue;
            }
        };
        let records: Vec<Value> = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        for record in records {
            match normalize_record(&record, source) {
                Some(entry) => entries.push(entry),
                None => {
                    log::warn!(target: "ingest", "skipping record without parseable body in {}", file.display());
                    skipped += 1;
                }
            }
        }
    }

    Ok(IngestOutcome { entries, skipped })
}

fn normalize_record(record: &Value, source: AdvisorySource) -> Option<AdvisoryEntry> {
    let obj = record.as_object()?;
    let raw_id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return None,
    };
    let id = format!("{source}:{raw_id}");

    let get_str = |keys: &[&str]| -> String {
        for k in keys {
            if let Some(Value::String(s)) = obj.get(*k) {
                return s.clone();
            }
        }
        String::new()
    };
    let module_name = get_str(&[
        "module_name",
        "moduleName",
        "module",
        "package",
        "packageName",
    ]);
    let title = get_str(&["title"]);
    let description = get_str(&["description", "overview", "details"]);

    let mut seen = BTreeSet::new();
    let mut urls = Vec::new();
    harvest_urls(record, &mut seen, &mut urls);

    Some(AdvisoryEntry {
        id,
        source,
        module_name,
        title,
        description,
        reference_urls: urls,
    })
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"https?://[^\s"'<>\\\)\]\}]+"#).expect("valid regex"))
}

/// Pull absolute URLs out of free text, trimming trailing punctuation that
/// markdown and prose attach to them.
pub fn harvest_urls_from_text(text: &str, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
    for m in url_regex().find_iter(text) {
        let mut url = m.as_str();
        while let Some(stripped) = url.strip_suffix(['.', ',', ';', ':', '!', '?']) {
            url = stripped;
        }
        if !is_valid_absolute_url(url) {
            continue;
        }
        if seen.insert(url.to_string()) {
            out.push(url.to_string());
        }
    }
}

fn harvest_urls(value: &Value, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
    match value {
        Value::String(s) => harvest_urls_from_text(s, seen, out),
        Value::Array(items) => {
            for v in items {
                harvest_urls(v, seen, out);
            }
        }
        Value::Object(map) => {
            for (_, v) in map {
                harvest_urls(v, seen, out);
            }
        }
        _ => {}
    }
}

fn is_valid_absolute_url(url: &str) -> bool {
    let rest = url
        .strip_prefix("https://")
        .or_else(|| url.strip_prefix("http://"));
    match rest {
        Some(rest) => {
            let host = rest.split(['/', '?', '#']).next().unwrap_or("");
            !host.is_empty()
        }
        None => false,
    }
}

/// Classify every reference URL of an entry, preserving order. Total and
/// deterministic: output length always equals input length.
pub fn classify_urls(entry: &AdvisoryEntry) -> Vec<ClassifiedUrl> {
    entry
        .reference_urls
        .iter()
        .map(|u| classify_url(u))
        .collect()
}

/// Classify one URL. GitHub `.../commit/<sha>` is a commit, `.../pull/<n>` a
/// pull request, `.../issues/<n>` an issue; everything else is `other`.
pub fn classify_url(url: &str) -> ClassifiedUrl {
    let other = |slug: Option<String>| ClassifiedUrl {
        url: url.to_string(),
        kind: UrlKind::Other,
        repo_slug: slug,
        ref_id: None,
    };

    let rest = match url
        .strip_prefix("https://")
        .or_else(|| url.strip_prefix("http://"))
    {
        Some(r) => r,
        None => return other(None),
    };
    let mut host_and_path = rest.splitn(2, '/');
    let host = host_and_path.next().unwrap_or("");
    let path = host_and_path.next().unwrap_or("");
    if host != "github.com" && host != "www.github.com" {
        return other(None);
    }
    // Query string and fragment never matter for classification.
    let path = path.split(['?', '#']).next().unwrap_or("");
    let segs: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    if segs.len() < 2 {
        return other(None);
    }
    let slug = format!("{}/{}", segs[0], segs[1]);

    if segs.len() >= 4 {
        let ref_part = segs[3];
        match segs[2] {
            "commit" => {
                let sha = ref_part.to_ascii_lowercase();
                if sha.len() >= 7 && sha.len() <= 40 && sha.chars().all(|c| c.is_ascii_hexdigit()) {
                    return ClassifiedUrl {
                        url: url.to_string(),
                        kind: UrlKind::Commit,
                        repo_slug: Some(slug),
                        ref_id: Some(sha),
                    };
                }
            }
            "pull" => {
                if ref_part.parse::<u64>().map(|n| n > 0).unwrap_or(false) {
                    return ClassifiedUrl {
                        url: url.to_string(),
                        kind: UrlKind::PullRequest,
                        repo_slug: Some(slug),
                        ref_id: Some(ref_part.to_string()),
                    };
                }
            }
            "issues" => {
                if ref_part.parse::<u64>().map(|n| n > 0).unwrap_or(false) {
                    return ClassifiedUrl {
                        url: url.to_string(),
                        kind: UrlKind::Issue,
                        repo_slug: Some(slug),
                        ref_id: Some(ref_part.to_string()),
                    };
                }
            }
            _ => {}
        }
    }
    other(Some(slug))
}
