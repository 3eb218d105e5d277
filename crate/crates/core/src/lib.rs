//! Library for mining function-level JavaScript vulnerability datasets and
//! evaluating classifiers on them.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`advisory`] — parse raw advisory dumps (nsp / Snyk style JSON) and
//!    classify the GitHub URLs they reference.
//! 2. [`github`] — resolve classified URLs into fixing-commit sets (live or
//!    fixture mode), fetch combined patches, and identify the pre-fix
//!    snapshot commit.
//! 3. [`diff`] + [`js`] + [`dataset`] — parse unified diffs, tokenize
//!    JavaScript, extract function spans and static metrics, intersect hunk
//!    ranges with function ranges, and emit the labeled CSV dataset.
//! 4. [`ml`] + [`eval`] — from-scratch classifiers behind one train/predict
//!    interface, plus folds, re-sampling, grid search and reporting.

pub mod advisory;
pub mod dataset;
pub mod diff;
pub mod eval;
pub mod github;
pub mod js;
pub mod ml;

pub use advisory::{classify_url, classify_urls, ingest_advisories};
pub use advisory::{AdvisoryEntry, AdvisorySource, ClassifiedUrl, UrlKind};
pub use dataset::{DatasetRow, DatasetSummary};
pub use diff::{affected_old_range, parse_unified_diff, ranges_intersect, FileDiff, Hunk, LineTag};
pub use eval::{
    ConfusionCounts, EvalConfig, EvalResult, FoldPlan, ResamplingSpec, SamplingStrategy,
};
pub use github::{ApiClient, CommitInfo, FixResolution, ResolutionStatus, ReviewDecision};
pub use js::{analyze_source, FileAnalysis, MetricVector, SourceFunction, Token, TokenKind};
pub use ml::{Algorithm, FeatureMatrix, Learner, Model, ModelSpec, TrainedModel};
