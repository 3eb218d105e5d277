//! JavaScript tokenization, function extraction and static metrics.

pub mod functions;
pub mod lexer;
pub mod metrics;

use serde::Serialize;
use thiserror::Error;

pub use functions::{extract_functions, ExtractError, SourceFunction};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use metrics::{compute_metrics, halstead_counts, MetricValue, MetricVector};

#[derive(Debug, Error)]
pub enum JsError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

/// Tokens, functions and per-function metrics of one source file.
#[derive(Debug, Clone)]
pub struct FileAnalysis {
    pub path: String,
    pub tokens: Vec<Token>,
    pub functions: Vec<SourceFunction>,
    pub metrics: Vec<MetricVector>,
}

/// Tokenize, extract functions, qualify names and compute metrics for one
/// file. Lexical or structural failures skip the whole file upstream.
pub fn analyze_source(source: &str, path: &str) -> Result<FileAnalysis, JsError> {
    let tokens = tokenize(source)?;
    let functions = extract_functions(&tokens, path)?;
    let metrics = compute_metrics(&tokens, &functions);
    Ok(FileAnalysis {
        path: path.to_string(),
        tokens,
        functions,
        metrics,
    })
}

/// One function's analysis as a flat record, for `analyze --file` output.
#[derive(Debug, Serialize)]
pub struct FunctionReport<'a> {
    pub file: &'a str,
    pub name: &'a str,
    pub qualified_name: &'a str,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub metrics: &'a MetricVector,
}

impl FileAnalysis {
    pub fn reports(&self) -> Vec<FunctionReport<'_>> {
        self.functions
            .iter()
            .zip(&self.metrics)
            .map(|(f, m)| FunctionReport {
                file: &self.path,
                name: &f.short_name,
                qualified_name: &f.qualified_name,
                start_line: f.start_line,
                start_col: f.start_col,
                end_line: f.end_line,
                end_col: f.end_col,
                metrics: m,
            })
            .collect()
    }
}
