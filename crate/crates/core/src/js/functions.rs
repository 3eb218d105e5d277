//! Function boundary extraction and qualified naming over the token stream.
//!
//! Recognized forms: `function` declarations and expressions (including
//! `async` and generators), object/class methods written as
//! `name(params) { ... }` (with `get`/`set`/`static`/`async`/`*` modifiers),
//! and arrow functions with block or expression bodies. Spans come from brace
//! matching; an expression-bodied arrow extends to the end of its expression.
//!
//! Heuristic limits: computed-name methods (`[expr]() {}`) and keyword-named
//! methods are not recognized as functions themselves; their bodies still
//! nest correctly inside whatever encloses them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexer::{Token, TokenKind};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("line {line}: unbalanced braces or parentheses")]
    Unbalanced { line: u32 },
}

/// A JavaScript function with its position span and token extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFunction {
    pub short_name: String,
    /// Scope chain joined by `.`, unique within the file; filled in by
    /// [`qualify_names`].
    pub qualified_name: String,
    pub file_path: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
    /// Inclusive token index range of the whole function in the file stream.
    pub token_range: (usize, usize),
    /// Inclusive token index range of the body (inside the braces, or the
    /// arrow expression). Empty bodies are represented as `None`.
    pub body_range: Option<(usize, usize)>,
    pub param_count: u32,
    /// Index of the enclosing function in the extraction result.
    pub parent: Option<usize>,
    /// Indices of directly nested functions.
    pub children: Vec<usize>,
    #[serde(skip)]
    anonymous: bool,
}

impl SourceFunction {
    pub fn line_span(&self) -> (u32, u32) {
        (self.start_line, self.end_line)
    }
}

/// A `class` scope used only for qualified naming.
struct ClassScope {
    name: String,
    token_range: (usize, usize),
}

struct Candidate {
    name: Option<String>,
    start: usize,
    end: usize,
    body: Option<(usize, usize)>,
    params: u32,
}

/// Extract all functions from a token stream. Tokens must come from
/// [`super::lexer::tokenize`] so that positions are ordered.
pub fn extract_functions(
    tokens: &[Token],
    file_path: &str,
) -> Result<Vec<SourceFunction>, ExtractError> {
    // Significant-token index: structure scanning ignores comments/EOLs.
    let sig: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_significant())
        .map(|(i, _)| i)
        .collect();

    let matcher = BraceMatcher::build(tokens, &sig)?;

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut classes: Vec<ClassScope> = Vec::new();

    let mut si = 0usize;
    while si < sig.len() {
        let ti = sig[si];
        let tok = &tokens[ti];
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "function") => {
                if let Some(c) = scan_function_keyword(tokens, &sig, si, &matcher) {
                    candidates.push(c);
                }
            }
            (TokenKind::Keyword, "class") => {
                if let Some(cs) = scan_class(tokens, &sig, si, &matcher) {
                    classes.push(cs);
                }
            }
            (TokenKind::Punctuator, "=>") => {
                if let Some(c) = scan_arrow(tokens, &sig, si, &matcher) {
                    candidates.push(c);
                }
            }
            (TokenKind::Identifier | TokenKind::String | TokenKind::Number, _) => {
                if let Some(c) = scan_method(tokens, &sig, si, &matcher) {
                    candidates.push(c);
                }
            }
            _ => {}
        }
        si += 1;
    }

    candidates.sort_by_key(|c| (c.start, usize::MAX - c.end));
    candidates.dedup_by_key(|c| c.start);

    let mut fns: Vec<SourceFunction> = candidates
        .into_iter()
        .map(|c| {
            let start_tok = &tokens[c.start];
            let end_tok = &tokens[c.end];
            SourceFunction {
                anonymous: c.name.is_none(),
                short_name: c.name.unwrap_or_else(|| {
                    format!("<anonymous@L{}C{}>", start_tok.line, start_tok.column)
                }),
                qualified_name: String::new(),
                file_path: file_path.to_string(),
                start_line: start_tok.line,
                start_col: start_tok.column,
                end_line: end_tok.end_line,
                end_col: end_tok.end_col,
                token_range: (c.start, c.end),
                body_range: c.body,
                param_count: c.params,
                parent: None,
                children: Vec::new(),
            }
        })
        .collect();

    // Containment: functions are sorted by start; the nearest enclosing span
    // still open is the parent.
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..fns.len() {
        while let Some(&top) = stack.last() {
            if fns[top].token_range.1 >= fns[i].token_range.1 {
                break;
            }
            stack.pop();
        }
        if let Some(&top) = stack.last() {
            fns[i].parent = Some(top);
            fns[top].children.push(i);
        }
        stack.push(i);
    }

    qualify_names(&mut fns, &classes);
    Ok(fns)
}

/// Assign qualified names: enclosing scope names outermost-first joined by
/// `.`, then the short name. Class bodies contribute their class name to the
/// chain. Name collisions within a file get a positional suffix.
fn qualify_names(fns: &mut [SourceFunction], classes: &[ClassScope]) {
    let n = fns.len();
    let mut names: Vec<String> = Vec::with_capacity(n);
    for i in 0..n {
        let mut chain: Vec<String> = Vec::new();
        let mut cur = fns[i].parent;
        let mut inner_start = fns[i].token_range.0;
        loop {
            let outer_start = cur.map(|p| fns[p].token_range.0).unwrap_or(0);
            // Classes nested between this function and its enclosing function.
            let mut between: Vec<&ClassScope> = classes
                .iter()
                .filter(|c| {
                    c.token_range.0 >= outer_start
                        && c.token_range.0 < inner_start
                        && c.token_range.1 >= fns[i].token_range.1
                })
                .collect();
            between.sort_by_key(|c| c.token_range.0);
            for c in between.iter().rev() {
                chain.push(c.name.clone());
            }
            match cur {
                Some(p) => {
                    chain.push(fns[p].short_name.clone());
                    inner_start = fns[p].token_range.0;
                    cur = fns[p].parent;
                }
                None => break,
            }
        }
        chain.reverse();
        chain.push(fns[i].short_name.clone());
        names.push(chain.join("."));
    }

    // Positional suffix for duplicates beyond the first occurrence.
    for i in 0..n {
        let dup = names[..i].iter().any(|m| *m == names[i]);
        let name = if dup {
            format!("{}@L{}C{}", names[i], fns[i].start_line, fns[i].start_col)
        } else {
            names[i].clone()
        };
        fns[i].qualified_name = name;
    }
}

/// Pre-computed matching bracket positions over significant tokens.
struct BraceMatcher {
    /// For a significant-token index holding `{`/`(`/`[`, the significant
    /// index of its closing counterpart.
    close_of: Vec<Option<usize>>,
}

impl BraceMatcher {
    fn build(tokens: &[Token], sig: &[usize]) -> Result<Self, ExtractError> {
        let mut close_of = vec![None; sig.len()];
        let mut stack: Vec<(usize, &str)> = Vec::new();
        for (si, &ti) in sig.iter().enumerate() {
            let t = &tokens[ti];
            if t.kind != TokenKind::Punctuator {
                continue;
            }
            match t.text.as_str() {
                "{" | "(" | "[" => stack.push((si, t.text.as_str())),
                "}" | ")" | "]" => {
                    let want = match t.text.as_str() {
                        "}" => "{",
                        ")" => "(",
                        _ => "[",
                    };
                    match stack.pop() {
                        Some((open, kind)) if kind == want => close_of[open] = Some(si),
                        _ => {
                            return Err(ExtractError::Unbalanced { line: t.line });
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some((open, _)) = stack.first() {
            let ti = sig[*open];
            return Err(ExtractError::Unbalanced {
                line: tokens[ti].line,
            });
        }
        Ok(Self { close_of })
    }
}

fn sig_text<'t>(tokens: &'t [Token], sig: &[usize], si: usize) -> Option<&'t Token> {
    sig.get(si).map(|&ti| &tokens[ti])
}

/// Count parameters: top-level comma-separated non-empty segments of the
/// parenthesized group starting at `open` (significant index).
fn count_params(tokens: &[Token], sig: &[usize], open: usize, close: usize) -> u32 {
    if close == open + 1 {
        return 0;
    }
    let mut depth = 0i32;
    let mut count = 1u32;
    for si in (open + 1)..close {
        let t = &tokens[sig[si]];
        if t.kind != TokenKind::Punctuator {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => count += 1,
            _ => {}
        }
    }
    count
}

/// `function` keyword at significant index `si`: optionally preceded by
/// `async`, optionally `*` and a name after it, then `(params)` `{body}`.
fn scan_function_keyword(
    tokens: &[Token],
    sig: &[usize],
    si: usize,
    m: &BraceMatcher,
) -> Option<Candidate> {
    let mut start_si = si;
    if si > 0 {
        let prev = &tokens[sig[si - 1]];
        if prev.kind == TokenKind::Keyword && prev.text == "async" {
            start_si = si - 1;
        }
    }
    let mut j = si + 1;
    if sig_text(tokens, sig, j)
        .map(|t| t.text == "*")
        .unwrap_or(false)
    {
        j += 1;
    }
    let mut name = None;
    if let Some(t) = sig_text(tokens, sig, j) {
        if t.kind == TokenKind::Identifier {
            name = Some(t.text.clone());
            j += 1;
        }
    }
    let open_paren = j;
    if !sig_text(tokens, sig, open_paren)
        .map(|t| t.text == "(")
        .unwrap_or(false)
    {
        return None;
    }
    let close_paren = m.close_of[open_paren]?;
    let open_brace = close_paren + 1;
    if !sig_text(tokens, sig, open_brace)
        .map(|t| t.text == "{")
        .unwrap_or(false)
    {
        return None;
    }
    let close_brace = m.close_of[open_brace]?;

    let name = name.or_else(|| infer_assigned_name(tokens, sig, start_si));
    let body = if close_brace > open_brace + 1 {
        Some((sig[open_brace] + 1, sig[close_brace] - 1))
    } else {
        None
    };
    Some(Candidate {
        name,
        start: sig[start_si],
        end: sig[close_brace],
        body,
        params: count_params(tokens, sig, open_paren, close_paren),
    })
}

/// `class Name ... { ... }` scope for qualified naming.
fn scan_class(tokens: &[Token], sig: &[usize], si: usize, m: &BraceMatcher) -> Option<ClassScope> {
    let name_tok = sig_text(tokens, sig, si + 1)?;
    let (name, mut j) = if name_tok.kind == TokenKind::Identifier {
        (name_tok.text.clone(), si + 2)
    } else {
        (
            format!(
                "<class@L{}C{}>",
                tokens[sig[si]].line, tokens[sig[si]].column
            ),
            si + 1,
        )
    };
    // Skip `extends <expr>` up to the class body brace.
    while let Some(t) = sig_text(tokens, sig, j) {
        if t.text == "{" {
            break;
        }
        if t.text == "(" || t.text == "[" {
            j = m.close_of[j]?;
        }
        j += 1;
    }
    let open = j;
    if !sig_text(tokens, sig, open)
        .map(|t| t.text == "{")
        .unwrap_or(false)
    {
        return None;
    }
    let close = m.close_of[open]?;
    Some(ClassScope {
        name,
        token_range: (sig[si], sig[close]),
    })
}

/// Method form `name(params) { ... }` inside an object literal or class body.
fn scan_method(tokens: &[Token], sig: &[usize], si: usize, m: &BraceMatcher) -> Option<Candidate> {
    let open_paren = si + 1;
    if !sig_text(tokens, sig, open_paren)
        .map(|t| t.text == "(")
        .unwrap_or(false)
    {
        return None;
    }
    let close_paren = m.close_of[open_paren]?;
    let open_brace = close_paren + 1;
    if !sig_text(tokens, sig, open_brace)
        .map(|t| t.text == "{")
        .unwrap_or(false)
    {
        return None;
    }
    // A member-access call like `a.foo(...)` can never be a method header.
    if si > 0 && tokens[sig[si - 1]].text == "." {
        return None;
    }
    // The token before the (possibly modified) header must plausibly start an
    // object-literal or class-body member.
    let mut start_si = si;
    while start_si > 0 {
        let prev = &tokens[sig[start_si - 1]];
        let is_modifier = (prev.kind == TokenKind::Identifier
            && matches!(prev.text.as_str(), "get" | "set" | "static"))
            || (prev.kind == TokenKind::Keyword && prev.text == "async")
            || (prev.kind == TokenKind::Punctuator && prev.text == "*");
        if is_modifier {
            start_si -= 1;
        } else {
            break;
        }
    }
    if start_si > 0 {
        let before = &tokens[sig[start_si - 1]];
        let ok = matches!(before.text.as_str(), "{" | "," | ";" | "}");
        if !ok {
            return None;
        }
    }
    let close_brace = m.close_of[open_brace]?;
    let name_tok = &tokens[sig[si]];
    let name = match name_tok.kind {
        TokenKind::String => name_tok.text.trim_matches(['"', '\'']).to_string(),
        _ => name_tok.text.clone(),
    };
    let body = if close_brace > open_brace + 1 {
        Some((sig[open_brace] + 1, sig[close_brace] - 1))
    } else {
        None
    };
    Some(Candidate {
        name: Some(name),
        start: sig[start_si],
        end: sig[close_brace],
        body,
        params: count_params(tokens, sig, open_paren, close_paren),
    })
}

/// Arrow function: scan backward from `=>` for the parameter list and forward
/// for the body.
fn scan_arrow(tokens: &[Token], sig: &[usize], si: usize, m: &BraceMatcher) -> Option<Candidate> {
    if si == 0 {
        return None;
    }
    // Parameters.
    let prev = &tokens[sig[si - 1]];
    let (mut start_si, params) = if prev.text == ")" {
        let mut open = None;
        let mut depth = 0i32;
        for j in (0..si - 1).rev() {
            let t = &tokens[sig[j]];
            match t.text.as_str() {
                ")" | "]" | "}" => depth += 1,
                "(" | "[" | "{" => {
                    if depth == 0 && t.text == "(" {
                        open = Some(j);
                        break;
                    }
                    depth -= 1;
                }
                _ => {}
            }
        }
        let open = open?;
        (open, count_params(tokens, sig, open, si - 1))
    } else if prev.kind == TokenKind::Identifier {
        (si - 1, 1)
    } else {
        return None;
    };
    if start_si > 0 {
        let before = &tokens[sig[start_si - 1]];
        if before.kind == TokenKind::Keyword && before.text == "async" {
            start_si -= 1;
        }
    }

    // Body.
    let body_start = si + 1;
    let first = sig_text(tokens, sig, body_start)?;
    if first.text == "{" {
        let close = m.close_of[body_start]?;
        let body = if close > body_start + 1 {
            Some((sig[body_start] + 1, sig[close] - 1))
        } else {
            None
        };
        return Some(Candidate {
            name: infer_assigned_name(tokens, sig, start_si),
            start: sig[start_si],
            end: sig[close],
            body,
            params,
        });
    }
    // Expression body: scan to the end of the expression.
    let mut depth = 0i32;
    let mut ternary = 0i32;
    let mut last = body_start;
    let mut j = body_start;
    while let Some(t) = sig_text(tokens, sig, j) {
        if t.kind == TokenKind::Punctuator {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                "," | ";" if depth == 0 => break,
                "?" if depth == 0 => ternary += 1,
                ":" if depth == 0 => {
                    if ternary == 0 {
                        break;
                    }
                    ternary -= 1;
                }
                _ => {}
            }
        }
        last = j;
        j += 1;
    }
    Some(Candidate {
        name: infer_assigned_name(tokens, sig, start_si),
        start: sig[start_si],
        end: sig[last],
        body: Some((sig[body_start], sig[last])),
        params,
    })
}

/// Infer a name for an anonymous function from `name = <fn>` or
/// `name: <fn>` immediately before it.
fn infer_assigned_name(tokens: &[Token], sig: &[usize], start_si: usize) -> Option<String> {
    if start_si < 2 {
        return None;
    }
    let op = &tokens[sig[start_si - 1]];
    if op.kind != TokenKind::Punctuator || (op.text != "=" && op.text != ":") {
        return None;
    }
    let name = &tokens[sig[start_si - 2]];
    // A `:` only names the function in object-literal position; a ternary
    // colon must not.
    if op.text == ":" {
        let in_object =
            start_si >= 3 && matches!(tokens[sig[start_si - 3]].text.as_str(), "{" | ",");
        if !in_object {
            return None;
        }
    }
    match name.kind {
        TokenKind::Identifier => Some(name.text.clone()),
        TokenKind::String if op.text == ":" => {
            Some(name.text.trim_matches(['"', '\'']).to_string())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::js::lexer::tokenize;

    fn extract(src: &str) -> Vec<SourceFunction> {
        let toks = tokenize(src).unwrap();
        extract_functions(&toks, "test.js").unwrap()
    }

    #[test]
    fn six_line_function_span() {
        let src = "function foo(a) {\n  var i = 4 * a;\n  // call bar\n  var tmp = bar(i);\n  return tmp;\n}";
        let fns = extract(src);
        assert_eq!(fns.len(), 1);
        let f = &fns[0];
        assert_eq!(f.short_name, "foo");
        assert_eq!(f.line_span(), (1, 6));
        assert_eq!(f.param_count, 1);
        assert_eq!(f.qualified_name, "foo");
    }

    #[test]
    fn arrow_expression_span_and_params() {
        let fns = extract("const f = (x) => x + 1;");
        assert_eq!(fns.len(), 1);
        let f = &fns[0];
        assert_eq!(f.param_count, 1);
        assert_eq!(f.short_name, "f");
        // Span covers `(x) => x + 1`, not the declaration or semicolon.
        assert_eq!(f.start_col, 11);
        assert_eq!(f.end_col, 22);
    }

    #[test]
    fn nested_function_is_a_contained_child() {
        let src =
            "function outer() {\n  function inner(a, b) { return a + b; }\n  return inner;\n}";
        let fns = extract(src);
        assert_eq!(fns.len(), 2);
        let outer = &fns[0];
        let inner = &fns[1];
        assert_eq!(outer.short_name, "outer");
        assert_eq!(inner.short_name, "inner");
        assert_eq!(inner.parent, Some(0));
        assert_eq!(outer.children, vec![1]);
        assert!(inner.start_line >= outer.start_line && inner.end_line <= outer.end_line);
        assert_eq!(inner.qualified_name, "outer.inner");
        assert_eq!(inner.param_count, 2);
    }

    #[test]
    fn two_anonymous_callbacks_on_one_line_get_distinct_names() {
        let fns = extract("run(x => x, y => y);");
        assert_eq!(fns.len(), 2);
        assert_ne!(fns[0].qualified_name, fns[1].qualified_name);
        assert!(fns[0].qualified_name.starts_with("<anonymous@L1C"));
        assert!(fns[1].qualified_name.starts_with("<anonymous@L1C"));
    }

    #[test]
    fn object_methods_and_properties() {
        let src = "var api = {\n  run(a) { return a; },\n  stop: function () { return 0; },\n  'quoted': (z) => z * 2\n};";
        let fns = extract(src);
        let names: Vec<&str> = fns.iter().map(|f| f.short_name.as_str()).collect();
        assert_eq!(names, vec!["run", "stop", "quoted"]);
    }

    #[test]
    fn class_methods_are_qualified_by_class_name() {
        let src = "class Calc {\n  constructor(x) { this.x = x; }\n  static make() { return new Calc(0); }\n  get value() { return this.x; }\n}";
        let fns = extract(src);
        let q: Vec<&str> = fns.iter().map(|f| f.qualified_name.as_str()).collect();
        assert_eq!(q, vec!["Calc.constructor", "Calc.make", "Calc.value"]);
    }

    #[test]
    fn duplicate_names_disambiguated_positionally() {
        let src = "function f() { return 1; }\nfunction f() { return 2; }";
        let fns = extract(src);
        assert_eq!(fns[0].qualified_name, "f");
        assert_eq!(fns[1].qualified_name, "f@L2C1");
    }

    #[test]
    fn unbalanced_braces_error() {
        let toks = tokenize("function f() { if (x) {").unwrap();
        assert!(extract_functions(&toks, "x.js").is_err());
    }

    #[test]
    fn async_and_generator_functions() {
        let src = "async function fetchAll() { await go(); }\nfunction* gen() { yield 1; }\nconst h = async (a, b) => a + b;";
        let fns = extract(src);
        let names: Vec<&str> = fns.iter().map(|f| f.short_name.as_str()).collect();
        assert_eq!(names, vec!["fetchAll", "gen", "h"]);
        assert_eq!(fns[0].start_col, 1); // span starts at `async`
        assert_eq!(fns[2].param_count, 2);
    }

    #[test]
    fn arrow_in_ternary_and_nested_arrows() {
        let fns = extract("const pick = flag ? a => a : b => b;\nconst add = x => y => x + y;");
        assert_eq!(fns.len(), 4);
        // x => y => x + y: the inner arrow is a child of the outer.
        let outer = fns.iter().position(|f| f.short_name == "add").unwrap();
        let inner = fns
            .iter()
            .position(|f| f.parent == Some(outer))
            .expect("nested arrow");
        assert!(fns[inner].qualified_name.starts_with("add."));
    }

    #[test]
    fn control_flow_blocks_are_not_methods() {
        let src = "function g(x) {\n  if (x) { do1(); }\n  while (x) { do2(); }\n  switch (x) { default: break; }\n  for (var i = 0; i < x; i++) { do3(); }\n}";
        let fns = extract(src);
        assert_eq!(fns.len(), 1);
        assert_eq!(fns[0].short_name, "g");
    }
}
