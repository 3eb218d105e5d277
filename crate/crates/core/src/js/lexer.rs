//! Hand-rolled ES2017-level JavaScript tokenizer.
//!
//! Comments are retained as tokens and newlines are emitted as synthetic
//! `Eol` tokens so that line-oriented metrics can be computed from the token
//! stream alone. Regex vs. division is disambiguated by the preceding
//! significant token. JSX and decorators are not supported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexError {
    #[error("line {line}: unterminated string literal")]
    UnterminatedString { line: u32 },
    #[error("line {line}: unterminated template literal")]
    UnterminatedTemplate { line: u32 },
    #[error("line {line}: unterminated regular expression")]
    UnterminatedRegex { line: u32 },
    #[error("line {line}: unterminated block comment")]
    UnterminatedComment { line: u32 },
    #[error("line {line}: unexpected character `{ch}`")]
    UnexpectedChar { line: u32, ch: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuator,
    Number,
    String,
    Regex,
    Template,
    CommentLine,
    CommentBlock,
    Eol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: u32,
    /// 1-based column of the first character.
    pub column: u32,
    /// 1-based line of the last character.
    pub end_line: u32,
    /// 1-based column of the last character.
    pub end_col: u32,
}

impl Token {
    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::CommentLine | TokenKind::CommentBlock)
    }

    /// Comments and end-of-line markers carry no syntactic weight.
    pub fn is_significant(&self) -> bool {
        !matches!(
            self.kind,
            TokenKind::CommentLine | TokenKind::CommentBlock | TokenKind::Eol
        )
    }
}

/// Reserved words plus the contextual keywords this pipeline treats as fixed
/// (`let`, `async`, `await`). `of`/`get`/`set`/`static`/`from`/`as` stay
/// identifiers — `of` in particular is a legitimate method name (`Array.of`).
pub const KEYWORDS: &[&str] = &[
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "debugger",
    "default",
    "delete",
    "do",
    "else",
    "enum",
    "export",
    "extends",
    "false",
    "finally",
    "for",
    "function",
    "if",
    "import",
    "in",
    "instanceof",
    "new",
    "null",
    "return",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "typeof",
    "var",
    "void",
    "while",
    "with",
    "yield",
    "let",
    "async",
    "await",
];

/// Keywords that denote values rather than operations; Halstead counts these
/// as operands.
pub const VALUE_KEYWORDS: &[&str] = &["true", "false", "null", "this", "super"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Multi-char punctuators, longest first so maximal munch falls out of the
// scan order.
const PUNCTUATORS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "=>", "==", "!=", "<=", ">=", "&&",
    "||", "++", "--", "**", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "{", "}",
    "(", ")", "[", "]", ".", ";", ",", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~",
    "?", ":", "=",
];

enum TemplateFrame {
    /// Inside `${ ... }` of a template; tracks `{`-nesting of the expression.
    Interpolation { brace_depth: u32 },
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    templates: Vec<TemplateFrame>,
}

/// Tokenize JavaScript source. Unterminated strings, templates, regexes and
/// block comments fail with the line they start on.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        templates: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, text: String, line: u32, col: u32, el: u32, ec: u32) {
        self.tokens.push(Token {
            kind,
            text,
            line,
            column: col,
            end_line: el,
            end_col: ec,
        });
    }

    fn last_significant(&self) -> Option<&Token> {
        self.tokens.iter().rev().find(|t| t.is_significant())
    }

    /// Regex is allowed where an expression is expected: at the start, after
    /// most punctuators, and after non-value keywords. After `)`, `]`, `}`,
    /// identifiers, literals and value keywords a `/` is division.
    fn regex_allowed(&self) -> bool {
        match self.last_significant() {
            None => true,
            Some(t) => match t.kind {
                TokenKind::Punctuator => !matches!(t.text.as_str(), ")" | "]" | "}" | "++" | "--"),
                TokenKind::Keyword => !VALUE_KEYWORDS.contains(&t.text.as_str()),
                _ => false,
            },
        }
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Eol, "\n".into(), line, col, line, col);
                }
                ' ' | '\t' | '\r' | '\u{000B}' | '\u{000C}' | '\u{FEFF}' | '\u{00A0}' => {
                    self.bump();
                }
                '/' if self.peek_at(1) == Some('/') => self.line_comment(line, col),
                '/' if self.peek_at(1) == Some('*') => self.block_comment(line, col)?,
                '/' if self.regex_allowed() => self.regex(line, col)?,
                '\'' | '"' => self.string(c, line, col)?,
                '`' => self.template(line, col)?,
                '}' if self.in_interpolation_tail() => {
                    // This brace closes a `${`; the template continues.
                    self.templates.pop();
                    self.template_chunk(line, col)?;
                }
                c if c.is_ascii_digit() => self.number(line, col),
                '.' if self.peek_at(1).map(|d| d.is_ascii_digit()).unwrap_or(false) => {
                    self.number(line, col)
                }
                c if is_ident_start(c) => self.identifier(line, col),
                _ => self.punctuator(line, col)?,
            }
        }
        if self.templates.is_empty() {
            Ok(())
        } else {
            Err(LexError::UnterminatedTemplate { line: self.line })
        }
    }

    fn in_interpolation_tail(&self) -> bool {
        matches!(
            self.templates.last(),
            Some(TemplateFrame::Interpolation { brace_depth: 0 })
        )
    }

    fn line_comment(&mut self, line: u32, col: u32) {
        let mut text = String::new();
        let mut ec = col;
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            ec = self.col;
            text.push(c);
            self.bump();
        }
        self.push(TokenKind::CommentLine, text, line, col, line, ec);
    }

    fn block_comment(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        let mut text = String::new();
        text.push(self.bump().unwrap()); // '/'
        text.push(self.bump().unwrap()); // '*'
        loop {
            match self.peek() {
                None => return Err(LexError::UnterminatedComment { line }),
                Some('*') if self.peek_at(1) == Some('/') => {
                    text.push(self.bump().unwrap());
                    let ec = self.col;
                    let el = self.line;
                    text.push(self.bump().unwrap());
                    self.push(TokenKind::CommentBlock, text, line, col, el, ec);
                    return Ok(());
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }

    fn string(&mut self, quote: char, line: u32, col: u32) -> Result<(), LexError> {
        let mut text = String::new();
        text.push(self.bump().unwrap());
        loop {
            match self.peek() {
                None | Some('\n') => {
                    // A bare newline inside a string is only legal after a
                    // backslash, which the escape arm below consumes.
                    return Err(LexError::UnterminatedString { line });
                }
                Some('\\') => {
                    text.push(self.bump().unwrap());
                    match self.bump() {
                        Some(esc) => text.push(esc),
                        None => return Err(LexError::UnterminatedString { line }),
                    }
                }
                Some(c) if c == quote => {
                    let (el, ec) = (self.line, self.col);
                    text.push(self.bump().unwrap());
                    self.push(TokenKind::String, text, line, col, el, ec);
                    return Ok(());
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }

    fn template(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        debug_assert_eq!(self.peek(), Some('`'));
        self.template_chunk(line, col)
    }

    /// Scan one template chunk starting at the current position (a backtick
    /// or the `}` that resumes a template) until the closing backtick or the
    /// next `${`.
    fn template_chunk(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        let mut text = String::new();
        text.push(self.bump().unwrap()); // '`' or '}'
        loop {
            match self.peek() {
                None => return Err(LexError::UnterminatedTemplate { line }),
                Some('\\') => {
                    text.push(self.bump().unwrap());
                    match self.bump() {
                        Some(esc) => text.push(esc),
                        None => return Err(LexError::UnterminatedTemplate { line }),
                    }
                }
                Some('`') => {
                    let (el, ec) = (self.line, self.col);
                    text.push(self.bump().unwrap());
                    self.push(TokenKind::Template, text, line, col, el, ec);
                    return Ok(());
                }
                Some('$') if self.peek_at(1) == Some('{') => {
                    text.push(self.bump().unwrap());
                    let (el, ec) = (self.line, self.col);
                    text.push(self.bump().unwrap());
                    self.push(TokenKind::Template, text, line, col, el, ec);
                    self.templates
                        .push(TemplateFrame::Interpolation { brace_depth: 0 });
                    return Ok(());
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }

    fn regex(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        let mut text = String::new();
        text.push(self.bump().unwrap()); // '/'
        let mut in_class = false;
        loop {
            match self.peek() {
                None | Some('\n') => return Err(LexError::UnterminatedRegex { line }),
                Some('\\') => {
                    text.push(self.bump().unwrap());
                    match self.bump() {
                        Some(esc) => text.push(esc),
                        None => return Err(LexError::UnterminatedRegex { line }),
                    }
                }
                Some('[') => {
                    in_class = true;
                    text.push(self.bump().unwrap());
                }
                Some(']') => {
                    in_class = false;
                    text.push(self.bump().unwrap());
                }
                Some('/') if !in_class => {
                    let (mut el, mut ec) = (self.line, self.col);
                    text.push(self.bump().unwrap());
                    while let Some(f) = self.peek() {
                        if is_ident_continue(f) {
                            el = self.line;
                            ec = self.col;
                            text.push(self.bump().unwrap());
                        } else {
                            break;
                        }
                    }
                    self.push(TokenKind::Regex, text, line, col, el, ec);
                    return Ok(());
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }

    fn number(&mut self, line: u32, col: u32) {
        let mut text = String::new();
        let mut el = self.line;
        let mut ec = self.col;
        let take = |lx: &mut Self, text: &mut String, el: &mut u32, ec: &mut u32| {
            *el = lx.line;
            *ec = lx.col;
            text.push(lx.bump().unwrap());
        };
        if self.peek() == Some('0')
            && matches!(
                self.peek_at(1),
                Some('x') | Some('X') | Some('o') | Some('O') | Some('b') | Some('B')
            )
        {
            take(self, &mut text, &mut el, &mut ec);
            take(self, &mut text, &mut el, &mut ec);
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() {
                    take(self, &mut text, &mut el, &mut ec);
                } else {
                    break;
                }
            }
        } else {
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    take(self, &mut text, &mut el, &mut ec);
                } else {
                    break;
                }
            }
            if self.peek() == Some('.') {
                take(self, &mut text, &mut el, &mut ec);
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        take(self, &mut text, &mut el, &mut ec);
                    } else {
                        break;
                    }
                }
            }
            if matches!(self.peek(), Some('e') | Some('E')) {
                let sign_ok = matches!(self.peek_at(1), Some('+') | Some('-'))
                    && self.peek_at(2).map(|c| c.is_ascii_digit()).unwrap_or(false);
                let digit_ok = self.peek_at(1).map(|c| c.is_ascii_digit()).unwrap_or(false);
                if sign_ok || digit_ok {
                    take(self, &mut text, &mut el, &mut ec);
                    if matches!(self.peek(), Some('+') | Some('-')) {
                        take(self, &mut text, &mut el, &mut ec);
                    }
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            take(self, &mut text, &mut el, &mut ec);
                        } else {
                            break;
                        }
                    }
                }
            }
        }
        self.push(TokenKind::Number, text, line, col, el, ec);
    }

    fn identifier(&mut self, line: u32, col: u32) {
        let mut text = String::new();
        let mut el = self.line;
        let mut ec = self.col;
        while let Some(c) = self.peek() {
            if is_ident_continue(c) {
                el = self.line;
                ec = self.col;
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let kind = if is_keyword(&text) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        self.push(kind, text, line, col, el, ec);
    }

    fn punctuator(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        for p in PUNCTUATORS {
            let n = p.chars().count();
            if (0..n).all(|i| self.peek_at(i) == p.chars().nth(i)) {
                let mut el = line;
                let mut ec = col;
                for _ in 0..n {
                    el = self.line;
                    ec = self.col;
                    self.bump();
                }
                // Track `{`/`}` nesting inside template interpolations so the
                // closing `}` of `${...}` is recognized.
                if let Some(TemplateFrame::Interpolation { brace_depth }) =
                    self.templates.last_mut()
                {
                    if *p == "{" {
                        *brace_depth += 1;
                    } else if *p == "}" {
                        *brace_depth = brace_depth.saturating_sub(1);
                    }
                }
                self.push(TokenKind::Punctuator, p.to_string(), line, col, el, ec);
                return Ok(());
            }
        }
        let ch = self.peek().unwrap();
        Err(LexError::UnexpectedChar {
            line: self.line,
            ch,
        })
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}
