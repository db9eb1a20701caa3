//! Expression trees shared by both annotation surface forms.
//!
//! Original annotations are Lisp-style S-expressions (`(FindManager (John))`),
//! simplified annotations are call expressions (`FindManager(John)`). Both
//! parse into the same [`ExprNode`] tree, so rewriting, metrics and graph
//! construction never care which surface form a program came from.

mod lexer;
mod pexp;
mod sexp;
mod tokens;

use std::fmt;

pub use pexp::{parse_pexp, parse_pexp_pattern, print_pexp};
pub use sexp::{parse_sexp, parse_sexp_pattern, print_sexp};
pub use tokens::tokenize_linear;

/// Parses either surface form: text starting with `(` is an S-expression.
pub fn parse_any(text: &str) -> Result<ExprNode, SyntaxError> {
    if text.trim_start().starts_with('(') {
        parse_sexp(text)
    } else {
        parse_pexp(text)
    }
}

/// Half-open character range into the parsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start_offset: usize,
    pub end_offset: usize,
}

impl SourceSpan {
    pub fn new(start_offset: usize, end_offset: usize) -> Self {
        debug_assert!(start_offset <= end_offset);
        SourceSpan { start_offset, end_offset }
    }
}

/// Numeric literal. Decimals keep their `f64` value and always print with a
/// fractional part so they never re-parse as integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Int(i64),
    Decimal(f64),
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Decimal(d) => {
                let s = d.to_string();
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// Function application. Named arguments keep their source order.
    Call {
        head: String,
        positional: Vec<ExprNode>,
        named: Vec<(String, ExprNode)>,
    },
    Symbol(String),
    Text(String),
    Num(Number),
    Bool(bool),
    Let {
        bindings: Vec<(String, ExprNode)>,
        body: Box<ExprNode>,
    },
    /// Reference to a `let`-bound name, written `$name` in both forms.
    VarRef(String),
}

/// A node of the expression tree.
///
/// `span` is `None` for nodes synthesized by rewriting; graph construction
/// uses that to tell annotated nodes from ones inserted by expansion.
/// Equality ignores spans.
#[derive(Debug, Clone)]
pub struct ExprNode {
    pub kind: ExprKind,
    pub span: Option<SourceSpan>,
}

impl PartialEq for ExprNode {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl ExprNode {
    pub fn new(kind: ExprKind) -> Self {
        ExprNode { kind, span: None }
    }

    pub fn with_span(kind: ExprKind, span: SourceSpan) -> Self {
        ExprNode { kind, span: Some(span) }
    }

    pub fn call(head: impl Into<String>, positional: Vec<ExprNode>) -> Self {
        ExprNode::new(ExprKind::Call {
            head: head.into(),
            positional,
            named: Vec::new(),
        })
    }

    pub fn call_named(
        head: impl Into<String>,
        positional: Vec<ExprNode>,
        named: Vec<(String, ExprNode)>,
    ) -> Self {
        ExprNode::new(ExprKind::Call { head: head.into(), positional, named })
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        ExprNode::new(ExprKind::Symbol(name.into()))
    }

    pub fn text(value: impl Into<String>) -> Self {
        ExprNode::new(ExprKind::Text(value.into()))
    }

    pub fn int(value: i64) -> Self {
        ExprNode::new(ExprKind::Num(Number::Int(value)))
    }

    pub fn boolean(value: bool) -> Self {
        ExprNode::new(ExprKind::Bool(value))
    }

    pub fn var(name: impl Into<String>) -> Self {
        ExprNode::new(ExprKind::VarRef(name.into()))
    }

    pub fn head(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Call { head, .. } => Some(head),
            _ => None,
        }
    }

    /// Drops every span, marking the whole tree as synthesized.
    pub fn strip_spans(mut self) -> Self {
        self.visit_mut(&mut |n| n.span = None);
        self
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut ExprNode)) {
        f(self);
        match &mut self.kind {
            ExprKind::Call { positional, named, .. } => {
                positional.iter_mut().for_each(|c| c.visit_mut(f));
                named.iter_mut().for_each(|(_, c)| c.visit_mut(f));
            }
            ExprKind::Let { bindings, body } => {
                bindings.iter_mut().for_each(|(_, c)| c.visit_mut(f));
                body.visit_mut(f);
            }
            _ => {}
        }
    }

    /// Pre-order walk over the tree.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ExprNode)) {
        f(self);
        match &self.kind {
            ExprKind::Call { positional, named, .. } => {
                positional.iter().for_each(|c| c.walk(f));
                named.iter().for_each(|(_, c)| c.walk(f));
            }
            ExprKind::Let { bindings, body } => {
                bindings.iter().for_each(|(_, c)| c.walk(f));
                body.walk(f);
            }
            _ => {}
        }
    }

    /// Every call head in the tree, in pre-order.
    pub fn call_heads(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let ExprKind::Call { head, .. } = &n.kind {
                out.push(head.as_str());
            }
        });
        out
    }
}

/// Words that cannot be used as identifiers.
pub const RESERVED: [&str; 3] = ["let", "true", "false"];

/// `[A-Za-z_][A-Za-z0-9_.]*`, excluding reserved words.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') && !RESERVED.contains(&s)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at position {position}: expected {expected}")]
pub struct SyntaxError {
    /// 1-based character position; end of input is `len + 1`.
    pub position: usize,
    pub expected: String,
}

impl SyntaxError {
    pub(crate) fn at_offset(offset: usize, expected: impl Into<String>) -> Self {
        SyntaxError { position: offset + 1, expected: expected.into() }
    }
}

pub(crate) fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
