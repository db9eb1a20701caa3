//! Lisp-style surface form.
//!
//! ```text
//! expr  := atom | "(" head expr* (":" name expr)* ")"
//!        | "(" "let" "(" (name expr)* ")" expr ")"
//! atom  := ident | "text" | number | true | false | $name
//! ```

use super::lexer::{lex, Tok, Token};
use super::{escape_text, ExprKind, ExprNode, SourceSpan, SyntaxError};

pub fn parse_sexp(input: &str) -> Result<ExprNode, SyntaxError> {
    parse(input, false)
}

/// Parses a rewrite pattern: also accepts `?x`, `?xs*`, `?_` and `@builtin` heads.
pub fn parse_sexp_pattern(input: &str) -> Result<ExprNode, SyntaxError> {
    parse(input, true)
}

fn parse(input: &str, pattern_mode: bool) -> Result<ExprNode, SyntaxError> {
    let tokens = lex(input, pattern_mode)?;
    let mut p = Parser { tokens: &tokens, pos: 0, eof: input.chars().count() };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(SyntaxError::at_offset(t.start, "end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    eof: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &str) -> Result<&'a Token, SyntaxError> {
        let t = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| SyntaxError::at_offset(self.eof, expected))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<ExprNode, SyntaxError> {
        let t = self.next("expression")?;
        let span = SourceSpan::new(t.start, t.end);
        let kind = match &t.tok {
            Tok::LParen => return self.list(t.start),
            Tok::Ident(name) => match name.as_str() {
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "let" => return Err(SyntaxError::at_offset(t.start, "expression")),
                _ => ExprKind::Symbol(name.clone()),
            },
            Tok::Text(s) => ExprKind::Text(s.clone()),
            Tok::Num(n) => ExprKind::Num(*n),
            Tok::Var(v) => ExprKind::VarRef(v.clone()),
            Tok::Meta(m) => ExprKind::Symbol(m.clone()),
            _ => return Err(SyntaxError::at_offset(t.start, "expression")),
        };
        Ok(ExprNode::with_span(kind, span))
    }

    fn list(&mut self, open: usize) -> Result<ExprNode, SyntaxError> {
        let head_tok = self.next("function name")?;
        let head = match &head_tok.tok {
            Tok::Ident(h) if h == "let" => return self.let_form(open),
            Tok::Ident(h) if h != "true" && h != "false" => h.clone(),
            Tok::Builtin(b) => format!("@{b}"),
            _ => return Err(SyntaxError::at_offset(head_tok.start, "function name")),
        };
        let mut positional = Vec::new();
        let mut named: Vec<(String, ExprNode)> = Vec::new();
        loop {
            let t = self.peek().ok_or_else(|| SyntaxError::at_offset(self.eof, "')'"))?;
            match &t.tok {
                Tok::RParen => {
                    self.pos += 1;
                    let span = SourceSpan::new(open, t.end);
                    return Ok(ExprNode::with_span(ExprKind::Call { head, positional, named }, span));
                }
                Tok::Keyword(k) => {
                    self.pos += 1;
                    if named.iter().any(|(n, _)| n == k) {
                        return Err(SyntaxError::at_offset(t.start, format!("no duplicate argument ':{k}'")));
                    }
                    let value = self.expr()?;
                    named.push((k.clone(), value));
                }
                _ => {
                    if !named.is_empty() {
                        return Err(SyntaxError::at_offset(t.start, "named argument or ')'"));
                    }
                    positional.push(self.expr()?);
                }
            }
        }
    }

    fn let_form(&mut self, open: usize) -> Result<ExprNode, SyntaxError> {
        let t = self.next("'('")?;
        if t.tok != Tok::LParen {
            return Err(SyntaxError::at_offset(t.start, "'(' opening let bindings"));
        }
        let mut bindings: Vec<(String, ExprNode)> = Vec::new();
        loop {
            let t = self.next("binding name or ')'")?;
            match &t.tok {
                Tok::RParen => break,
                Tok::Ident(name) if super::is_identifier(name) => {
                    if bindings.iter().any(|(n, _)| n == name) {
                        return Err(SyntaxError::at_offset(t.start, format!("unique binding name, '{name}' repeats")));
                    }
                    let value = self.expr()?;
                    bindings.push((name.clone(), value));
                }
                _ => return Err(SyntaxError::at_offset(t.start, "binding name or ')'")),
            }
        }
        let body = self.expr()?;
        let close = self.next("')'")?;
        if close.tok != Tok::RParen {
            return Err(SyntaxError::at_offset(close.start, "')' closing let"));
        }
        Ok(ExprNode::with_span(
            ExprKind::Let { bindings, body: Box::new(body) },
            SourceSpan::new(open, close.end),
        ))
    }
}

/// Canonical single-line rendering.
pub fn print_sexp(e: &ExprNode) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn write(e: &ExprNode, out: &mut String) {
    match &e.kind {
        ExprKind::Call { head, positional, named } => {
            out.push('(');
            out.push_str(head);
            for a in positional {
                out.push(' ');
                write(a, out);
            }
            for (k, v) in named {
                out.push_str(" :");
                out.push_str(k);
                out.push(' ');
                write(v, out);
            }
            out.push(')');
        }
        ExprKind::Let { bindings, body } => {
            out.push_str("(let (");
            for (i, (name, value)) in bindings.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(name);
                out.push(' ');
                write(value, out);
            }
            out.push_str(") ");
            write(body, out);
            out.push(')');
        }
        ExprKind::Symbol(s) => out.push_str(s),
        ExprKind::Text(s) => out.push_str(&escape_text(s)),
        ExprKind::Num(n) => out.push_str(&n.to_string()),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::VarRef(v) => {
            out.push('$');
            out.push_str(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_calls() {
        let e = parse_sexp("(FindManager (John))").unwrap();
        assert_eq!(e, ExprNode::call("FindManager", vec![ExprNode::call("John", vec![])]));
        assert_eq!(e.span, Some(SourceSpan::new(0, 20)));
    }

    #[test]
    fn parses_delete_wrapper_chain() {
        let e = parse_sexp("(DeleteCommitEventWrapper (DeletePreflightEventWrapper (x)))").unwrap();
        let expected = ExprNode::call(
            "DeleteCommitEventWrapper",
            vec![ExprNode::call("DeletePreflightEventWrapper", vec![ExprNode::call("x", vec![])])],
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_input_reports_end_position() {
        let err = parse_sexp("(f (g").unwrap_err();
        assert_eq!(err.position, 6);
    }

    #[test]
    fn rejects_empty_call_and_stray_tokens() {
        assert!(parse_sexp("()").is_err());
        assert_eq!(parse_sexp("(f) g").unwrap_err().position, 5);
        assert!(parse_sexp(")").is_err());
        assert!(parse_sexp("").is_err());
    }

    #[test]
    fn named_arguments_and_let() {
        let e = parse_sexp(r#"(let (x0 (John)) (f $x0 :subject "lunch" :n 2))"#).unwrap();
        let ExprKind::Let { bindings, body } = &e.kind else { panic!("expected let") };
        assert_eq!(bindings[0].0, "x0");
        let ExprKind::Call { named, positional, .. } = &body.kind else { panic!() };
        assert_eq!(positional[0], ExprNode::var("x0"));
        assert_eq!(named[0], ("subject".to_string(), ExprNode::text("lunch")));
        assert_eq!(print_sexp(&e), r#"(let (x0 (John)) (f $x0 :subject "lunch" :n 2))"#);
    }

    #[test]
    fn rejects_duplicates_and_misplaced_positionals() {
        assert!(parse_sexp("(f :a 1 :a 2)").is_err());
        assert!(parse_sexp("(f :a 1 2)").is_err());
        assert!(parse_sexp("(let (x 1 x 2) $x)").is_err());
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_sexp("(f  (g)\n\t:k   true)").unwrap();
        let b = parse_sexp("(f (g) :k true)").unwrap();
        assert_eq!(a, b);
    }
}
