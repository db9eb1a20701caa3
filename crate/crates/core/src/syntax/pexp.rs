//! Call-style surface form.
//!
//! ```text
//! expr := ident "(" args? ")" | ident | "text" | number | true | false | $name
//!       | "let" "(" (name "=" expr ",")* expr ")"
//! args := arg ("," arg)*        arg := name "=" expr | expr
//! ```

use super::lexer::{lex, Tok, Token};
use super::{escape_text, ExprKind, ExprNode, SourceSpan, SyntaxError};

pub fn parse_pexp(input: &str) -> Result<ExprNode, SyntaxError> {
    parse(input, false)
}

/// Parses a rewrite pattern or template in call style.
pub fn parse_pexp_pattern(input: &str) -> Result<ExprNode, SyntaxError> {
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

enum Arg {
    Positional(ExprNode),
    Named(String, ExprNode, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_tok(&self, ahead: usize) -> Option<&'a Tok> {
        self.tokens.get(self.pos + ahead).map(|t| &t.tok)
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
            Tok::Ident(name) if self.peek_tok(0) == Some(&Tok::LParen) => {
                return match name.as_str() {
                    "let" => self.let_form(t.start),
                    "true" | "false" => Err(SyntaxError::at_offset(t.end, "end of literal")),
                    _ => self.call(name.clone(), t.start),
                };
            }
            Tok::Builtin(b) if self.peek_tok(0) == Some(&Tok::LParen) => {
                return self.call(format!("@{b}"), t.start);
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "let" => return Err(SyntaxError::at_offset(t.end, "'(' after let")),
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

    /// Parses `( arg, ... )` after a head; returns args and the closing offset.
    fn args(&mut self) -> Result<(Vec<Arg>, usize), SyntaxError> {
        self.next("'('")?;
        let mut args = Vec::new();
        if let Some(t) = self.peek() {
            if t.tok == Tok::RParen {
                self.pos += 1;
                return Ok((args, t.end));
            }
        }
        loop {
            let named = matches!(
                (self.peek_tok(0), self.peek_tok(1)),
                (Some(Tok::Ident(_)), Some(Tok::Equals))
            );
            if named {
                let t = self.next("argument name")?;
                let Tok::Ident(name) = &t.tok else { unreachable!() };
                if !super::is_identifier(name) {
                    return Err(SyntaxError::at_offset(t.start, "argument name"));
                }
                self.pos += 1;
                let value = self.expr()?;
                args.push(Arg::Named(name.clone(), value, t.start));
            } else {
                args.push(Arg::Positional(self.expr()?));
            }
            let t = self.next("',' or ')'")?;
            match t.tok {
                Tok::Comma => continue,
                Tok::RParen => return Ok((args, t.end)),
                _ => return Err(SyntaxError::at_offset(t.start, "',' or ')'")),
            }
        }
    }

    fn call(&mut self, head: String, start: usize) -> Result<ExprNode, SyntaxError> {
        let (args, end) = self.args()?;
        let mut positional = Vec::new();
        let mut named: Vec<(String, ExprNode)> = Vec::new();
        for arg in args {
            match arg {
                Arg::Positional(e) => {
                    if !named.is_empty() {
                        let at = e.span.map_or(start, |s| s.start_offset);
                        return Err(SyntaxError::at_offset(at, "named argument, positional arguments come first"));
                    }
                    positional.push(e);
                }
                Arg::Named(k, v, at) => {
                    if named.iter().any(|(n, _)| *n == k) {
                        return Err(SyntaxError::at_offset(at, format!("no duplicate argument '{k}'")));
                    }
                    named.push((k, v));
                }
            }
        }
        Ok(ExprNode::with_span(ExprKind::Call { head, positional, named }, SourceSpan::new(start, end)))
    }

    fn let_form(&mut self, start: usize) -> Result<ExprNode, SyntaxError> {
        let (args, end) = self.args()?;
        let mut bindings: Vec<(String, ExprNode)> = Vec::new();
        let mut body = None;
        for arg in args {
            match arg {
                Arg::Named(k, v, at) => {
                    if body.is_some() {
                        return Err(SyntaxError::at_offset(at, "let body as the last argument"));
                    }
                    if bindings.iter().any(|(n, _)| *n == k) {
                        return Err(SyntaxError::at_offset(at, format!("unique binding name, '{k}' repeats")));
                    }
                    bindings.push((k, v));
                }
                Arg::Positional(e) => {
                    if body.is_some() {
                        let at = e.span.map_or(start, |s| s.start_offset);
                        return Err(SyntaxError::at_offset(at, "a single let body"));
                    }
                    body = Some(e);
                }
            }
        }
        let body = body.ok_or_else(|| SyntaxError::at_offset(end.saturating_sub(1), "let body"))?;
        Ok(ExprNode::with_span(
            ExprKind::Let { bindings, body: Box::new(body) },
            SourceSpan::new(start, end),
        ))
    }
}

/// Canonical rendering: `, ` between arguments, no padding inside parentheses.
pub fn print_pexp(e: &ExprNode) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn write(e: &ExprNode, out: &mut String) {
    match &e.kind {
        ExprKind::Call { head, positional, named } => {
            out.push_str(head);
            out.push('(');
            let mut first = true;
            for a in positional {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                write(a, out);
            }
            for (k, v) in named {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(k);
                out.push('=');
                write(v, out);
            }
            out.push(')');
        }
        ExprKind::Let { bindings, body } => {
            out.push_str("let(");
            for (name, value) in bindings {
                out.push_str(name);
                out.push('=');
                write(value, out);
                out.push_str(", ");
            }
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
    fn bare_identifier_argument_is_a_symbol() {
        let e = parse_pexp("FindManager(John)").unwrap();
        assert_eq!(e, ExprNode::call("FindManager", vec![ExprNode::symbol("John")]));
    }

    #[test]
    fn flat_and() {
        let e = parse_pexp("AND(a(), b(), c())").unwrap();
        let ExprKind::Call { head, positional, .. } = &e.kind else { panic!() };
        assert_eq!(head, "AND");
        assert_eq!(positional.len(), 3);
        assert!(positional.iter().all(|p| matches!(p.kind, ExprKind::Call { .. })));
    }

    #[test]
    fn named_argument() {
        let e = parse_pexp(r#"CreateEvent(subject="lunch")"#).unwrap();
        assert_eq!(
            e,
            ExprNode::call_named("CreateEvent", vec![], vec![("subject".into(), ExprNode::text("lunch"))])
        );
    }

    #[test]
    fn canonical_printing() {
        let e = ExprNode::call("AND", vec![ExprNode::call("a", vec![]), ExprNode::call("b", vec![])]);
        assert_eq!(print_pexp(&e), "AND(a(), b())");
        assert_eq!(print_pexp(&ExprNode::symbol("John")), "John");
        let messy = parse_pexp("let( x0 = John ,f( $x0 ,k = 1.5 ) )").unwrap();
        assert_eq!(print_pexp(&messy), "let(x0=John, f($x0, k=1.5))");
    }

    #[test]
    fn errors_are_positioned() {
        assert_eq!(parse_pexp("f(a,").unwrap_err().position, 5);
        assert_eq!(parse_pexp("f(a b)").unwrap_err().position, 5);
        assert!(parse_pexp("f(k=1, 2)").is_err());
        assert!(parse_pexp("f(k=1, k=2)").is_err());
        assert!(parse_pexp("let(x=1)").is_err());
        assert!(parse_pexp("let(x=1, $x, $x)").is_err());
        assert!(parse_pexp("true()").is_err());
        assert!(parse_pexp("").is_err());
    }
}
