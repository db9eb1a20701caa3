//! Rule file format.
//!
//! ```text
//! # comment
//! rule bundle_delete priority 10 phase simplify
//!   (DeleteCommitEventWrapper (DeletePreflightEventWrapper ?x))
//!   => DeleteEvent(?x)
//!
//! rule person_by_name priority 9 phase simplify
//!   (RecipientWithNameLike ?e (PersonName.apply ?n))
//!   => @sym(?n)
//!   where ?e : empty_constraint, ?n : text
//!
//! rule inline_lets priority 1 phase simplify
//!   builtin inline_single_use_let
//! ```
//!
//! Either side may be written as an S-expression (starting with `(`) or as
//! a call expression. A stanza may span several lines.

use std::path::Path;

use crate::syntax::{parse_pexp_pattern, parse_sexp_pattern};

use super::{
    BuiltinRule, Guard, PatNode, Pattern, Phase, RewriteError, RewriteRule, RuleAction, RuleSet, RuleSetError,
    TEMPLATE_BUILTINS,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("cannot read rules: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    RuleSyntaxError { line: usize, message: String },
    #[error("rule '{rule}': template variable ?{var} is not bound by the left-hand side")]
    UnboundVariable { rule: String, var: String },
    #[error("duplicate rule name '{0}'")]
    DuplicateRuleName(String),
    #[error("{0}")]
    InvalidSet(RuleSetError),
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet, RuleError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
    parse_rules(&text)
}

struct Stanza {
    line: usize,
    name: String,
    priority: i64,
    phase: Phase,
    body: Vec<(usize, String)>,
}

pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut stanzas: Vec<Stanza> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("rule ") {
            stanzas.push(parse_header(header, line_no)?);
        } else {
            let Some(current) = stanzas.last_mut() else {
                return Err(syntax(line_no, "expected 'rule <name> priority <n> phase <phase>'"));
            };
            current.body.push((line_no, line.to_string()));
        }
    }

    let rules = stanzas.into_iter().map(build_rule).collect::<Result<Vec<_>, _>>()?;
    RuleSet::new(rules).map_err(|e| match e {
        RuleSetError::DuplicateRuleName(n) => RuleError::DuplicateRuleName(n),
        other => RuleError::InvalidSet(other),
    })
}

fn syntax(line: usize, message: impl Into<String>) -> RuleError {
    RuleError::RuleSyntaxError { line, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    let mut in_text = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_text => escaped = true,
            '"' => in_text = !in_text,
            '#' if !in_text => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_header(header: &str, line: usize) -> Result<Stanza, RuleError> {
    let words: Vec<&str> = header.split_whitespace().collect();
    let [name, "priority", priority, "phase", phase] = words.as_slice() else {
        return Err(syntax(line, "expected 'rule <name> priority <n> phase <simplify|expand>'"));
    };
    if !crate::syntax::is_identifier(name) {
        return Err(syntax(line, format!("invalid rule name '{name}'")));
    }
    let priority = priority
        .parse()
        .map_err(|_| syntax(line, format!("priority must be an integer, got '{priority}'")))?;
    let phase = Phase::parse(phase).ok_or_else(|| syntax(line, format!("unknown phase '{phase}'")))?;
    Ok(Stanza { line, name: name.to_string(), priority, phase, body: Vec::new() })
}

fn build_rule(st: Stanza) -> Result<RewriteRule, RuleError> {
    let mut pattern_lines = Vec::new();
    let mut guards: Vec<(usize, String, Guard)> = Vec::new();
    let mut builtin = None;

    for (line, text) in &st.body {
        if let Some(rest) = text.strip_prefix("where ") {
            for clause in rest.split(',') {
                let (var, guard) = clause
                    .split_once(':')
                    .ok_or_else(|| syntax(*line, "expected 'where ?var : guard'"))?;
                let var = var.trim();
                let var = var
                    .strip_prefix('?')
                    .ok_or_else(|| syntax(*line, format!("guard target '{var}' is not a pattern variable")))?;
                let guard_name = guard.trim();
                let guard = Guard::from_name(guard_name)
                    .ok_or_else(|| syntax(*line, format!("unknown guard '{guard_name}'")))?;
                guards.push((*line, var.trim_end_matches('*').to_string(), guard));
            }
        } else if let Some(rest) = text.strip_prefix("builtin ") {
            let name = rest.trim();
            builtin = Some(BuiltinRule::from_name(name).ok_or_else(|| syntax(*line, format!("unknown builtin rule '{name}'")))?);
        } else {
            pattern_lines.push((*line, text.as_str()));
        }
    }

    if let Some(b) = builtin {
        if !pattern_lines.is_empty() || !guards.is_empty() {
            return Err(syntax(st.line, "a builtin rule takes no pattern or guards"));
        }
        return Ok(RewriteRule::new(st.name, st.priority, st.phase, RuleAction::Builtin(b)).expect("builtins bind nothing"));
    }

    let Some(&(first_line, _)) = pattern_lines.first() else {
        return Err(syntax(st.line, format!("rule '{}' has no body", st.name)));
    };
    let joined: String = pattern_lines.iter().map(|(_, t)| *t).collect::<Vec<_>>().join("\n");
    let (lhs_text, rhs_text) = split_arrow(&joined).ok_or_else(|| syntax(first_line, "expected '=>'"))?;
    let arrow_line = pattern_lines
        .iter()
        .find(|(_, t)| t.contains("=>"))
        .map_or(first_line, |(l, _)| *l);

    let lhs = parse_side(lhs_text, first_line)?;
    let rhs = parse_side(rhs_text, arrow_line)?;
    let mut lhs = Pattern::new(lhs).map_err(|m| syntax(first_line, m))?;
    for (line, var, guard) in guards {
        lhs = lhs.with_guard(&var, guard).map_err(|m| syntax(line, m))?;
    }
    check_builtins(&rhs).map_err(|m| syntax(arrow_line, m))?;

    RewriteRule::new(st.name.clone(), st.priority, st.phase, RuleAction::Rewrite { lhs, rhs }).map_err(|e| match e {
        RewriteError::UnboundVariable(var) => RuleError::UnboundVariable { rule: st.name, var },
        other => syntax(st.line, other.to_string()),
    })
}

fn split_arrow(text: &str) -> Option<(&str, &str)> {
    let mut in_text = false;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i + 1 < bytes.len() {
        match bytes[i] {
            b'\\' if in_text => i += 1,
            b'"' => in_text = !in_text,
            b'=' if !in_text && bytes[i + 1] == b'>' => return Some((&text[..i], &text[i + 2..])),
            _ => {}
        }
        i += 1;
    }
    None
}

fn parse_side(text: &str, line: usize) -> Result<PatNode, RuleError> {
    let text = text.trim();
    let parsed = if text.starts_with('(') { parse_sexp_pattern(text) } else { parse_pexp_pattern(text) };
    let expr = parsed.map_err(|e| syntax(line, e.to_string()))?;
    PatNode::from_expr(&expr).map_err(|m| syntax(line, m))
}

fn check_builtins(p: &PatNode) -> Result<(), String> {
    match p {
        PatNode::Builtin { name, args } => {
            if !TEMPLATE_BUILTINS.contains(&name.as_str()) {
                return Err(format!("unknown template builtin @{name}"));
            }
            args.iter().try_for_each(check_builtins)
        }
        PatNode::Call { positional, named, .. } => {
            positional.iter().try_for_each(check_builtins)?;
            named.iter().try_for_each(|(_, p)| check_builtins(p))
        }
        PatNode::Wildcard => Err("?_ cannot appear in a template".into()),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r##"
# bundles the two delete steps
rule bundle_delete priority 10 phase simplify
  (DeleteCommitEventWrapper (DeletePreflightEventWrapper ?x))
  => DeleteEvent(?x)

rule by_name priority 9 phase simplify
  (RecipientWithNameLike ?e (PersonName.apply ?n))   # trailing comment
  => @sym(?n)
  where ?e : empty_constraint, ?n : text

rule hash_in_text priority 8 phase simplify
  f("#x") => g("#x")

rule inline priority 1 phase simplify
  builtin inline_single_use_let
"##;

    #[test]
    fn parses_sample_rules_in_priority_order() {
        let rules = parse_rules(SAMPLE).unwrap();
        let names: Vec<&str> = rules.rules().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["bundle_delete", "by_name", "hash_in_text", "inline"]);
        assert_eq!(rules.phase(), Some(Phase::Simplify));
        let RuleAction::Rewrite { lhs, .. } = &rules.get("by_name").unwrap().action else { panic!() };
        assert_eq!(lhs.guards["e"], vec![Guard::EmptyConstraint]);
        assert_eq!(lhs.guards["n"], vec![Guard::Text]);
    }

    #[test]
    fn empty_file_is_an_empty_set() {
        assert!(parse_rules("").unwrap().is_empty());
        assert!(parse_rules("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn unbound_rhs_variable() {
        let err = parse_rules("rule r priority 1 phase simplify\n  f(?x) => g(?y)\n").unwrap_err();
        assert_eq!(err, RuleError::UnboundVariable { rule: "r".into(), var: "y".into() });
    }

    #[test]
    fn duplicate_names_and_priorities() {
        let dup = "rule r priority 1 phase simplify\n f() => g()\nrule r priority 2 phase simplify\n g() => h()\n";
        assert_eq!(parse_rules(dup).unwrap_err(), RuleError::DuplicateRuleName("r".into()));
        let prio = "rule a priority 1 phase simplify\n f() => g()\nrule b priority 1 phase simplify\n g() => h()\n";
        assert!(matches!(parse_rules(prio).unwrap_err(), RuleError::InvalidSet(RuleSetError::DuplicatePriority(..))));
        let mixed = "rule a priority 1 phase simplify\n f() => g()\nrule b priority 2 phase expand\n g() => h()\n";
        assert!(matches!(parse_rules(mixed).unwrap_err(), RuleError::InvalidSet(RuleSetError::MixedPhases(..))));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_rules("rule a priority x phase simplify\n").unwrap_err();
        assert!(matches!(err, RuleError::RuleSyntaxError { line: 1, .. }));
        let err = parse_rules("\n\nrule a priority 1 phase simplify\n  f(?x) g(?x)\n").unwrap_err();
        assert!(matches!(err, RuleError::RuleSyntaxError { line: 4, .. }));
        let err = parse_rules("f() => g()\n").unwrap_err();
        assert!(matches!(err, RuleError::RuleSyntaxError { line: 1, .. }));
        let err = parse_rules("rule a priority 1 phase simplify\n  f(?x) => g(?x)\n  where ?x : shiny\n").unwrap_err();
        assert!(matches!(err, RuleError::RuleSyntaxError { line: 3, .. }));
        let err = parse_rules("rule a priority 1 phase simplify\n  f(?x) => @nope(?x)\n").unwrap_err();
        assert!(matches!(err, RuleError::RuleSyntaxError { line: 2, .. }));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_rules("/nonexistent/x.rules"), Err(RuleError::Io(_))));
    }
}
