use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::{is_identifier, print_pexp, ExprKind, ExprNode};

use super::RewriteError;

/// Tells the matcher which functions are free of side effects.
pub trait Purity {
    fn is_pure(&self, head: &str) -> bool;
}

/// Treats every call as effectful; only literal trees count as pure.
#[derive(Debug, Default, Clone, Copy)]
pub struct AssumeEffectful;

impl Purity for AssumeEffectful {
    fn is_pure(&self, _head: &str) -> bool {
        false
    }
}

/// `true` when every call in `e` is pure.
pub fn expr_is_pure(e: &ExprNode, purity: &dyn Purity) -> bool {
    e.call_heads().into_iter().all(|h| purity.is_pure(h))
}

/// A constraint call with no arguments, such as `(EmptyStructConstraint)`.
pub fn is_empty_constraint(e: &ExprNode) -> bool {
    match &e.kind {
        ExprKind::Call { head, positional, named } => {
            positional.is_empty() && named.is_empty() && head.ends_with("Constraint")
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    Text,
    Symbol,
    Number,
    Bool,
    Literal,
    Call,
    EmptyConstraint,
    Pure,
}

impl Guard {
    pub fn from_name(name: &str) -> Option<Guard> {
        Some(match name {
            "text" => Guard::Text,
            "symbol" => Guard::Symbol,
            "number" => Guard::Number,
            "bool" => Guard::Bool,
            "literal" => Guard::Literal,
            "call" => Guard::Call,
            "empty_constraint" => Guard::EmptyConstraint,
            "pure" => Guard::Pure,
            _ => return None,
        })
    }

    pub fn holds(self, e: &ExprNode, purity: &dyn Purity) -> bool {
        match self {
            Guard::Text => matches!(e.kind, ExprKind::Text(_)),
            Guard::Symbol => matches!(e.kind, ExprKind::Symbol(_)),
            Guard::Number => matches!(e.kind, ExprKind::Num(_)),
            Guard::Bool => matches!(e.kind, ExprKind::Bool(_)),
            Guard::Literal => matches!(
                e.kind,
                ExprKind::Text(_) | ExprKind::Num(_) | ExprKind::Bool(_) | ExprKind::Symbol(_)
            ),
            Guard::Call => matches!(e.kind, ExprKind::Call { .. }),
            Guard::EmptyConstraint => is_empty_constraint(e),
            Guard::Pure => expr_is_pure(e, purity),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatNode {
    /// `?x`: exactly one subtree.
    Var(String),
    /// `?xs*`: zero or more sibling arguments.
    Segment(String),
    /// `?_`
    Wildcard,
    Call {
        head: String,
        positional: Vec<PatNode>,
        named: Vec<(String, PatNode)>,
    },
    /// `@name(...)` template function; only valid on a right-hand side.
    Builtin { name: String, args: Vec<PatNode> },
    /// Symbols, literals and variable references match by equality.
    Leaf(ExprKind),
}

/// Left-hand side of a rule: a tree shape plus per-variable guards.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub root: PatNode,
    pub guards: BTreeMap<String, Vec<Guard>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    One(ExprNode),
    Seq(Vec<ExprNode>),
}

/// Variable name (without `?`) to matched subtree(s).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(pub BTreeMap<String, Bound>);

impl Binding {
    pub fn get(&self, name: &str) -> Option<&Bound> {
        self.0.get(name)
    }

    pub fn one(&self, name: &str) -> Option<&ExprNode> {
        match self.0.get(name) {
            Some(Bound::One(e)) => Some(e),
            _ => None,
        }
    }

    pub fn seq(&self, name: &str) -> Option<&[ExprNode]> {
        match self.0.get(name) {
            Some(Bound::Seq(v)) => Some(v),
            _ => None,
        }
    }
}

impl PatNode {
    /// Converts a tree parsed in pattern mode (where `?x` reads as a symbol
    /// and `@f` as a call head).
    pub fn from_expr(e: &ExprNode) -> Result<PatNode, String> {
        Ok(match &e.kind {
            ExprKind::Symbol(s) if s.starts_with('?') => {
                let name = &s[1..];
                if name == "_" {
                    PatNode::Wildcard
                } else if let Some(seg) = name.strip_suffix('*') {
                    PatNode::Segment(seg.to_string())
                } else {
                    PatNode::Var(name.to_string())
                }
            }
            ExprKind::Call { head, positional, named } => {
                let positional = positional.iter().map(PatNode::from_expr).collect::<Result<Vec<_>, _>>()?;
                if let Some(name) = head.strip_prefix('@') {
                    if !named.is_empty() {
                        return Err(format!("template builtin @{name} takes no named arguments"));
                    }
                    PatNode::Builtin { name: name.to_string(), args: positional }
                } else {
                    let named = named
                        .iter()
                        .map(|(k, v)| Ok((k.clone(), PatNode::from_expr(v)?)))
                        .collect::<Result<Vec<_>, String>>()?;
                    if named.iter().any(|(_, p)| matches!(p, PatNode::Segment(_))) {
                        return Err("segment variables may only appear among positional arguments".into());
                    }
                    PatNode::Call { head: head.clone(), positional, named }
                }
            }
            ExprKind::Let { .. } => return Err("let forms are not supported in patterns".into()),
            other => PatNode::Leaf(other.clone()),
        })
    }

    /// Variables in order of appearance, with a flag for segment variables.
    pub fn variables(&self) -> Vec<(&str, bool)> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<(&'a str, bool)>) {
        match self {
            PatNode::Var(v) => out.push((v, false)),
            PatNode::Segment(v) => out.push((v, true)),
            PatNode::Call { positional, named, .. } => {
                positional.iter().for_each(|p| p.collect_vars(out));
                named.iter().for_each(|(_, p)| p.collect_vars(out));
            }
            PatNode::Builtin { args, .. } => args.iter().for_each(|p| p.collect_vars(out)),
            PatNode::Wildcard | PatNode::Leaf(_) => {}
        }
    }

    fn has_builtin(&self) -> bool {
        match self {
            PatNode::Builtin { .. } => true,
            PatNode::Call { positional, named, .. } => {
                positional.iter().any(PatNode::has_builtin) || named.iter().any(|(_, p)| p.has_builtin())
            }
            _ => false,
        }
    }
}

impl Pattern {
    pub fn new(root: PatNode) -> Result<Pattern, String> {
        if matches!(root, PatNode::Segment(_)) {
            return Err("a segment variable cannot be a whole pattern".into());
        }
        if root.has_builtin() {
            return Err("template builtins are not allowed in a left-hand side".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for (v, _) in root.variables() {
            if !seen.insert(v) {
                return Err(format!("variable ?{v} appears more than once"));
            }
        }
        Ok(Pattern { root, guards: BTreeMap::new() })
    }

    pub fn with_guard(mut self, var: &str, guard: Guard) -> Result<Pattern, String> {
        if !self.root.variables().iter().any(|(v, _)| *v == var) {
            return Err(format!("guard on ?{var}, which the pattern does not bind"));
        }
        self.guards.entry(var.to_string()).or_default().push(guard);
        Ok(self)
    }

    fn guards_hold(&self, var: &str, e: &ExprNode, purity: &dyn Purity) -> bool {
        self.guards
            .get(var)
            .is_none_or(|gs| gs.iter().all(|g| g.holds(e, purity)))
    }
}

impl fmt::Display for PatNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatNode::Var(v) => write!(f, "?{v}"),
            PatNode::Segment(v) => write!(f, "?{v}*"),
            PatNode::Wildcard => write!(f, "?_"),
            PatNode::Call { head, positional, named } => {
                write!(f, "{head}(")?;
                let mut first = true;
                for p in positional {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{p}")?;
                }
                for (k, p) in named {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{k}={p}")?;
                }
                write!(f, ")")
            }
            PatNode::Builtin { name, args } => {
                write!(f, "@{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            PatNode::Leaf(kind) => f.write_str(&print_pexp(&ExprNode::new(kind.clone()))),
        }
    }
}

/// Matches `e` against `p`; every call is treated as effectful for `pure` guards.
pub fn match_pattern(p: &Pattern, e: &ExprNode) -> Option<Binding> {
    match_pattern_with(p, e, &AssumeEffectful)
}

/// Returns the first binding found. Segment variables are tried longest
/// first, left to right, backtracking when the rest of the pattern fails.
pub fn match_pattern_with(p: &Pattern, e: &ExprNode, purity: &dyn Purity) -> Option<Binding> {
    let mut b = Binding::default();
    let cx = MatchCx { pattern: p, purity };
    cx.node(&p.root, e, &mut b).then_some(b)
}

struct MatchCx<'a> {
    pattern: &'a Pattern,
    purity: &'a dyn Purity,
}

impl MatchCx<'_> {
    fn node(&self, p: &PatNode, e: &ExprNode, b: &mut Binding) -> bool {
        match p {
            PatNode::Wildcard => true,
            PatNode::Var(v) => {
                if !self.pattern.guards_hold(v, e, self.purity) {
                    return false;
                }
                b.0.insert(v.clone(), Bound::One(e.clone()));
                true
            }
            PatNode::Segment(_) | PatNode::Builtin { .. } => false,
            PatNode::Leaf(kind) => *kind == e.kind,
            PatNode::Call { head, positional, named } => {
                let ExprKind::Call { head: eh, positional: ep, named: en } = &e.kind else {
                    return false;
                };
                if head != eh || named.len() != en.len() {
                    return false;
                }
                for (k, pn) in named {
                    let Some((_, ev)) = en.iter().find(|(ek, _)| ek == k) else {
                        return false;
                    };
                    if !self.node(pn, ev, b) {
                        return false;
                    }
                }
                self.seq(positional, ep, b)
            }
        }
    }

    fn seq(&self, pats: &[PatNode], exprs: &[ExprNode], b: &mut Binding) -> bool {
        let Some((first, rest)) = pats.split_first() else {
            return exprs.is_empty();
        };
        if let PatNode::Segment(name) = first {
            let fixed = rest.iter().filter(|p| !matches!(p, PatNode::Segment(_))).count();
            let max_take = exprs.len().saturating_sub(fixed);
            for take in (0..=max_take).rev() {
                let items = &exprs[..take];
                if !items.iter().all(|e| self.pattern.guards_hold(name, e, self.purity)) {
                    continue;
                }
                let saved = b.clone();
                b.0.insert(name.clone(), Bound::Seq(items.to_vec()));
                if self.seq(rest, &exprs[take..], b) {
                    return true;
                }
                *b = saved;
            }
            return false;
        }
        let Some((e, erest)) = exprs.split_first() else {
            return false;
        };
        let saved = b.clone();
        if self.node(first, e, b) && self.seq(rest, erest, b) {
            return true;
        }
        *b = saved;
        false
    }
}

/// Substitutes bound variables into a template. New call nodes carry no span.
pub fn instantiate(rhs: &PatNode, b: &Binding) -> Result<ExprNode, RewriteError> {
    match rhs {
        PatNode::Var(v) => match b.get(v) {
            Some(Bound::One(e)) => Ok(e.clone()),
            Some(Bound::Seq(_)) => Err(RewriteError::Template(format!(
                "segment variable ?{v} used outside an argument list"
            ))),
            None => Err(RewriteError::UnboundVariable(v.clone())),
        },
        PatNode::Segment(v) => Err(match b.get(v) {
            None => RewriteError::UnboundVariable(v.clone()),
            Some(_) => RewriteError::Template(format!("segment variable ?{v}* used outside an argument list")),
        }),
        PatNode::Wildcard => Err(RewriteError::Template("?_ cannot appear in a template".into())),
        PatNode::Leaf(kind) => Ok(ExprNode::new(kind.clone())),
        PatNode::Call { head, positional, named } => {
            let positional = instantiate_seq(positional, b)?;
            let named = named
                .iter()
                .map(|(k, p)| Ok((k.clone(), instantiate(p, b)?)))
                .collect::<Result<Vec<_>, RewriteError>>()?;
            Ok(ExprNode::call_named(head.clone(), positional, named))
        }
        PatNode::Builtin { name, args } => {
            let args = instantiate_seq(args, b)?;
            apply_template_builtin(name, args)
        }
    }
}

fn instantiate_seq(pats: &[PatNode], b: &Binding) -> Result<Vec<ExprNode>, RewriteError> {
    let mut out = Vec::new();
    for p in pats {
        match p {
            PatNode::Segment(v) => match b.get(v) {
                Some(Bound::Seq(items)) => out.extend(items.iter().cloned()),
                Some(Bound::One(e)) => out.push(e.clone()),
                None => return Err(RewriteError::UnboundVariable(v.clone())),
            },
            other => out.push(instantiate(other, b)?),
        }
    }
    Ok(out)
}

/// Template functions usable as `@name(...)` on a right-hand side.
pub const TEMPLATE_BUILTINS: [&str; 1] = ["sym"];

fn apply_template_builtin(name: &str, mut args: Vec<ExprNode>) -> Result<ExprNode, RewriteError> {
    match name {
        // Text that is a valid identifier becomes a bare symbol: "John" -> John.
        "sym" => {
            if args.len() != 1 {
                return Err(RewriteError::Template(format!("@sym takes 1 argument, got {}", args.len())));
            }
            let arg = args.pop().unwrap();
            match &arg.kind {
                ExprKind::Text(s) if is_identifier(s) => Ok(ExprNode { kind: ExprKind::Symbol(s.clone()), span: arg.span }),
                _ => Ok(arg),
            }
        }
        other => Err(RewriteError::Template(format!("unknown template builtin @{other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_pexp, parse_pexp_pattern, parse_sexp, parse_sexp_pattern};

    fn pat(s: &str) -> Pattern {
        let e = if s.starts_with('(') { parse_sexp_pattern(s) } else { parse_pexp_pattern(s) }.unwrap();
        Pattern::new(PatNode::from_expr(&e).unwrap()).unwrap()
    }

    fn tmpl(s: &str) -> PatNode {
        PatNode::from_expr(&parse_pexp_pattern(s).unwrap()).unwrap()
    }

    #[test]
    fn single_variable_match() {
        let b = match_pattern(
            &pat("(DeleteCommitEventWrapper ?x)"),
            &parse_sexp("(DeleteCommitEventWrapper (foo))").unwrap(),
        )
        .unwrap();
        assert_eq!(b.one("x"), Some(&parse_sexp("(foo)").unwrap()));
    }

    #[test]
    fn head_mismatch() {
        assert!(match_pattern(&pat("(andConstraint ?a ?b)"), &parse_sexp("(orConstraint x y)").unwrap()).is_none());
    }

    /// Enumerates every way to split the outer arguments and keeps the ones
    /// whose last element is an `AND` call.
    fn nested_and_splits(args: &[ExprNode]) -> Vec<(Vec<ExprNode>, Vec<ExprNode>)> {
        let mut out = Vec::new();
        for cut in 0..=args.len() {
            let (xs, rest) = args.split_at(cut);
            if let [only] = rest {
                if let ExprKind::Call { head, positional, named } = &only.kind {
                    if head == "AND" && named.is_empty() {
                        out.push((xs.to_vec(), positional.clone()));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn segment_match_agrees_with_enumeration() {
        let e = parse_pexp("AND(a(), AND(b(), c()))").unwrap();
        let ExprKind::Call { positional, .. } = &e.kind else { panic!() };
        let splits = nested_and_splits(positional);
        assert_eq!(splits.len(), 1);
        let b = match_pattern(&pat("AND(?xs*, AND(?ys*))"), &e).unwrap();
        assert_eq!(b.seq("xs").unwrap(), splits[0].0.as_slice());
        assert_eq!(b.seq("ys").unwrap(), splits[0].1.as_slice());
        assert_eq!(b.seq("xs").unwrap(), [parse_pexp("a()").unwrap()]);
    }

    #[test]
    fn guards_restrict_matches() {
        let p = pat("f(?x)").with_guard("x", Guard::Text).unwrap();
        assert!(match_pattern(&p, &parse_pexp("f(\"a\")").unwrap()).is_some());
        assert!(match_pattern(&p, &parse_pexp("f(a)").unwrap()).is_none());

        let p = pat("AND(?xs*, ?e, ?ys*)").with_guard("e", Guard::EmptyConstraint).unwrap();
        let b = match_pattern(&p, &parse_pexp("AND(a(), EventConstraint(), b())").unwrap()).unwrap();
        assert_eq!(b.seq("xs").unwrap().len(), 1);
        assert_eq!(b.seq("ys").unwrap().len(), 1);
    }

    #[test]
    fn named_arguments_must_match_exactly() {
        let p = pat("at(?d, ?h)");
        assert!(match_pattern(&p, &parse_pexp("at(x, 1)").unwrap()).is_some());
        assert!(match_pattern(&p, &parse_pexp("at(x, 1, pm=true)").unwrap()).is_none());
        let p = pat("at(?d, ?h, pm=?p)");
        let b = match_pattern(&p, &parse_pexp("at(x, 1, pm=true)").unwrap()).unwrap();
        assert_eq!(b.one("p"), Some(&ExprNode::boolean(true)));
    }

    #[test]
    fn instantiate_substitutes_and_splices() {
        let mut b = Binding::default();
        b.0.insert("x".into(), Bound::One(parse_pexp("foo()").unwrap()));
        assert_eq!(print_pexp(&instantiate(&tmpl("DeleteEvent(?x)"), &b).unwrap()), "DeleteEvent(foo())");

        let b = match_pattern(&pat("AND(?xs*, AND(?ys*))"), &parse_pexp("AND(a(), AND(b(), c()))").unwrap()).unwrap();
        let out = instantiate(&tmpl("AND(?xs*, ?ys*)"), &b).unwrap();
        assert_eq!(print_pexp(&out), "AND(a(), b(), c())");

        assert_eq!(
            instantiate(&tmpl("f(?z)"), &Binding::default()).unwrap_err(),
            RewriteError::UnboundVariable("z".into())
        );
    }

    #[test]
    fn sym_builtin_only_converts_identifiers() {
        let mut b = Binding::default();
        b.0.insert("n".into(), Bound::One(ExprNode::text("John")));
        assert_eq!(instantiate(&tmpl("@sym(?n)"), &b).unwrap(), ExprNode::symbol("John"));
        b.0.insert("n".into(), Bound::One(ExprNode::text("coffee shop")));
        assert_eq!(instantiate(&tmpl("@sym(?n)"), &b).unwrap(), ExprNode::text("coffee shop"));
    }

    #[test]
    fn pattern_validation() {
        let bad = |s: &str| Pattern::new(PatNode::from_expr(&parse_pexp_pattern(s).unwrap()).unwrap_or(PatNode::Wildcard));
        assert!(bad("f(?x, ?x)").is_err());
        assert!(bad("?xs*").is_err());
        assert!(bad("f(@sym(?x))").is_err());
        assert!(PatNode::from_expr(&parse_pexp_pattern("f(k=?xs*)").unwrap()).is_err());
    }
}
