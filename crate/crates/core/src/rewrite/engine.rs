use crate::syntax::{ExprKind, ExprNode};

use super::inline::inline_single_use_lets;
use super::pattern::{instantiate, match_pattern_with, AssumeEffectful, Purity};
use super::{BuiltinRule, RewriteError, RuleAction, RuleSet};

pub const DEFAULT_MAX_PASSES: usize = 100;

/// Applies a rule set bottom-up until nothing fires.
///
/// Each pass visits children before parents; at every node the first
/// matching rule in priority order fires once. Passes repeat until one
/// fires nothing, or fail after `max_passes`.
pub struct Rewriter<'a> {
    rules: &'a RuleSet,
    purity: &'a dyn Purity,
    max_passes: usize,
}

impl<'a> Rewriter<'a> {
    pub fn new(rules: &'a RuleSet) -> Self {
        Rewriter { rules, purity: &AssumeEffectful, max_passes: DEFAULT_MAX_PASSES }
    }

    pub fn with_purity(mut self, purity: &'a dyn Purity) -> Self {
        self.purity = purity;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn rewrite(&self, e: &ExprNode) -> Result<ExprNode, RewriteError> {
        let mut current = e.clone();
        for _ in 0..self.max_passes {
            let mut fired = false;
            current = self.pass(current, &mut fired)?;
            if !fired {
                return Ok(current);
            }
        }
        Err(RewriteError::RewriteDivergence(self.max_passes))
    }

    fn pass(&self, e: ExprNode, fired: &mut bool) -> Result<ExprNode, RewriteError> {
        let ExprNode { kind, span } = e;
        let kind = match kind {
            ExprKind::Call { head, positional, named } => ExprKind::Call {
                head,
                positional: positional
                    .into_iter()
                    .map(|c| self.pass(c, fired))
                    .collect::<Result<_, _>>()?,
                named: named
                    .into_iter()
                    .map(|(k, c)| Ok((k, self.pass(c, fired)?)))
                    .collect::<Result<_, RewriteError>>()?,
            },
            ExprKind::Let { bindings, body } => ExprKind::Let {
                bindings: bindings
                    .into_iter()
                    .map(|(k, c)| Ok((k, self.pass(c, fired)?)))
                    .collect::<Result<_, RewriteError>>()?,
                body: Box::new(self.pass(*body, fired)?),
            },
            leaf => leaf,
        };
        let node = ExprNode { kind, span };
        match self.apply_first(&node)? {
            Some(rewritten) => {
                *fired = true;
                Ok(rewritten)
            }
            None => Ok(node),
        }
    }

    fn apply_first(&self, node: &ExprNode) -> Result<Option<ExprNode>, RewriteError> {
        for rule in self.rules.rules() {
            let out = match &rule.action {
                RuleAction::Rewrite { lhs, rhs } => match match_pattern_with(lhs, node, self.purity) {
                    Some(b) => Some(instantiate(rhs, &b)?),
                    None => None,
                },
                RuleAction::Builtin(BuiltinRule::InlineSingleUseLet) => inline_single_use_lets(node, self.purity),
            };
            if out.is_some() {
                return Ok(out);
            }
        }
        Ok(None)
    }
}

/// [`Rewriter`] with default settings: 100 passes, calls assumed effectful.
pub fn rewrite_fixpoint(e: &ExprNode, rules: &RuleSet) -> Result<ExprNode, RewriteError> {
    Rewriter::new(rules).rewrite(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::parse_rules;
    use crate::syntax::{parse_pexp, parse_sexp, print_pexp};

    #[test]
    fn flattens_and_chains() {
        let rules = parse_rules(
            "rule and_constraint priority 2 phase simplify\n  (andConstraint ?a ?b) => AND(?a, ?b)\n\
             rule flatten_and priority 1 phase simplify\n  AND(?xs*, AND(?ys*), ?zs*) => AND(?xs*, ?ys*, ?zs*)\n",
        )
        .unwrap();
        let e = parse_sexp("(andConstraint (andConstraint (a) (b)) (c))").unwrap();
        assert_eq!(print_pexp(&rewrite_fixpoint(&e, &rules).unwrap()), "AND(a(), b(), c())");
    }

    #[test]
    fn children_rewrite_before_parents() {
        let rules = parse_rules(
            "rule inner priority 2 phase simplify\n  g() => h()\n\
             rule outer priority 1 phase simplify\n  f(h()) => done()\n",
        )
        .unwrap();
        let e = parse_pexp("f(g())").unwrap();
        assert_eq!(print_pexp(&rewrite_fixpoint(&e, &rules).unwrap()), "done()");
    }

    #[test]
    fn higher_priority_wins() {
        let rules = parse_rules(
            "rule low priority 1 phase simplify\n  f(?x) => low(?x)\n\
             rule high priority 5 phase simplify\n  f(?x) => high(?x)\n",
        )
        .unwrap();
        let out = rewrite_fixpoint(&parse_pexp("f(1)").unwrap(), &rules).unwrap();
        assert_eq!(print_pexp(&out), "high(1)");
    }

    #[test]
    fn divergent_rules_hit_the_cap() {
        let rules = parse_rules("rule grow priority 1 phase simplify\n  f(?x) => f(g(?x))\n").unwrap();
        let err = Rewriter::new(&rules).with_max_passes(7).rewrite(&parse_pexp("f(1)").unwrap()).unwrap_err();
        assert_eq!(err, RewriteError::RewriteDivergence(7));
        let err = rewrite_fixpoint(&parse_pexp("f(1)").unwrap(), &rules).unwrap_err();
        assert_eq!(err, RewriteError::RewriteDivergence(DEFAULT_MAX_PASSES));
    }

    #[test]
    fn empty_rule_set_is_identity() {
        let e = parse_pexp("f(a, k=1)").unwrap();
        assert_eq!(rewrite_fixpoint(&e, &RuleSet::default()).unwrap(), e);
    }

    #[test]
    fn untouched_nodes_keep_their_spans() {
        let rules = parse_rules("rule r priority 1 phase simplify\n  (Yield ?x) => ?x\n").unwrap();
        let e = parse_sexp("(Yield (f (g)))").unwrap();
        let out = rewrite_fixpoint(&e, &rules).unwrap();
        assert!(out.span.is_some());
        let wrapped = parse_rules("rule r priority 1 phase simplify\n  (f ?x) => h(?x)\n").unwrap();
        let out = rewrite_fixpoint(&e, &wrapped).unwrap();
        let ExprKind::Call { positional, .. } = &out.kind else { panic!() };
        assert!(positional[0].span.is_none());
    }
}
