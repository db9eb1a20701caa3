//! Bottom-up term rewriting over [`ExprNode`] trees.
//!
//! One engine runs two rule packs: `simplify` (original annotation to
//! simplified annotation) and `expand` (simplified annotation to an
//! executable expression). Rules come from a small text format, see [`dsl`].

pub mod dsl;
mod engine;
mod inline;
mod pattern;

use std::collections::BTreeSet;
use std::fmt;

pub use dsl::{load_rules, parse_rules, RuleError};
pub use engine::{rewrite_fixpoint, Rewriter, DEFAULT_MAX_PASSES};
pub use inline::inline_single_use_lets;
pub use pattern::{
    expr_is_pure, instantiate, is_empty_constraint, match_pattern, match_pattern_with, AssumeEffectful, Binding,
    Bound, Guard, PatNode, Pattern, Purity, TEMPLATE_BUILTINS,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("unbound template variable ?{0}")]
    UnboundVariable(String),
    #[error("rewriting did not reach a fixpoint within {0} passes")]
    RewriteDivergence(usize),
    #[error("template error: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Simplify,
    Expand,
}

impl Phase {
    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "simplify" => Some(Phase::Simplify),
            "expand" => Some(Phase::Expand),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Simplify => "simplify",
            Phase::Expand => "expand",
        })
    }
}

/// Rewrites implemented in code rather than as a pattern/template pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinRule {
    /// Substitute `let` bindings that are used at most once and are pure.
    InlineSingleUseLet,
}

impl BuiltinRule {
    pub fn from_name(name: &str) -> Option<BuiltinRule> {
        match name {
            "inline_single_use_let" => Some(BuiltinRule::InlineSingleUseLet),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleAction {
    Rewrite { lhs: Pattern, rhs: PatNode },
    Builtin(BuiltinRule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub name: String,
    pub priority: i64,
    pub phase: Phase,
    pub action: RuleAction,
}

impl RewriteRule {
    /// Checks that every template variable is bound by the left-hand side.
    pub fn new(name: impl Into<String>, priority: i64, phase: Phase, action: RuleAction) -> Result<Self, RewriteError> {
        if let RuleAction::Rewrite { lhs, rhs } = &action {
            let bound: BTreeSet<&str> = lhs.root.variables().into_iter().map(|(v, _)| v).collect();
            if let Some((v, _)) = rhs.variables().into_iter().find(|(v, _)| !bound.contains(v)) {
                return Err(RewriteError::UnboundVariable(v.to_string()));
            }
        }
        Ok(RewriteRule { name: name.into(), priority, phase, action })
    }
}

/// Rules for one phase, highest priority first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleSetError {
    #[error("duplicate rule name '{0}'")]
    DuplicateRuleName(String),
    #[error("rules '{0}' and '{1}' share priority {2}")]
    DuplicatePriority(String, String, i64),
    #[error("rule '{0}' is in phase {1}, but the set is for phase {2}")]
    MixedPhases(String, Phase, Phase),
}

impl RuleSet {
    pub fn new(mut rules: Vec<RewriteRule>) -> Result<RuleSet, RuleSetError> {
        let mut names = BTreeSet::new();
        for r in &rules {
            if !names.insert(r.name.as_str()) {
                return Err(RuleSetError::DuplicateRuleName(r.name.clone()));
            }
        }
        if let Some(first) = rules.first() {
            if let Some(r) = rules.iter().find(|r| r.phase != first.phase) {
                return Err(RuleSetError::MixedPhases(r.name.clone(), r.phase, first.phase));
            }
        }
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        for w in rules.windows(2) {
            if w[0].priority == w[1].priority {
                return Err(RuleSetError::DuplicatePriority(w[0].name.clone(), w[1].name.clone(), w[0].priority));
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn phase(&self) -> Option<Phase> {
        self.rules.first().map(|r| r.phase)
    }

    pub fn get(&self, name: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.name == name)
    }
}
