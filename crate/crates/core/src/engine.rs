//! The two pipelines over one registry: original annotations run as-is,
//! simplified annotations are expanded and coerced first.

use std::sync::Arc;

use crate::calendar::StubDb;
use crate::exec::{evaluate, resume_exception, revise, ExecError, FunctionRegistry, ReviseMode, TurnResult};
use crate::expand::{coerce, CoerceError};
use crate::graph::{build_graph, BuildError, DialogueContext};
use crate::rewrite::{parse_rules, RewriteError, Rewriter, RuleError, RuleSet};
use crate::syntax::ExprNode;
use crate::value::{ConstraintValue, Value};

pub const SIMPLIFY_RULES: &str = include_str!("../assets/rules/simplify.rules");
pub const EXPAND_RULES: &str = include_str!("../assets/rules/expand.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Build the expression as written.
    Legacy,
    /// Apply expansion rules and coercions, then build.
    Expand,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Coerce(#[from] CoerceError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("expected a constraint, got {0:?}")]
    NotAConstraint(Value),
    #[error("evaluating the constraint raised: {0}")]
    Raised(String),
}

#[derive(Debug, Clone)]
pub struct Engine {
    registry: Arc<FunctionRegistry>,
    simplify_rules: RuleSet,
    expand_rules: RuleSet,
}

impl Engine {
    /// Standard registry with the bundled rule packs.
    pub fn standard() -> Engine {
        let simplify = parse_rules(SIMPLIFY_RULES).expect("bundled simplify rules parse");
        let expand = parse_rules(EXPAND_RULES).expect("bundled expand rules parse");
        Engine::new(Arc::new(FunctionRegistry::standard()), simplify, expand)
    }

    pub fn new(registry: Arc<FunctionRegistry>, simplify_rules: RuleSet, expand_rules: RuleSet) -> Engine {
        Engine { registry, simplify_rules, expand_rules }
    }

    pub fn registry(&self) -> &Arc<FunctionRegistry> {
        &self.registry
    }

    pub fn simplify_rules(&self) -> &RuleSet {
        &self.simplify_rules
    }

    pub fn expand_rules(&self) -> &RuleSet {
        &self.expand_rules
    }

    /// Fresh dialogue over `db` at the default clock.
    pub fn context(&self, db: StubDb) -> DialogueContext {
        DialogueContext::new(self.registry.clone(), db)
    }

    pub fn simplify(&self, e: &ExprNode) -> Result<ExprNode, RewriteError> {
        Rewriter::new(&self.simplify_rules).with_purity(self.registry.as_ref()).rewrite(e)
    }

    pub fn expand(&self, e: &ExprNode) -> Result<ExprNode, EngineError> {
        let rewritten = Rewriter::new(&self.expand_rules).with_purity(self.registry.as_ref()).rewrite(e)?;
        Ok(coerce(&rewritten, &self.registry)?.0)
    }

    /// Appends `e` as a new turn and evaluates it.
    pub fn run_turn(&self, ctx: &mut DialogueContext, e: &ExprNode, mode: Mode) -> Result<TurnResult, EngineError> {
        let e = match mode {
            Mode::Legacy => e.clone(),
            Mode::Expand => self.expand(e)?,
        };
        let root = build_graph(&e, ctx)?;
        let outcome = evaluate(root, ctx);
        Ok(TurnResult { root, outcome })
    }

    /// Answers the pending exception with `value`.
    pub fn resume(&self, ctx: &mut DialogueContext, value: &ExprNode, mode: Mode) -> Result<TurnResult, EngineError> {
        let value = match mode {
            Mode::Legacy => value.clone(),
            Mode::Expand => self.expand(value)?,
        };
        Ok(resume_exception(&value, ctx)?)
    }

    /// Evaluates `old_spec` to a constraint, then revises with `new_subexpr`.
    pub fn revise(
        &self,
        ctx: &mut DialogueContext,
        old_spec: &ExprNode,
        new_subexpr: &ExprNode,
        mode: ReviseMode,
    ) -> Result<TurnResult, EngineError> {
        let spec = self.eval_constraint(ctx, old_spec)?;
        let new_subexpr = self.expand(new_subexpr)?;
        Ok(revise(&spec, &new_subexpr, mode, ctx)?)
    }

    /// Evaluates a constraint expression on a scratch copy of `ctx`.
    pub fn eval_constraint(&self, ctx: &DialogueContext, e: &ExprNode) -> Result<ConstraintValue, EngineError> {
        let mut scratch = ctx.clone();
        let e = self.expand(e)?;
        let root = build_graph(&e, &mut scratch)?;
        match evaluate(root, &mut scratch) {
            Ok(Value::Constraint(c)) => Ok(c),
            Ok(other) => Err(EngineError::NotAConstraint(other)),
            Err(exc) => Err(EngineError::Raised(exc.to_string())),
        }
    }
}
