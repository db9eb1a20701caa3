use std::collections::BTreeSet;

use crate::graph::{
    build_expr, check_call, duplicate_subgraph_mapped, BuildError, DialogueContext, GraphNode, NodeId, Origin,
};
use crate::syntax::ExprNode;
use crate::value::{ConstraintValue, TypeTag, Value};

use super::{evaluate, variadic_name, EngineException, ExceptionKind, ExecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviseMode {
    /// Swap the matched subtree for the new expression.
    Replace,
    /// Conjoin the new constraint to the matched constraint.
    ExtendAnd,
}

impl ReviseMode {
    pub fn parse(s: &str) -> Option<ReviseMode> {
        match s {
            "replace" => Some(ReviseMode::Replace),
            "extend_and" => Some(ReviseMode::ExtendAnd),
            _ => None,
        }
    }
}

/// A turn appended by `revise` or `resume_exception` and how it evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnResult {
    pub root: NodeId,
    pub outcome: Result<Value, EngineException>,
}

/// Newest node reachable from a turn root that satisfies `spec`, with the
/// index of its turn.
fn find_revisable(spec: &ConstraintValue, ctx: &DialogueContext) -> Option<(usize, NodeId)> {
    for t in (0..ctx.turns.len()).rev() {
        let mut ids = ctx.post_order(ctx.turns[t]).ok()?;
        ids.sort_by(|a, b| b.cmp(a));
        let hit = ids.into_iter().find(|id| {
            let n = &ctx.nodes[id];
            n.type_tag == spec.target && n.result.as_ref().is_some_and(|v| spec.holds(v, &ctx.db))
        });
        if let Some(id) = hit {
            return Some((t, id));
        }
    }
    None
}

/// Copies the turn containing the newest node matching `old_spec`, edits
/// the copy, appends it as a new turn and evaluates it. `new_subexpr` must
/// already be expanded.
pub fn revise(
    old_spec: &ConstraintValue,
    new_subexpr: &ExprNode,
    mode: ReviseMode,
    ctx: &mut DialogueContext,
) -> Result<TurnResult, ExecError> {
    let (turn, matched) = find_revisable(old_spec, ctx)
        .ok_or_else(|| ExecError::NoMatch(format!("no evaluated {} node satisfies the constraint", old_spec.target)))?;
    let first = ctx.next_id();
    let root = match revise_copy(turn, matched, new_subexpr, mode, ctx) {
        Ok(root) => root,
        Err(e) => {
            ctx.nodes.retain(|id, _| *id < first);
            return Err(e);
        }
    };
    ctx.turns.push(root);
    let outcome = evaluate(root, ctx);
    Ok(TurnResult { root, outcome })
}

fn revise_copy(
    turn: usize,
    matched: NodeId,
    new_subexpr: &ExprNode,
    mode: ReviseMode,
    ctx: &mut DialogueContext,
) -> Result<NodeId, ExecError> {
    let old_tag = ctx.nodes[&matched].type_tag.clone();
    let mapping = duplicate_subgraph_mapped(ctx.turns[turn], ctx)?;
    let copy_root = mapping[&ctx.turns[turn]];
    let target = mapping[&matched];
    let pending = ctx.pending_turn();
    let new_id = build_expr(new_subexpr, ctx, pending)?;
    let new_tag = ctx.nodes[&new_id].type_tag.clone();

    let replacement = match mode {
        ReviseMode::Replace => {
            for (consumer, param) in ctx.consumers(target) {
                let spec = ctx.registry.get(&ctx.nodes[&consumer].func).expect("built nodes are registered");
                let ty = spec.param_type(&param).expect("built inputs are declared");
                if !ty.accepts(&new_tag) {
                    return Err(ExecError::TypeMismatch { expected: ty.to_string(), found: new_tag });
                }
            }
            new_id
        }
        ReviseMode::ExtendAnd => {
            if !matches!(old_tag, TypeTag::Constraint(_)) || new_tag != old_tag {
                return Err(ExecError::TypeMismatch { expected: old_tag.to_string(), found: new_tag });
            }
            let node = ctx.nodes.get_mut(&target).expect("copied");
            if node.func == "AND" {
                let k = node.inputs.len();
                node.inputs.push((variadic_name(k), new_id));
                return Ok(prune(copy_root, &mapping.values().copied().collect(), ctx));
            }
            let id = ctx.alloc();
            ctx.nodes.insert(
                id,
                GraphNode {
                    id,
                    func: "AND".into(),
                    inputs: vec![(variadic_name(0), target), (variadic_name(1), new_id)],
                    literal: None,
                    result: None,
                    type_tag: old_tag,
                    origin: Origin::Revision,
                    turn_index: pending,
                    result_node: None,
                },
            );
            id
        }
    };

    rewire(target, replacement, ctx);
    let root = if target == copy_root { replacement } else { copy_root };
    Ok(prune(root, &mapping.values().copied().collect(), ctx))
}

/// Points every consumer of `from` at `to`, except `to` itself.
fn rewire(from: NodeId, to: NodeId, ctx: &mut DialogueContext) {
    for (consumer, param) in ctx.consumers(from) {
        if consumer == to {
            continue;
        }
        let node = ctx.nodes.get_mut(&consumer).expect("consumer exists");
        for (p, input) in node.inputs.iter_mut() {
            if *p == param {
                *input = to;
            }
        }
    }
}

/// Drops copied nodes no longer reachable from `root`.
fn prune(root: NodeId, copies: &BTreeSet<NodeId>, ctx: &mut DialogueContext) -> NodeId {
    let live: BTreeSet<NodeId> = ctx.post_order(root).expect("acyclic").into_iter().collect();
    ctx.nodes.retain(|id, _| !copies.contains(id) || live.contains(id));
    root
}

/// Supplies the value a pending `MissingValue` exception asked for: the
/// suspended turn is copied with `value_expr` wired into the missing slot,
/// appended and evaluated. The old exception is removed whether or not the
/// new turn raises.
pub fn resume_exception(value_expr: &ExprNode, ctx: &mut DialogueContext) -> Result<TurnResult, ExecError> {
    let exc = ctx.exceptions.last().cloned().ok_or(ExecError::NoPendingException)?;
    if exc.kind != ExceptionKind::MissingValue {
        return Err(ExecError::NotResumable(exc.kind));
    }
    let slot = exc.slot.clone().expect("MissingValue carries a slot");
    let expected = exc.expected.clone().expect("MissingValue carries a type");
    let turn = ctx.turn_of(exc.node).ok_or_else(|| ExecError::NoMatch("the suspended turn is gone".into()))?;

    let first = ctx.next_id();
    let result = wire_value(value_expr, &exc, &slot, &expected, turn, ctx);
    let root = match result {
        Ok(root) => root,
        Err(e) => {
            ctx.nodes.retain(|id, _| *id < first);
            return Err(e);
        }
    };
    let pending_index = ctx.exceptions.len() - 1;
    ctx.turns.push(root);
    let outcome = evaluate(root, ctx);
    ctx.exceptions.remove(pending_index);
    Ok(TurnResult { root, outcome })
}

fn wire_value(
    value_expr: &ExprNode,
    exc: &EngineException,
    slot: &str,
    expected: &TypeTag,
    turn: usize,
    ctx: &mut DialogueContext,
) -> Result<NodeId, ExecError> {
    let pending = ctx.pending_turn();
    let mut value = build_expr(value_expr, ctx, pending)?;
    let tag = ctx.nodes[&value].type_tag.clone();
    if &tag != expected {
        let func = ctx.nodes[&exc.node].func.clone();
        let registry = ctx.registry.clone();
        let chain = registry
            .get(&func)
            .and_then(|spec| spec.coercion(slot, &tag))
            .map(|c| c.chain.clone())
            .ok_or_else(|| ExecError::TypeMismatch { expected: expected.to_string(), found: tag.clone() })?;
        for f in chain {
            value = build_wrapped(&f, value, ctx, pending)?;
        }
        let got = &ctx.nodes[&value].type_tag;
        if got != expected {
            return Err(ExecError::TypeMismatch { expected: expected.to_string(), found: got.clone() });
        }
    }

    let mapping = duplicate_subgraph_mapped(ctx.turns[turn], ctx)?;
    let target = mapping[&exc.node];
    let node = ctx.nodes.get_mut(&target).expect("copied");
    match node.inputs.iter_mut().find(|(p, _)| p == slot) {
        Some((_, input)) => *input = value,
        None => node.inputs.push((slot.to_string(), value)),
    }
    let root = mapping[&ctx.turns[turn]];
    Ok(prune(root, &mapping.values().copied().collect(), ctx))
}

/// Builds a one-argument call to `head` around an existing node.
fn build_wrapped(head: &str, input: NodeId, ctx: &mut DialogueContext, turn: usize) -> Result<NodeId, ExecError> {
    let registry = ctx.registry.clone();
    let spec = registry.get(head).ok_or_else(|| BuildError::UnknownFunction(head.to_string()))?;
    let param = spec.positional_names(1).map_err(|_| ExecError::NoMatch(format!("{head} takes no input")))?.remove(0);
    let input_node = &ctx.nodes[&input];
    let lit = input_node.literal.clone().filter(|_| input_node.is_literal());
    let tag = check_call(spec, &[(param.clone(), input_node.type_tag.clone(), lit)])?;
    let id = ctx.alloc();
    ctx.nodes.insert(
        id,
        GraphNode {
            id,
            func: head.to_string(),
            inputs: vec![(param, input)],
            literal: None,
            result: None,
            type_tag: tag,
            origin: Origin::Expansion,
            turn_index: turn,
            result_node: None,
        },
    );
    Ok(id)
}
