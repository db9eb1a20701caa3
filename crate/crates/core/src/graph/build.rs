use crate::exec::{FunctionRegistry, FunctionSpec, TypeCtx};
use crate::syntax::{ExprKind, ExprNode, Number};
use crate::value::{TypeTag, Value};

use super::{DialogueContext, GraphError, GraphNode, NodeId, Origin};

/// Function name of literal nodes.
pub const LITERAL_FUNC: &str = "#lit";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("{name} takes {expected} argument(s), got {got}")]
    ArityMismatch { name: String, got: usize, expected: String },
    #[error("{func}: argument '{name}' given twice")]
    DuplicateNamedArg { func: String, name: String },
    #[error("{func} has no parameter '{name}'")]
    UnknownParameter { func: String, name: String },
    #[error("unbound variable ${0}")]
    UnboundVariable(String),
    #[error("{func}: parameter '{param}' expects {expected}, got {found}")]
    TypeMismatch { func: String, param: String, expected: String, found: TypeTag },
    #[error("{func}: {message}")]
    ResultType { func: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Value of a literal expression; symbols evaluate to their text.
pub fn literal_value(e: &ExprNode) -> Option<Value> {
    Some(match &e.kind {
        ExprKind::Symbol(s) | ExprKind::Text(s) => Value::Text(s.clone()),
        ExprKind::Num(Number::Int(i)) => Value::Int(*i),
        ExprKind::Num(Number::Decimal(d)) => Value::Decimal(*d),
        ExprKind::Bool(b) => Value::Bool(*b),
        _ => return None,
    })
}

/// Pairs each argument of a call with its parameter name, checking names,
/// duplicates and arity.
pub fn normalize_args<'e>(
    spec: &FunctionSpec,
    positional: &'e [ExprNode],
    named: &'e [(String, ExprNode)],
) -> Result<Vec<(String, &'e ExprNode)>, BuildError> {
    let got = positional.len() + named.len();
    let names = spec.positional_names(positional.len()).map_err(|max| BuildError::ArityMismatch {
        name: spec.name.clone(),
        got,
        expected: arity_text(spec, max),
    })?;
    let mut out: Vec<(String, &ExprNode)> = names.into_iter().zip(positional).collect();
    for (k, v) in named {
        if spec.param_type(k).is_none() {
            return Err(BuildError::UnknownParameter { func: spec.name.clone(), name: k.clone() });
        }
        if out.iter().any(|(n, _)| n == k) {
            return Err(BuildError::DuplicateNamedArg { func: spec.name.clone(), name: k.clone() });
        }
        out.push((k.clone(), v));
    }
    if spec.params.iter().any(|p| !p.optional && !out.iter().any(|(n, _)| *n == p.name)) {
        return Err(BuildError::ArityMismatch {
            name: spec.name.clone(),
            got,
            expected: arity_text(spec, spec.params.len()),
        });
    }
    Ok(out)
}

fn arity_text(spec: &FunctionSpec, max: usize) -> String {
    let min = spec.required_count();
    match (spec.variadic.is_some(), min == max) {
        (true, _) => format!("at least {min}"),
        (false, true) => min.to_string(),
        (false, false) => format!("{min} to {max}"),
    }
}

/// Checks argument tags against the signature and computes the result tag.
pub fn check_call(spec: &FunctionSpec, args: &[(String, TypeTag, Option<Value>)]) -> Result<TypeTag, BuildError> {
    for (name, tag, _) in args {
        let ty = spec.param_type(name).expect("normalized argument names are declared");
        if !ty.accepts(tag) {
            return Err(BuildError::TypeMismatch {
                func: spec.name.clone(),
                param: name.clone(),
                expected: ty.to_string(),
                found: tag.clone(),
            });
        }
    }
    spec.result_type(&TypeCtx { func: &spec.name, args })
        .map_err(|message| BuildError::ResultType { func: spec.name.clone(), message })
}

/// Builds `e` as the graph of a new turn and appends its root to the turns.
pub fn build_graph(e: &ExprNode, ctx: &mut DialogueContext) -> Result<NodeId, BuildError> {
    let turn = ctx.pending_turn();
    let root = build_expr(e, ctx, turn)?;
    ctx.turns.push(root);
    Ok(root)
}

/// Builds `e` into the context without appending a turn. On error no nodes
/// are left behind, though their ids stay consumed.
pub fn build_expr(e: &ExprNode, ctx: &mut DialogueContext, turn_index: usize) -> Result<NodeId, BuildError> {
    let first = ctx.next_id();
    let registry = ctx.registry.clone();
    let mut builder = Builder { ctx, registry: &registry, turn_index, env: Vec::new() };
    let result = builder.build(e).and_then(|root| {
        builder.ctx.post_order(root)?;
        Ok(root)
    });
    if result.is_err() {
        ctx.nodes.retain(|id, _| *id < first);
    }
    result
}

struct Builder<'a> {
    ctx: &'a mut DialogueContext,
    registry: &'a FunctionRegistry,
    turn_index: usize,
    env: Vec<(String, NodeId)>,
}

impl Builder<'_> {
    fn build(&mut self, e: &ExprNode) -> Result<NodeId, BuildError> {
        let origin = if e.span.is_some() { Origin::Annotated } else { Origin::Expansion };
        match &e.kind {
            ExprKind::Call { head, positional, named } => {
                let spec = self.registry.get(head).ok_or_else(|| BuildError::UnknownFunction(head.clone()))?;
                let args = normalize_args(spec, positional, named)?;
                let mut inputs = Vec::with_capacity(args.len());
                let mut typed = Vec::with_capacity(args.len());
                for (name, arg) in args {
                    let id = self.build(arg)?;
                    let node = &self.ctx.nodes[&id];
                    typed.push((name.clone(), node.type_tag.clone(), node.literal.clone().filter(|_| node.is_literal())));
                    inputs.push((name, id));
                }
                let tag = check_call(spec, &typed)?;
                Ok(self.push(head.clone(), inputs, None, tag, origin))
            }
            ExprKind::Let { bindings, body } => {
                let depth = self.env.len();
                for (name, value) in bindings {
                    let id = self.build(value)?;
                    self.env.push((name.clone(), id));
                }
                let root = self.build(body);
                self.env.truncate(depth);
                root
            }
            ExprKind::VarRef(name) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, id)| *id)
                .ok_or_else(|| BuildError::UnboundVariable(name.clone())),
            _ => {
                let value = literal_value(e).expect("non-call, non-let nodes are literals");
                let tag = value.type_tag();
                Ok(self.push(LITERAL_FUNC.into(), Vec::new(), Some(value), tag, origin))
            }
        }
    }

    fn push(
        &mut self,
        func: String,
        inputs: Vec<(String, NodeId)>,
        literal: Option<Value>,
        type_tag: TypeTag,
        origin: Origin,
    ) -> NodeId {
        let id = self.ctx.alloc();
        self.ctx.nodes.insert(
            id,
            GraphNode {
                id,
                func,
                inputs,
                literal,
                result: None,
                type_tag,
                origin,
                turn_index: self.turn_index,
                result_node: None,
            },
        );
        id
    }
}
