//! Type-directed coercion: wraps arguments whose type does not fit the
//! parameter in the chain the function declares for that type.

use crate::exec::FunctionRegistry;
use crate::graph::{check_call, literal_value, normalize_args, BuildError};
use crate::syntax::{ExprKind, ExprNode};
use crate::value::{TypeTag, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoerceError {
    #[error("{func}: parameter '{param}' expects {expected} and nothing converts {found} to it")]
    TypeMismatch { func: String, param: String, expected: String, found: TypeTag },
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// Inserts declared coercion chains wherever an argument's type does not
/// fit. Inserted calls carry no span, so graph building tags them as
/// expansion nodes. Returns the rewritten expression and its type.
pub fn coerce(e: &ExprNode, registry: &FunctionRegistry) -> Result<(ExprNode, TypeTag), CoerceError> {
    let mut env = Vec::new();
    let (out, tag, _) = infer(e, registry, &mut env)?;
    Ok((out, tag))
}

type Typed = (ExprNode, TypeTag, Option<Value>);

fn infer(e: &ExprNode, registry: &FunctionRegistry, env: &mut Vec<(String, TypeTag)>) -> Result<Typed, CoerceError> {
    match &e.kind {
        ExprKind::Call { head, positional, named } => {
            let spec = registry.get(head).ok_or_else(|| BuildError::UnknownFunction(head.clone()))?;
            let args = normalize_args(spec, positional, named)?;
            let mut rebuilt = Vec::with_capacity(args.len());
            let mut typed = Vec::with_capacity(args.len());
            for (name, arg) in args {
                let (mut arg, mut tag, mut lit) = infer(arg, registry, env)?;
                let ty = spec.param_type(&name).expect("normalized names are declared");
                if !ty.accepts(&tag) {
                    let chain = spec.coercion(&name, &tag).ok_or_else(|| CoerceError::TypeMismatch {
                        func: head.clone(),
                        param: name.clone(),
                        expected: ty.to_string(),
                        found: tag.clone(),
                    })?;
                    for f in &chain.chain {
                        let inner = registry.get(f).ok_or_else(|| BuildError::UnknownFunction(f.clone()))?;
                        let param = inner.positional_names(1).map_err(|_| BuildError::ArityMismatch {
                            name: f.clone(),
                            got: 1,
                            expected: "0".into(),
                        })?;
                        tag = check_call(inner, &[(param[0].clone(), tag, lit)])?;
                        lit = None;
                        arg = ExprNode::call(f.clone(), vec![arg]);
                    }
                }
                typed.push((name.clone(), tag, lit));
                rebuilt.push((name, arg));
            }
            let tag = check_call(spec, &typed)?;
            let named_out = rebuilt.split_off(positional.len());
            let kind = ExprKind::Call {
                head: head.clone(),
                positional: rebuilt.into_iter().map(|(_, a)| a).collect(),
                named: named_out,
            };
            Ok((ExprNode { kind, span: e.span }, tag, None))
        }
        ExprKind::Let { bindings, body } => {
            let depth = env.len();
            let mut out = Vec::with_capacity(bindings.len());
            for (name, value) in bindings {
                let (v, tag, _) = infer(value, registry, env)?;
                env.push((name.clone(), tag));
                out.push((name.clone(), v));
            }
            let (body, tag, _) = infer(body, registry, env)?;
            env.truncate(depth);
            let kind = ExprKind::Let { bindings: out, body: Box::new(body) };
            Ok((ExprNode { kind, span: e.span }, tag, None))
        }
        ExprKind::VarRef(name) => {
            let tag = env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| BuildError::UnboundVariable(name.clone()))?;
            Ok((e.clone(), tag, None))
        }
        _ => {
            let value = literal_value(e).expect("non-call, non-let nodes are literals");
            Ok((e.clone(), value.type_tag(), Some(value)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_pexp, print_pexp};

    fn run(s: &str) -> Result<String, CoerceError> {
        coerce(&parse_pexp(s).unwrap(), &FunctionRegistry::standard()).map(|(e, _)| print_pexp(&e))
    }

    #[test]
    fn delete_event_coercions() {
        assert_eq!(run("DeleteEvent(3)").unwrap(), "DeleteEvent(3)");
        assert_eq!(
            run("DeleteEvent(FindEvents(with_subject(Lunch)))").unwrap(),
            "DeleteEvent(Event.id(singleton(FindEvents(with_subject(Lunch)))))"
        );
        assert_eq!(
            run("DeleteEvent(with_subject(Lunch))").unwrap(),
            "DeleteEvent(Event.id(singleton(FindEvents(with_subject(Lunch)))))"
        );
    }

    #[test]
    fn names_become_person_lookups() {
        assert_eq!(run("FindManager(John)").unwrap(), "FindManager(FindPerson(John))");
        assert_eq!(
            run("let(x=John, AND(with_attendee($x), with_attendee(FindManager($x))))").unwrap(),
            "let(x=John, AND(with_attendee(FindPerson($x)), with_attendee(FindManager(FindPerson($x)))))"
        );
    }

    #[test]
    fn inserted_nodes_have_no_span() {
        let (e, tag) = coerce(&parse_pexp("FindManager(John)").unwrap(), &FunctionRegistry::standard()).unwrap();
        assert_eq!(tag, TypeTag::Recipient);
        let ExprKind::Call { positional, .. } = &e.kind else { panic!() };
        assert!(e.span.is_some());
        assert!(positional[0].span.is_none());
    }

    #[test]
    fn missing_coercion_is_a_type_mismatch() {
        assert!(matches!(run("DeleteEvent(\"lunch\")"), Err(CoerceError::TypeMismatch { .. })));
        assert!(matches!(run("Frobnicate()"), Err(CoerceError::Build(BuildError::UnknownFunction(_)))));
    }
}
