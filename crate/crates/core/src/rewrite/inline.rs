//! Single-use `let` inlining.
//!
//! Bindings are sequential: a binding is visible in later bindings of the
//! same `let` and in its body, and an inner `let` rebinding the same name
//! shadows it from that point on.

use std::collections::BTreeSet;

use crate::syntax::{ExprKind, ExprNode};

use super::pattern::{expr_is_pure, Purity};

/// Inlines every pure binding used at most once. Returns `None` when the
/// node is not a `let` or nothing changed.
pub fn inline_single_use_lets(node: &ExprNode, purity: &dyn Purity) -> Option<ExprNode> {
    let ExprKind::Let { bindings, body } = &node.kind else {
        return None;
    };
    let mut bindings = bindings.clone();
    let mut body = (**body).clone();
    let mut changed = false;

    let mut i = 0;
    while i < bindings.len() {
        let (name, value) = bindings[i].clone();
        let uses: usize = bindings[i + 1..]
            .iter()
            .map(|(_, v)| count_uses(v, &name))
            .sum::<usize>()
            + count_uses(&body, &name);
        if uses <= 1 && expr_is_pure(&value, purity) {
            if let Some((rest, new_body)) = substitute_scope(&bindings[i + 1..], &body, &name, &value) {
                bindings.splice(i + 1.., rest);
                bindings.remove(i);
                body = new_body;
                changed = true;
                continue;
            }
        }
        i += 1;
    }

    if !changed {
        return None;
    }
    if bindings.is_empty() {
        return Some(body);
    }
    Some(ExprNode { kind: ExprKind::Let { bindings, body: Box::new(body) }, span: node.span })
}

/// Free occurrences of `$name` in `e`.
pub(crate) fn count_uses(e: &ExprNode, name: &str) -> usize {
    match &e.kind {
        ExprKind::VarRef(v) => usize::from(v == name),
        ExprKind::Call { positional, named, .. } => {
            positional.iter().map(|c| count_uses(c, name)).sum::<usize>()
                + named.iter().map(|(_, c)| count_uses(c, name)).sum::<usize>()
        }
        ExprKind::Let { bindings, body } => {
            let mut n = 0;
            for (k, v) in bindings {
                n += count_uses(v, name);
                if k == name {
                    return n;
                }
            }
            n + count_uses(body, name)
        }
        _ => 0,
    }
}

fn free_vars(e: &ExprNode, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::VarRef(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        ExprKind::Call { positional, named, .. } => {
            positional.iter().for_each(|c| free_vars(c, bound, out));
            named.iter().for_each(|(_, c)| free_vars(c, bound, out));
        }
        ExprKind::Let { bindings, body } => {
            let depth = bound.len();
            for (k, v) in bindings {
                free_vars(v, bound, out);
                bound.push(k.clone());
            }
            free_vars(body, bound, out);
            bound.truncate(depth);
        }
        _ => {}
    }
}

/// Substitutes within the scope following a binding: later bindings, then
/// the body. `None` if a substitution would be captured.
fn substitute_scope(
    rest: &[(String, ExprNode)],
    body: &ExprNode,
    name: &str,
    value: &ExprNode,
) -> Option<(Vec<(String, ExprNode)>, ExprNode)> {
    let mut fv = BTreeSet::new();
    free_vars(value, &mut Vec::new(), &mut fv);
    substitute_scope_inner(rest, body, name, value, &fv)
}

fn subst(e: &ExprNode, name: &str, value: &ExprNode, fv: &BTreeSet<String>) -> Option<ExprNode> {
    let kind = match &e.kind {
        ExprKind::VarRef(v) if v == name => return Some(value.clone()),
        ExprKind::Call { head, positional, named } => ExprKind::Call {
            head: head.clone(),
            positional: positional.iter().map(|c| subst(c, name, value, fv)).collect::<Option<_>>()?,
            named: named
                .iter()
                .map(|(k, c)| Some((k.clone(), subst(c, name, value, fv)?)))
                .collect::<Option<_>>()?,
        },
        ExprKind::Let { bindings, body } => {
            let (bindings, body) = substitute_scope_inner(bindings, body, name, value, fv)?;
            ExprKind::Let { bindings, body: Box::new(body) }
        }
        other => other.clone(),
    };
    Some(ExprNode { kind, span: e.span })
}

fn substitute_scope_inner(
    bindings: &[(String, ExprNode)],
    body: &ExprNode,
    name: &str,
    value: &ExprNode,
    fv: &BTreeSet<String>,
) -> Option<(Vec<(String, ExprNode)>, ExprNode)> {
    let mut out = Vec::with_capacity(bindings.len());
    for (idx, (k, v)) in bindings.iter().enumerate() {
        out.push((k.clone(), subst(v, name, value, fv)?));
        let rest = &bindings[idx + 1..];
        if k == name {
            out.extend(rest.iter().cloned());
            return Some((out, (*body).clone()));
        }
        if fv.contains(k) && (rest.iter().any(|(_, v)| count_uses(v, name) > 0) || count_uses(body, name) > 0) {
            return None;
        }
    }
    Some((out, subst(body, name, value, fv)?))
}
