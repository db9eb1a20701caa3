use std::collections::{BTreeMap, BTreeSet};

use crate::value::Value;

use super::{DialogueContext, GraphError, GraphNode, NodeId, Origin};

/// Deep-copies the subgraph under `root` with fresh ids and no results.
/// Shared inputs stay shared in the copy.
pub fn duplicate_subgraph(root: NodeId, ctx: &mut DialogueContext) -> Result<NodeId, GraphError> {
    duplicate_subgraph_mapped(root, ctx).map(|m| m[&root])
}

/// As [`duplicate_subgraph`], returning the old-to-new id mapping.
pub fn duplicate_subgraph_mapped(
    root: NodeId,
    ctx: &mut DialogueContext,
) -> Result<BTreeMap<NodeId, NodeId>, GraphError> {
    let order = ctx.post_order(root)?;
    let turn_index = ctx.pending_turn();
    let mut mapping = BTreeMap::new();
    for old in order {
        let src = &ctx.nodes[&old];
        let inputs = src.inputs.iter().map(|(p, i)| (p.clone(), mapping[i])).collect();
        let copy = GraphNode {
            id: NodeId(0),
            func: src.func.clone(),
            inputs,
            literal: src.literal.clone(),
            result: None,
            type_tag: src.type_tag.clone(),
            origin: Origin::Revision,
            turn_index,
            result_node: None,
        };
        let id = ctx.alloc();
        ctx.nodes.insert(id, GraphNode { id, ..copy });
        mapping.insert(old, id);
    }
    Ok(mapping)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Difference {
    Func { a: String, b: String },
    Literal { a: Option<Value>, b: Option<Value> },
    Inputs { a: Vec<String>, b: Vec<String> },
}

/// Structural differences between two graphs by function name, literal and
/// input names, ignoring ids and results. Paths name the input edges from
/// the root, e.g. `root/spec/c0`.
pub fn graph_diff(a: NodeId, b: NodeId, ctx: &DialogueContext) -> Result<Vec<(String, Difference)>, GraphError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    diff_at(a, b, "root".into(), ctx, &mut seen, &mut out)?;
    Ok(out)
}

fn diff_at(
    a: NodeId,
    b: NodeId,
    path: String,
    ctx: &DialogueContext,
    seen: &mut BTreeSet<(NodeId, NodeId)>,
    out: &mut Vec<(String, Difference)>,
) -> Result<(), GraphError> {
    if !seen.insert((a, b)) {
        return Ok(());
    }
    let (na, nb) = (ctx.node(a)?, ctx.node(b)?);
    if na.func != nb.func {
        out.push((path, Difference::Func { a: na.func.clone(), b: nb.func.clone() }));
        return Ok(());
    }
    if na.literal != nb.literal {
        out.push((path, Difference::Literal { a: na.literal.clone(), b: nb.literal.clone() }));
        return Ok(());
    }
    let names = |n: &GraphNode| {
        let mut v: Vec<String> = n.inputs.iter().map(|(p, _)| p.clone()).collect();
        v.sort();
        v
    };
    let (ia, ib) = (names(na), names(nb));
    if ia != ib {
        out.push((path, Difference::Inputs { a: ia, b: ib }));
        return Ok(());
    }
    for (param, child_a) in &na.inputs {
        let child_b = nb.input(param).expect("same input names");
        diff_at(*child_a, child_b, format!("{path}/{param}"), ctx, seen, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::syntax::parse_pexp;

    fn ctx_with(exprs: &[&str]) -> (DialogueContext, Vec<NodeId>) {
        let mut ctx = DialogueContext::fixture();
        let roots = exprs.iter().map(|s| build_graph(&parse_pexp(s).unwrap(), &mut ctx).unwrap()).collect();
        (ctx, roots)
    }

    #[test]
    fn duplicate_is_isomorphic() {
        let (mut ctx, roots) = ctx_with(&["FindEvents(AND(starts_at(Tomorrow()), with_attendee(FindPerson(Dana))))"]);
        let before = ctx.nodes.len();
        let copy = duplicate_subgraph(roots[0], &mut ctx).unwrap();
        assert_eq!(ctx.nodes.len(), 2 * before);
        assert!(graph_diff(roots[0], copy, &ctx).unwrap().is_empty());
        assert!(ctx.post_order(copy).unwrap().iter().all(|id| ctx.nodes[id].origin == Origin::Revision));
    }

    #[test]
    fn duplicate_keeps_diamonds() {
        let (mut ctx, roots) =
            ctx_with(&["let(p=FindPerson(John), AND(with_attendee($p), with_attendee(FindManager($p))))"]);
        let n = ctx.post_order(roots[0]).unwrap().len();
        let copy = duplicate_subgraph(roots[0], &mut ctx).unwrap();
        assert_eq!(ctx.post_order(copy).unwrap().len(), n);
        assert_eq!(ctx.nodes.len(), 2 * n);
    }

    #[test]
    fn one_leaf_differs() {
        let (ctx, roots) = ctx_with(&["FindManager(FindPerson(John))", "FindManager(FindPerson(Emily))"]);
        let diff = graph_diff(roots[0], roots[1], &ctx).unwrap();
        assert_eq!(diff.len(), 1);
        assert_eq!(diff[0].0, "root/person/name");
        assert!(matches!(diff[0].1, Difference::Literal { .. }));
    }

    #[test]
    fn unknown_nodes_are_errors() {
        let (mut ctx, _) = ctx_with(&[]);
        assert_eq!(duplicate_subgraph(NodeId(42), &mut ctx), Err(GraphError::UnknownNode(NodeId(42))));
        assert_eq!(graph_diff(NodeId(1), NodeId(2), &ctx), Err(GraphError::UnknownNode(NodeId(1))));
    }
}
