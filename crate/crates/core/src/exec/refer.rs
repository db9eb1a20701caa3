use crate::graph::{DialogueContext, NodeId, ReferOptions};
use crate::value::ConstraintValue;

use super::registry::Raise;

/// Newest evaluated node whose tag is the constraint's target and whose
/// result satisfies it. Turns are scanned newest first, and nodes within a
/// turn in reverse creation order.
pub fn refer_in_graph(c: &ConstraintValue, ctx: &DialogueContext) -> Option<NodeId> {
    let mut nodes: Vec<_> = ctx.nodes.values().collect();
    nodes.sort_by_key(|n| std::cmp::Reverse((n.turn_index, n.id)));
    nodes
        .into_iter()
        .find(|n| n.type_tag == c.target && n.result.as_ref().is_some_and(|v| c.holds(v, &ctx.db)))
        .map(|n| n.id)
}

/// [`refer_in_graph`], falling back to a unique database match when
/// `opts.fallback_db` is set. A database hit is materialized as a db node
/// in turn `turn_index`.
pub fn refer(
    c: &ConstraintValue,
    ctx: &mut DialogueContext,
    opts: ReferOptions,
    turn_index: usize,
) -> Result<NodeId, Raise> {
    if let Some(hit) = refer_in_graph(c, ctx) {
        return Ok(hit);
    }
    let what = noun(&c.target);
    if !opts.fallback_db {
        return Err(Raise::no_match(format!("I don't know which {what} you mean.")));
    }
    let mut found = ctx.db.query(&c.target, &c.pred);
    match found.len() {
        0 => Err(Raise::no_match(format!("I couldn't find that {what}."))),
        1 => Ok(ctx.add_db_node(found.remove(0), turn_index)),
        n => Err(Raise::multiple(format!("I found {n} matching {what}s. Which one do you mean?"))),
    }
}

pub(crate) fn noun(tag: &crate::value::TypeTag) -> String {
    match tag {
        crate::value::TypeTag::Recipient => "person".into(),
        other => other.to_string().to_lowercase(),
    }
}
