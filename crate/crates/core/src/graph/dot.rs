use std::collections::BTreeSet;
use std::fmt::Write;

use super::{DialogueContext, GraphError, GraphNode, NodeId, Origin};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Omit result edges and the db nodes they point to.
    pub hide_results: bool,
}

fn fill(origin: Origin) -> &'static str {
    match origin {
        Origin::Annotated => "gray",
        Origin::Expansion => "yellow",
        Origin::Db => "green",
        Origin::Revision => "lightblue",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn label(node: &GraphNode, ctx: &DialogueContext, with_result: bool) -> String {
    let mut text = match &node.literal {
        Some(v) if node.is_literal() => v.render(&ctx.db),
        _ => node.func.clone(),
    };
    if with_result && !node.is_literal() {
        if let Some(v) = &node.result {
            text.push_str("\n= ");
            text.push_str(&v.render(&ctx.db));
        }
    }
    escape(&text)
}

/// Graphviz rendering of the graph under `root`. Inputs point at their
/// consumers; execution results are blue dashed edges.
pub fn emit_dot(root: NodeId, ctx: &DialogueContext, opts: DotOptions) -> Result<String, GraphError> {
    let order = ctx.post_order(root)?;
    let mut shown: Vec<NodeId> = order.clone();
    let mut result_edges = Vec::new();
    if !opts.hide_results {
        let members: BTreeSet<NodeId> = order.iter().copied().collect();
        for id in &order {
            if let Some(target) = ctx.nodes[id].result_node {
                if ctx.nodes.contains_key(&target) {
                    result_edges.push((*id, target));
                    if !members.contains(&target) && !shown.contains(&target) {
                        shown.push(target);
                    }
                }
            }
        }
    }

    let mut out = String::from("digraph G {\n  rankdir=BT;\n  node [shape=box, style=\"rounded,filled\"];\n");
    for id in &shown {
        let node = &ctx.nodes[id];
        if opts.hide_results && node.origin == Origin::Db {
            continue;
        }
        let _ = writeln!(
            out,
            "  {id} [label=\"{}\", fillcolor=\"{}\"];",
            label(node, ctx, !opts.hide_results),
            fill(node.origin)
        );
    }
    for id in &order {
        for (param, input) in &ctx.nodes[id].inputs {
            let _ = writeln!(out, "  {input} -> {id} [label=\"{}\"];", escape(param));
        }
    }
    for (from, to) in result_edges {
        let _ = writeln!(out, "  {from} -> {to} [color=blue, style=dashed];");
    }
    out.push_str("}\n");
    Ok(out)
}
