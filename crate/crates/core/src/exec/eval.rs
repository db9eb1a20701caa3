use crate::graph::{DialogueContext, NodeId, Origin, DB_FUNC};
use crate::value::Value;

use super::registry::{Args, CallEnv, Effect, Raise};
use super::{is_entity, EngineException};

/// Evaluates the graph under `root`, inputs before consumers, skipping
/// nodes that already hold a result.
///
/// On an exception the database, messages and every result set by this
/// call are restored, the exception is pushed and its prompt appended to
/// the messages.
///
/// # Panics
///
/// If `root` is not in the context or a node names an unregistered
/// function; graphs built through [`crate::graph::build_graph`] satisfy both.
pub fn evaluate(root: NodeId, ctx: &mut DialogueContext) -> Result<Value, EngineException> {
    let order = ctx.post_order(root).expect("evaluate needs a built root");
    let registry = ctx.registry.clone();
    let db_before = ctx.db.clone();
    let messages_before = ctx.messages.len();
    let first_new = ctx.next_id();
    let mut filled = Vec::new();

    for id in order {
        let node = &ctx.nodes[&id];
        if node.result.is_some() {
            continue;
        }
        let outcome = if node.is_literal() || node.func == DB_FUNC {
            Ok((node.literal.clone().expect("literal nodes hold a value"), None))
        } else {
            let spec = registry
                .get(&node.func)
                .unwrap_or_else(|| panic!("node {id} calls unregistered '{}'", node.func));
            let args = Args {
                values: node
                    .inputs
                    .iter()
                    .map(|(p, i)| (p.clone(), ctx.nodes[i].result.clone().expect("inputs evaluate first")))
                    .collect(),
            };
            let turn = node.turn_index;
            let mut env = CallEnv { ctx, node: id, result_node: None };
            (spec.imp)(&mut env, &args).map(|v| {
                let mut result_node = env.result_node;
                if result_node.is_none() && spec.effect == Effect::Lookup && is_entity(&v) {
                    result_node = Some(ctx.add_db_node(v.clone(), turn));
                }
                (v, result_node)
            })
        };

        let outcome = outcome.and_then(|(v, rn)| {
            let want = &ctx.nodes[&id].type_tag;
            if &v.type_tag() == want {
                Ok((v, rn))
            } else {
                Err(Raise::type_mismatch(format!("{} produced {} where {want} was expected", ctx.nodes[&id].func, v.type_tag())))
            }
        });

        match outcome {
            Ok((v, rn)) => {
                let node = ctx.nodes.get_mut(&id).expect("node exists");
                node.result = Some(v);
                node.result_node = rn;
                filled.push(id);
            }
            Err(raise) => {
                ctx.db = db_before;
                ctx.messages.truncate(messages_before);
                for f in filled {
                    let node = ctx.nodes.get_mut(&f).expect("node exists");
                    node.result = None;
                    node.result_node = None;
                }
                ctx.nodes.retain(|nid, n| *nid < first_new || n.origin != Origin::Db);
                let exc = EngineException {
                    kind: raise.kind,
                    node: id,
                    slot: raise.slot,
                    prompt: raise.prompt,
                    expected: raise.expected,
                };
                ctx.messages.push(exc.prompt.clone());
                ctx.exceptions.push(exc.clone());
                return Err(exc);
            }
        }
    }
    Ok(ctx.nodes[&root].result.clone().expect("root evaluated"))
}
