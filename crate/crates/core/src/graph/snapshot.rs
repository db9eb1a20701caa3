use std::sync::Arc;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::calendar::StubDb;
use crate::exec::{EngineException, FunctionRegistry};

use super::{DialogueContext, GraphNode, NodeId, ReferOptions};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("malformed context snapshot: {0}")]
    Parse(String),
    #[error("inconsistent context snapshot: {0}")]
    Inconsistent(String),
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    clock: NaiveDateTime,
    next_id: u64,
    turns: Vec<NodeId>,
    nodes: Vec<GraphNode>,
    exceptions: Vec<EngineException>,
    messages: Vec<String>,
    refer: ReferOptions,
    db: serde_json::Value,
}

impl DialogueContext {
    /// JSON document with the node table, turn roots, pending exceptions,
    /// messages and database state.
    pub fn to_snapshot(&self) -> serde_json::Value {
        let snap = Snapshot {
            clock: self.clock,
            next_id: self.next_id,
            turns: self.turns.clone(),
            nodes: self.nodes.values().cloned().collect(),
            exceptions: self.exceptions.clone(),
            messages: self.messages.clone(),
            refer: self.refer,
            db: self.db.to_json(),
        };
        serde_json::to_value(snap).expect("context serializes")
    }

    pub fn from_snapshot(doc: &str, registry: Arc<FunctionRegistry>) -> Result<DialogueContext, SnapshotError> {
        let snap: Snapshot = serde_json::from_str(doc).map_err(|e| SnapshotError::Parse(e.to_string()))?;
        let db = StubDb::from_json(&snap.db.to_string()).map_err(|e| SnapshotError::Parse(e.to_string()))?;
        let mut ctx = DialogueContext::with_clock(registry, db, snap.clock);
        ctx.refer = snap.refer;
        ctx.messages = snap.messages;
        ctx.exceptions = snap.exceptions;
        for n in snap.nodes {
            if n.id.0 >= snap.next_id {
                return Err(SnapshotError::Inconsistent(format!("node {} is not below next_id", n.id)));
            }
            ctx.nodes.insert(n.id, n);
        }
        ctx.next_id = snap.next_id;
        let bad_ref = ctx.nodes.values().flat_map(|n| n.inputs.iter().map(|(_, i)| *i).chain(n.result_node)).find(|i| !ctx.nodes.contains_key(i));
        if let Some(id) = bad_ref {
            return Err(SnapshotError::Inconsistent(format!("edge to missing node {id}")));
        }
        for root in &snap.turns {
            ctx.post_order(*root).map_err(|e| SnapshotError::Inconsistent(e.to_string()))?;
        }
        if let Some(e) = ctx.exceptions.iter().find(|e| !ctx.nodes.contains_key(&e.node)) {
            return Err(SnapshotError::Inconsistent(format!("exception at missing node {}", e.node)));
        }
        ctx.turns = snap.turns;
        Ok(ctx)
    }
}
