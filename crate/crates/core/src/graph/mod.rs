//! Executable graphs and the dialogue context that holds one graph per turn.

mod build;
mod dot;
mod ops;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::calendar::StubDb;
use crate::exec::{EngineException, FunctionRegistry};
use crate::value::{TypeTag, Value};

pub use build::{build_expr, build_graph, check_call, literal_value, normalize_args, BuildError, LITERAL_FUNC};
pub use dot::{emit_dot, DotOptions};
pub use ops::{duplicate_subgraph, duplicate_subgraph_mapped, graph_diff, Difference};
pub use snapshot::SnapshotError;

/// Function name of nodes materialized from the database.
pub const DB_FUNC: &str = "#db";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Annotated,
    Expansion,
    Db,
    Revision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub func: String,
    /// Parameter name to input node.
    pub inputs: Vec<(String, NodeId)>,
    /// Set on literal and db nodes.
    pub literal: Option<Value>,
    pub result: Option<Value>,
    pub type_tag: TypeTag,
    pub origin: Origin,
    pub turn_index: usize,
    /// Node the execution result was found in or materialized as.
    pub result_node: Option<NodeId>,
}

impl GraphNode {
    pub fn input(&self, param: &str) -> Option<NodeId> {
        self.inputs.iter().find(|(p, _)| p == param).map(|(_, id)| *id)
    }

    pub fn is_literal(&self) -> bool {
        self.func == LITERAL_FUNC
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("cycle through node {0}")]
    Cycle(NodeId),
}

/// Fallback behaviour of `refer` when no graph node matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferOptions {
    pub fallback_db: bool,
}

impl Default for ReferOptions {
    fn default() -> Self {
        ReferOptions { fallback_db: true }
    }
}

#[derive(Debug, Clone)]
pub struct DialogueContext {
    /// Root node of each turn, oldest first.
    pub turns: Vec<NodeId>,
    pub nodes: BTreeMap<NodeId, GraphNode>,
    pub exceptions: Vec<EngineException>,
    pub messages: Vec<String>,
    pub clock: NaiveDateTime,
    pub db: StubDb,
    pub refer: ReferOptions,
    pub registry: Arc<FunctionRegistry>,
    next_id: u64,
}

impl DialogueContext {
    pub fn new(registry: Arc<FunctionRegistry>, db: StubDb) -> Self {
        DialogueContext::with_clock(registry, db, default_clock())
    }

    pub fn with_clock(registry: Arc<FunctionRegistry>, db: StubDb, clock: NaiveDateTime) -> Self {
        DialogueContext {
            turns: Vec::new(),
            nodes: BTreeMap::new(),
            exceptions: Vec::new(),
            messages: Vec::new(),
            clock,
            db,
            refer: ReferOptions::default(),
            registry,
            next_id: 1,
        }
    }

    /// Standard registry, bundled fixture, default clock.
    pub fn fixture() -> Self {
        DialogueContext::new(Arc::new(FunctionRegistry::standard()), StubDb::fixture())
    }

    pub fn node(&self, id: NodeId) -> Result<&GraphNode, GraphError> {
        self.nodes.get(&id).ok_or(GraphError::UnknownNode(id))
    }

    pub fn next_id(&self) -> NodeId {
        NodeId(self.next_id)
    }

    /// Index the next appended turn will have.
    pub fn pending_turn(&self) -> usize {
        self.turns.len()
    }

    pub(crate) fn alloc(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn add_db_node(&mut self, value: Value, turn_index: usize) -> NodeId {
        let id = self.alloc();
        self.nodes.insert(
            id,
            GraphNode {
                id,
                func: DB_FUNC.into(),
                inputs: Vec::new(),
                literal: Some(value.clone()),
                type_tag: value.type_tag(),
                result: Some(value),
                origin: Origin::Db,
                turn_index,
                result_node: None,
            },
        );
        id
    }

    /// Nodes reachable from `root` along input edges, each once, inputs
    /// before consumers.
    pub fn post_order(&self, root: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let mut order = Vec::new();
        let mut done = BTreeSet::new();
        let mut on_path = BTreeSet::new();
        self.visit(root, &mut done, &mut on_path, &mut order)?;
        Ok(order)
    }

    fn visit(
        &self,
        id: NodeId,
        done: &mut BTreeSet<NodeId>,
        on_path: &mut BTreeSet<NodeId>,
        order: &mut Vec<NodeId>,
    ) -> Result<(), GraphError> {
        if done.contains(&id) {
            return Ok(());
        }
        if !on_path.insert(id) {
            return Err(GraphError::Cycle(id));
        }
        for (_, input) in &self.node(id)?.inputs {
            self.visit(*input, done, on_path, order)?;
        }
        on_path.remove(&id);
        done.insert(id);
        order.push(id);
        Ok(())
    }

    /// Turn whose root reaches `id` along input edges, newest turn first.
    pub fn turn_of(&self, id: NodeId) -> Option<usize> {
        (0..self.turns.len())
            .rev()
            .find(|&t| self.post_order(self.turns[t]).is_ok_and(|o| o.contains(&id)))
    }

    /// Nodes whose inputs include `id`, with the parameter name.
    pub fn consumers(&self, id: NodeId) -> Vec<(NodeId, String)> {
        self.nodes
            .values()
            .flat_map(|n| n.inputs.iter().filter(|(_, i)| *i == id).map(move |(p, _)| (n.id, p.clone())))
            .collect()
    }

    /// Result of the most recent turn, if it evaluated.
    pub fn last_result(&self) -> Option<&Value> {
        self.turns.last().and_then(|r| self.nodes.get(r)).and_then(|n| n.result.as_ref())
    }
}

pub fn default_clock() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2022, 1, 1).unwrap().and_hms_opt(9, 0, 0).unwrap()
}
