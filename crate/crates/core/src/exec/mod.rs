//! Evaluation of turn graphs with `refer`, `revise` and exception/resume.

mod builtins;
mod eval;
mod refer;
mod registry;
mod revise;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{BuildError, GraphError, NodeId};
use crate::value::{TypeTag, Value};

pub use builtins::{and, get_attr, not, or, singleton};
pub use eval::evaluate;
pub use refer::{refer, refer_in_graph};
pub use registry::{
    Args, CallEnv, Coercion, Effect, FunctionRegistry, FunctionSpec, ImplFn, Param, ParamType, Raise, ResultRule,
    TypeCtx,
};
pub use revise::{resume_exception, revise, ReviseMode, TurnResult};

pub(crate) use registry::variadic_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExceptionKind {
    MissingValue,
    NoMatch,
    MultipleMatches,
    TypeMismatch,
    DomainError,
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A suspended evaluation, kept on the context until resumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineException {
    pub kind: ExceptionKind,
    pub node: NodeId,
    pub slot: Option<String>,
    pub prompt: String,
    pub expected: Option<TypeTag>,
}

impl fmt::Display for EngineException {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.node)?;
        if let Some(slot) = &self.slot {
            write!(f, " (slot '{slot}')")?;
        }
        write!(f, ": {}", self.prompt)
    }
}

impl std::error::Error for EngineException {}

/// Failures of dialogue operations themselves, as opposed to exceptions
/// raised while a graph evaluates.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("there is no pending exception to resume")]
    NoPendingException,
    #[error("the pending {0} exception cannot be resumed with a value")]
    NotResumable(ExceptionKind),
    #[error("nothing in the dialogue matches: {0}")]
    NoMatch(String),
    #[error("expected {expected}, got {found}")]
    TypeMismatch { expected: String, found: TypeTag },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Entity values (and sets of them) come from the database.
pub(crate) fn is_entity(v: &Value) -> bool {
    match v {
        Value::Event(_) | Value::Person(_) => true,
        Value::Set { elem, .. } => matches!(elem, TypeTag::Event | TypeTag::Recipient),
        _ => false,
    }
}
