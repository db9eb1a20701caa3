//! Dataflow dialogue annotations: simplification by tree rewriting,
//! expansion into executable graphs, and multi-turn execution with
//! refer/revise/exception semantics over a stub calendar database.

pub mod calendar;
pub mod dataset;
pub mod engine;
pub mod exec;
pub mod expand;
pub mod graph;
pub mod repl;
pub mod rewrite;
pub mod syntax;
pub mod value;
