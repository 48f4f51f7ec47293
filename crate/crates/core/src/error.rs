use thiserror::Error;

use crate::model::{CycleWitness, GraphIdx, ObjectId};
use crate::rules::Diagnostic;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("graph {graph}: duplicate {kind} id {id}")]
    DuplicateId { graph: u64, kind: &'static str, id: u64 },
    #[error("graph {graph}: edge {edge} refers to missing node {node}")]
    DanglingEndpoint { graph: GraphIdx, edge: u32, node: u32 },
    #[error("graph {graph}: root {root} is not a node")]
    UnknownRoot { graph: GraphIdx, root: u32 },
    #[error("graph {graph}: cycle detected: {witness}")]
    Cycle { graph: GraphIdx, witness: CycleWitness },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("graph at position {position} has id {id}; collection ids must be dense")]
    NonDenseGraphId { position: usize, id: GraphIdx },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid rules:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn format_diagnostics(ds: &[Diagnostic]) -> String {
    ds.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("rule `{rule}` at {entry}: variable `{var}` is bound to a deleted object")]
    DeletedBinding { rule: String, entry: ObjectId, var: String },
    #[error("rule `{rule}` at {entry}: variable `{var}` is not bound")]
    UnboundVariable { rule: String, entry: ObjectId, var: String },
    #[error("rule `{rule}` at {entry}: replacing {old} with {new} would make replacements cyclic")]
    ReplacementCycle { rule: String, entry: ObjectId, old: ObjectId, new: ObjectId },
    #[error("no morphism table for rule `{0}`")]
    MissingTable(String),
}

#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("graph {graph}: productions introduced a cycle: {witness}")]
    Cycle { graph: GraphIdx, witness: CycleWitness },
    #[error("graph {graph}: new edge {edge} refers to unknown node {node}")]
    DanglingEdge { graph: GraphIdx, edge: ObjectId, node: ObjectId },
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: invalid {field} `{value}`")]
    Field { line: usize, field: &'static str, value: String },
    #[error("line {line}: head {head} is out of range for a sentence of {len} tokens")]
    HeadOutOfRange { line: usize, head: usize, len: usize },
    #[error("sentence {sentence}: cyclic heads: {witness}")]
    Cycle { sentence: usize, witness: CycleWitness },
}

/// Any failure of the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Materialize(#[from] MaterializeError),
    #[error(transparent)]
    Conllu(#[from] ConlluError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
