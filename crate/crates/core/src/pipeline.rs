//! Phase-level driver: load and index, query (match and rewrite),
//! materialise.

use std::time::{Duration, Instant};

use crate::conllu::from_conllu;
use crate::error::Result;
use crate::matching::{match_graph, GraphMatches, MatchMode};
use crate::materialize::{materialise, Materialized};
use crate::model::{parse_graph_collection, GraphIdx, GsmGraph};
use crate::rewrite::{rewrite_graph, Delta, RewriteTrace};
use crate::rules::RuleSet;
use crate::store::{index_collection, ColumnarStore};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputFormat {
    #[default]
    Gsm,
    Conllu,
}

pub fn load_graphs(text: &str, format: InputFormat) -> Result<Vec<GsmGraph>> {
    Ok(match format {
        InputFormat::Gsm => parse_graph_collection(text)?,
        InputFormat::Conllu => from_conllu(text)?,
    })
}

/// Parses and indexes a collection, returning the elapsed time as well.
pub fn load_store(text: &str, format: InputFormat) -> Result<(ColumnarStore, Duration)> {
    let t = Instant::now();
    let store = index_collection(load_graphs(text, format)?)?;
    Ok((store, t.elapsed()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub query: Duration,
    pub materialise: Duration,
}

#[derive(Clone, Debug)]
pub struct GraphRun {
    pub matches: GraphMatches,
    pub delta: Delta,
    pub trace: RewriteTrace,
    pub output: Materialized,
    pub times: PhaseTimes,
}

/// Matches, rewrites and materialises one graph of the store.
pub fn run_graph(store: &ColumnarStore, graph: GraphIdx, rules: &RuleSet, mode: MatchMode) -> Result<GraphRun> {
    let t = Instant::now();
    let matches = match_graph(store, graph, rules, mode);
    let (delta, trace) = rewrite_graph(store, graph, rules, &matches)?;
    let query = t.elapsed();
    let t = Instant::now();
    let output = materialise(store.graph(graph), &delta)?;
    let materialise = t.elapsed();
    Ok(GraphRun { matches, delta, trace, output, times: PhaseTimes { query, materialise } })
}

/// Runs every graph in collection order.
pub fn run_all(store: &ColumnarStore, rules: &RuleSet, mode: MatchMode) -> Result<Vec<GraphRun>> {
    (0..store.graph_count() as GraphIdx).map(|g| run_graph(store, g, rules, mode)).collect()
}

/// Convenience: load, index and rewrite a whole document.
pub fn rewrite_text(text: &str, format: InputFormat, rules: &RuleSet, mode: MatchMode) -> Result<Vec<GsmGraph>> {
    let (store, _) = load_store(text, format)?;
    Ok(run_all(&store, rules, mode)?.into_iter().map(|r| r.output.graph).collect())
}
