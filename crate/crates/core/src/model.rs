//! Generalised Semistructured Model graphs and their file format.
//!
//! A graph is a DAG of semistructured objects. Every node carries a label
//! vector `ell`, a value vector `xi` and a property map `pi`; edges are
//! labelled containment relationships with their own identity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Index of a graph within a loaded collection.
pub type GraphIdx = u32;

/// Label used in the activity table for nodes without any label.
pub const EMPTY_LABEL: &str = "";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Node,
    Edge,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectKind::Node => f.write_str("node"),
            ObjectKind::Edge => f.write_str("edge"),
        }
    }
}

/// Identity of a node or an edge within a loaded collection.
///
/// Local indexes are dense per graph and kind after loading. Objects created
/// by rewriting live in a reserved range above [`ObjectId::FRESH_BASE`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId {
    pub graph: GraphIdx,
    pub local: u32,
    pub kind: ObjectKind,
}

impl ObjectId {
    pub const FRESH_BASE: u32 = 1 << 31;

    pub fn node(graph: GraphIdx, local: u32) -> Self {
        ObjectId { graph, local, kind: ObjectKind::Node }
    }

    pub fn edge(graph: GraphIdx, local: u32) -> Self {
        ObjectId { graph, local, kind: ObjectKind::Edge }
    }

    pub fn is_fresh(&self) -> bool {
        self.local >= Self::FRESH_BASE
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ObjectKind::Node => 'n',
            ObjectKind::Edge => 'e',
        };
        if self.is_fresh() {
            write!(f, "{}{}+{}", tag, self.graph, self.local - Self::FRESH_BASE)
        } else {
            write!(f, "{}{}:{}", tag, self.graph, self.local)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GsmNode {
    pub id: u32,
    pub ell: Vec<String>,
    pub xi: Vec<String>,
    pub pi: BTreeMap<String, String>,
}

impl GsmNode {
    pub fn new(id: u32) -> Self {
        GsmNode { id, ..Default::default() }
    }

    /// Label keying the node in the activity table.
    pub fn primary_label(&self) -> &str {
        self.ell.first().map(String::as_str).unwrap_or(EMPTY_LABEL)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsmEdge {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GsmGraph {
    pub id: GraphIdx,
    pub nodes: Vec<GsmNode>,
    pub edges: Vec<GsmEdge>,
    pub root: Option<u32>,
}

impl GsmGraph {
    pub fn new(id: GraphIdx) -> Self {
        GsmGraph { id, ..Default::default() }
    }

    pub fn add_node(&mut self, ell: &[&str], xi: &[&str]) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(GsmNode {
            id,
            ell: ell.iter().map(|s| s.to_string()).collect(),
            xi: xi.iter().map(|s| s.to_string()).collect(),
            pi: BTreeMap::new(),
        });
        id
    }

    pub fn add_edge(&mut self, src: u32, dst: u32, label: &str) -> u32 {
        let id = self.edges.len() as u32;
        self.edges.push(GsmEdge { id, src, dst, label: label.to_string() });
        id
    }

    pub fn node_oid(&self, local: u32) -> ObjectId {
        ObjectId::node(self.id, local)
    }

    pub fn edge_oid(&self, local: u32) -> ObjectId {
        ObjectId::edge(self.id, local)
    }

    /// Checks that every edge endpoint and the root refer to existing nodes.
    pub fn check_endpoints(&self) -> Result<(), ModelError> {
        let n = self.nodes.len() as u32;
        for e in &self.edges {
            for end in [e.src, e.dst] {
                if end >= n {
                    return Err(ModelError::DanglingEndpoint { graph: self.id, edge: e.id, node: end });
                }
            }
        }
        if let Some(root) = self.root {
            if root >= n {
                return Err(ModelError::UnknownRoot { graph: self.id, root });
            }
        }
        Ok(())
    }

    /// Number of weakly connected components.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.src as usize), find(&mut parent, e.dst as usize));
            if a != b {
                parent[a] = b;
            }
        }
        (0..self.nodes.len()).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// A directed cycle, as the sequence of node ids visited; first = last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleWitness(pub Vec<u32>);

impl fmt::Display for CycleWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(" -> "))
    }
}

/// Returns `Ok` iff the edge relation of `g` has no directed cycle.
///
/// Edges whose endpoints do not exist are ignored. The search is an
/// iterative DFS over nodes in ascending id order, so the witness is
/// deterministic.
pub fn validate_acyclic(g: &GsmGraph) -> Result<(), CycleWitness> {
    let n = g.nodes.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for e in &g.edges {
        if (e.src as usize) < n && (e.dst as usize) < n {
            adj[e.src as usize].push(e.dst);
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    // (node, next child position)
    let mut stack: Vec<(u32, usize)> = Vec::new();

    for start in 0..n as u32 {
        if mark[start as usize] != Mark::White {
            continue;
        }
        mark[start as usize] = Mark::Grey;
        stack.push((start, 0));
        while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
            if let Some(&v) = adj[u as usize].get(*pos) {
                *pos += 1;
                match mark[v as usize] {
                    Mark::White => {
                        mark[v as usize] = Mark::Grey;
                        stack.push((v, 0));
                    }
                    Mark::Grey => {
                        let from = stack.iter().position(|&(w, _)| w == v).unwrap_or(0);
                        let mut cycle: Vec<u32> = stack[from..].iter().map(|&(w, _)| w).collect();
                        cycle.push(v);
                        return Err(CycleWitness(cycle));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[u as usize] = Mark::Black;
                stack.pop();
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CollectionDoc {
    graphs: Vec<GraphDoc>,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<u64>,
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: u64,
    #[serde(default)]
    ell: Vec<String>,
    #[serde(default)]
    xi: Vec<String>,
    #[serde(default)]
    pi: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    id: u64,
    src: u64,
    dst: u64,
    label: String,
}

/// Parses a graph collection document.
///
/// Graph, node and edge ids in the document only need to be unique; they are
/// renumbered densely in ascending order. Every graph is checked for dangling
/// endpoints and cycles.
pub fn parse_graph_collection(text: &str) -> Result<Vec<GsmGraph>, ModelError> {
    let doc: CollectionDoc = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut docs = doc.graphs;
    docs.sort_by_key(|g| g.id);
    if let Some(w) = docs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(ModelError::DuplicateId { graph: w[0].id, kind: "graph", id: w[0].id });
    }

    let mut graphs = Vec::with_capacity(docs.len());
    for (gi, gd) in docs.into_iter().enumerate() {
        graphs.push(build_graph(gi as GraphIdx, gd)?);
    }
    Ok(graphs)
}

fn build_graph(gid: GraphIdx, gd: GraphDoc) -> Result<GsmGraph, ModelError> {
    let node_map = dense_map(gd.nodes.iter().map(|n| n.id), gd.id, "node")?;
    let edge_map = dense_map(gd.edges.iter().map(|e| e.id), gd.id, "edge")?;

    let mut nodes: Vec<GsmNode> =
        gd.nodes.into_iter().map(|n| GsmNode { id: node_map[&n.id], ell: n.ell, xi: n.xi, pi: n.pi }).collect();
    nodes.sort_by_key(|n| n.id);

    let lookup = |edge: u64, node: u64| {
        node_map.get(&node).copied().ok_or(ModelError::DanglingEndpoint {
            graph: gid,
            edge: edge as u32,
            node: node as u32,
        })
    };
    let mut edges = Vec::with_capacity(gd.edges.len());
    for e in gd.edges {
        edges.push(GsmEdge {
            id: edge_map[&e.id],
            src: lookup(e.id, e.src)?,
            dst: lookup(e.id, e.dst)?,
            label: e.label,
        });
    }
    edges.sort_by_key(|e| e.id);

    let root = match gd.root {
        Some(r) => Some(node_map.get(&r).copied().ok_or(ModelError::UnknownRoot { graph: gid, root: r as u32 })?),
        None => None,
    };

    let g = GsmGraph { id: gid, nodes, edges, root };
    validate_acyclic(&g).map_err(|w| ModelError::Cycle { graph: gid, witness: w })?;
    Ok(g)
}

fn dense_map(ids: impl Iterator<Item = u64>, graph: u64, kind: &'static str) -> Result<HashMap<u64, u32>, ModelError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ModelError::DuplicateId { graph, kind, id });
        }
    }
    Ok(seen.into_iter().enumerate().map(|(i, id)| (id, i as u32)).collect())
}

fn graph_doc(g: &GsmGraph) -> GraphDoc {
    let mut nodes: Vec<&GsmNode> = g.nodes.iter().collect();
    nodes.sort_by_key(|n| n.id);
    let mut edges: Vec<&GsmEdge> = g.edges.iter().collect();
    edges.sort_by_key(|e| e.id);
    GraphDoc {
        id: g.id as u64,
        root: g.root.map(u64::from),
        nodes: nodes
            .into_iter()
            .map(|n| NodeDoc { id: n.id as u64, ell: n.ell.clone(), xi: n.xi.clone(), pi: n.pi.clone() })
            .collect(),
        edges: edges
            .into_iter()
            .map(|e| EdgeDoc { id: e.id as u64, src: e.src as u64, dst: e.dst as u64, label: e.label.clone() })
            .collect(),
    }
}

/// Serializes a collection canonically: nodes and edges by id, property
/// keys sorted. Output is a pure function of the graphs' structure.
pub fn serialize_collection(graphs: &[GsmGraph]) -> String {
    let doc = CollectionDoc { graphs: graphs.iter().map(graph_doc).collect() };
    let mut out = serde_json::to_string_pretty(&doc).expect("graph documents always serialize");
    out.push('\n');
    out
}

/// Serializes a single graph as a one-graph collection document.
pub fn serialize_graph(g: &GsmGraph) -> String {
    serialize_collection(std::slice::from_ref(g))
}
