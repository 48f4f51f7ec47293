//! Columnar, read-only index over a graph collection.
//!
//! Nodes live in the activity table keyed by their primary label, non-null
//! properties in one attribute table per key, and edges in one phi table per
//! edge label. Every table is sorted and carries a block index so lookups
//! cost a binary search plus the size of the returned block.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write;
use std::ops::Range;

use crate::error::StoreError;
use crate::model::{validate_acyclic, CycleWitness, GraphIdx, GsmGraph};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ActivityRow {
    pub label: String,
    pub graph: GraphIdx,
    pub node: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeRow {
    pub graph: GraphIdx,
    pub value: String,
    /// Final position of the owning node in the activity table.
    pub activity_offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhiRow {
    pub src_label: String,
    pub graph: GraphIdx,
    pub src: u32,
    pub edge: u32,
    pub dst: u32,
}

#[derive(Debug, Default)]
pub struct ActivityTable {
    rows: Vec<ActivityRow>,
    primary: BTreeMap<String, Range<usize>>,
    /// `secondary[graph][node]` is the node's offset in `rows`.
    secondary: Vec<Vec<usize>>,
}

impl ActivityTable {
    pub fn rows(&self) -> &[ActivityRow] {
        &self.rows
    }

    pub fn offset(&self, graph: GraphIdx, node: u32) -> Option<usize> {
        self.secondary.get(graph as usize)?.get(node as usize).copied()
    }

    /// Rows whose primary label is `label`, across all graphs.
    pub fn block(&self, label: &str) -> &[ActivityRow] {
        match self.primary.get(label) {
            Some(r) => &self.rows[r.clone()],
            None => &[],
        }
    }
}

#[derive(Debug, Default)]
pub struct AttributeTable {
    rows: Vec<AttributeRow>,
}

impl AttributeTable {
    pub fn rows(&self) -> &[AttributeRow] {
        &self.rows
    }

    fn lookup(&self, graph: GraphIdx, offset: usize) -> Option<&str> {
        self.rows
            .binary_search_by(|r| (r.graph, r.activity_offset).cmp(&(graph, offset)))
            .ok()
            .map(|i| self.rows[i].value.as_str())
    }
}

#[derive(Debug, Default)]
pub struct PhiTable {
    rows: Vec<PhiRow>,
    /// source label -> graph -> row range
    blocks: BTreeMap<String, BTreeMap<GraphIdx, Range<usize>>>,
}

impl PhiTable {
    pub fn rows(&self) -> &[PhiRow] {
        &self.rows
    }
}

/// Immutable indexed form of a graph collection.
///
/// The input graphs are retained so that rewritten graphs can be
/// materialised against them.
#[derive(Debug, Default)]
pub struct ColumnarStore {
    graphs: Vec<GsmGraph>,
    activity: ActivityTable,
    attributes: BTreeMap<String, AttributeTable>,
    phi: BTreeMap<String, PhiTable>,
    vtopo: Vec<Vec<u32>>,
}

/// Topological order of `g`'s nodes; ties are broken by ascending node id.
pub fn topo_sort(g: &GsmGraph) -> Result<Vec<u32>, CycleWitness> {
    let n = g.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<u32>> = vec![Vec::new(); n];
    for e in &g.edges {
        indegree[e.dst as usize] += 1;
        out[e.src as usize].push(e.dst);
    }
    let mut ready: BinaryHeap<Reverse<u32>> =
        (0..n as u32).filter(|&u| indegree[u as usize] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &out[u as usize] {
            indegree[v as usize] -= 1;
            if indegree[v as usize] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(validate_acyclic(g).expect_err("Kahn's algorithm stalled on an acyclic graph"))
    }
}

/// Builds the columnar tables and per-graph topological orders.
///
/// Graph ids must equal their position in `graphs`, as produced by
/// [`crate::model::parse_graph_collection`].
pub fn index_collection(graphs: Vec<GsmGraph>) -> Result<ColumnarStore, StoreError> {
    let mut vtopo = Vec::with_capacity(graphs.len());
    for (pos, g) in graphs.iter().enumerate() {
        if g.id as usize != pos {
            return Err(StoreError::NonDenseGraphId { position: pos, id: g.id });
        }
        g.check_endpoints()?;
        let order = topo_sort(g).map_err(|w| crate::error::ModelError::Cycle { graph: g.id, witness: w })?;
        vtopo.push(order);
    }

    // Activity table: one row per node under its primary label.
    let mut rows: Vec<ActivityRow> = graphs
        .iter()
        .flat_map(|g| {
            g.nodes.iter().map(move |n| ActivityRow { label: n.primary_label().to_string(), graph: g.id, node: n.id })
        })
        .collect();
    rows.sort();
    let mut primary: BTreeMap<String, Range<usize>> = BTreeMap::new();
    let mut secondary: Vec<Vec<usize>> = graphs.iter().map(|g| vec![0; g.nodes.len()]).collect();
    for (off, row) in rows.iter().enumerate() {
        secondary[row.graph as usize][row.node as usize] = off;
        primary.entry(row.label.clone()).or_insert(off..off).end = off + 1;
    }
    let activity = ActivityTable { rows, primary, secondary };

    // Attribute tables, offsets taken after sorting the activity table.
    let mut attributes: BTreeMap<String, AttributeTable> = BTreeMap::new();
    for g in &graphs {
        for n in &g.nodes {
            let off = activity.secondary[g.id as usize][n.id as usize];
            for (k, v) in &n.pi {
                attributes.entry(k.clone()).or_default().rows.push(AttributeRow {
                    graph: g.id,
                    value: v.clone(),
                    activity_offset: off,
                });
            }
        }
    }
    for t in attributes.values_mut() {
        t.rows.sort_by_key(|r| (r.graph, r.activity_offset));
    }

    let mut phi: BTreeMap<String, PhiTable> = BTreeMap::new();
    for g in &graphs {
        for e in &g.edges {
            phi.entry(e.label.clone()).or_default().rows.push(PhiRow {
                src_label: g.nodes[e.src as usize].primary_label().to_string(),
                graph: g.id,
                src: e.src,
                edge: e.id,
                dst: e.dst,
            });
        }
    }
    for t in phi.values_mut() {
        t.rows.sort();
        for (i, r) in t.rows.iter().enumerate() {
            t.blocks.entry(r.src_label.clone()).or_default().entry(r.graph).or_insert(i..i).end = i + 1;
        }
    }

    Ok(ColumnarStore { graphs, activity, attributes, phi, vtopo })
}

impl ColumnarStore {
    pub fn graphs(&self) -> &[GsmGraph] {
        &self.graphs
    }

    pub fn graph(&self, graph: GraphIdx) -> &GsmGraph {
        &self.graphs[graph as usize]
    }

    pub fn graph_count(&self) -> usize {
        self.graphs.len()
    }

    pub fn activity(&self) -> &ActivityTable {
        &self.activity
    }

    pub fn attribute_table(&self, key: &str) -> Option<&AttributeTable> {
        self.attributes.get(key)
    }

    pub fn phi_table(&self, label: &str) -> Option<&PhiTable> {
        self.phi.get(label)
    }

    pub fn phi_labels(&self) -> impl Iterator<Item = &str> {
        self.phi.keys().map(String::as_str)
    }

    pub fn vtopo(&self, graph: GraphIdx) -> &[u32] {
        &self.vtopo[graph as usize]
    }

    pub fn ell(&self, graph: GraphIdx, node: u32) -> &[String] {
        &self.graphs[graph as usize].nodes[node as usize].ell
    }

    pub fn xi(&self, graph: GraphIdx, node: u32) -> &[String] {
        &self.graphs[graph as usize].nodes[node as usize].xi
    }

    pub fn edge_label(&self, graph: GraphIdx, edge: u32) -> &str {
        &self.graphs[graph as usize].edges[edge as usize].label
    }

    /// Whether `label` occurs anywhere in the node's label vector.
    pub fn has_label(&self, graph: GraphIdx, node: u32, label: &str) -> bool {
        self.ell(graph, node).iter().any(|l| l == label)
    }

    /// Edges of `graph` labelled `label`, optionally restricted to sources
    /// whose primary label is `src_label`, in table order.
    pub fn scan_edges(&self, graph: GraphIdx, label: &str, src_label: Option<&str>) -> Vec<&PhiRow> {
        let Some(table) = self.phi.get(label) else {
            return Vec::new();
        };
        let block = |per_graph: &BTreeMap<GraphIdx, Range<usize>>| {
            per_graph.get(&graph).map(|r| &table.rows[r.clone()]).unwrap_or(&[])
        };
        match src_label {
            Some(sl) => table.blocks.get(sl).map(block).unwrap_or(&[]).iter().collect(),
            None => table.blocks.values().flat_map(block).collect(),
        }
    }

    /// Non-null value of property `key` on a node, read through the
    /// secondary index and the attribute table.
    pub fn get_property(&self, graph: GraphIdx, node: u32, key: &str) -> Option<&str> {
        let off = self.activity.offset(graph, node)?;
        self.attributes.get(key)?.lookup(graph, off)
    }

    /// Tab-separated dump of every table, keyed by table name.
    pub fn dump_tables(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut s = String::from("off\tlabel\tgraph\tnode\n");
        for (i, r) in self.activity.rows.iter().enumerate() {
            let _ = writeln!(s, "{i}\t{}\t{}\t{}", r.label, r.graph, r.node);
        }
        out.insert("ActivityTable".to_string(), s);
        for (k, t) in &self.attributes {
            let mut s = String::from("graph\tvalue\toff\n");
            for r in &t.rows {
                let _ = writeln!(s, "{}\t{}\t{}", r.graph, r.value, r.activity_offset);
            }
            out.insert(format!("AttributeTable_{k}"), s);
        }
        for (l, t) in &self.phi {
            let mut s = String::from("src_label\tgraph\tsrc\tedge\tdst\n");
            for r in &t.rows {
                let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.src_label, r.graph, r.src, r.edge, r.dst);
            }
            out.insert(format!("PhiTable_{l}"), s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: u32, edges: &[(u32, u32)]) -> GsmGraph {
        let mut g = GsmGraph::new(0);
        for i in 0..n {
            let l = format!("n{i}");
            g.add_node(&[&l], &[&l]);
        }
        for &(s, d) in edges {
            g.add_edge(s, d, "x");
        }
        g
    }

    #[test]
    fn topo_examples() {
        assert_eq!(topo_sort(&dag(3, &[(0, 1), (1, 2)])).unwrap(), vec![0, 1, 2]);
        assert_eq!(topo_sort(&dag(4, &[(0, 1), (0, 2), (1, 3), (2, 3)])).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(topo_sort(&dag(3, &[])).unwrap(), vec![0, 1, 2]);
        assert_eq!(topo_sort(&dag(2, &[(1, 0)])).unwrap(), vec![1, 0]);
        assert!(topo_sort(&dag(2, &[(0, 1), (1, 0)])).is_err());
    }

    #[test]
    fn empty_collection_has_empty_tables() {
        let store = index_collection(Vec::new()).unwrap();
        assert!(store.activity().rows().is_empty());
        assert_eq!(store.phi_labels().count(), 0);
        assert!(store.scan_edges(0, "x", None).is_empty());
    }

    #[test]
    fn properties_and_missing_keys() {
        let mut g = dag(2, &[(0, 1)]);
        g.nodes[1].pi.insert("upos".into(), "VERB".into());
        let store = index_collection(vec![g]).unwrap();
        assert_eq!(store.get_property(0, 1, "upos"), Some("VERB"));
        assert_eq!(store.get_property(0, 1, "missing"), None);
        assert_eq!(store.get_property(0, 0, "upos"), None);
        assert_eq!(store.get_property(3, 0, "upos"), None);
    }

    #[test]
    fn copies_are_separated_by_graph() {
        let a = dag(3, &[(0, 1), (1, 2)]);
        let mut b = a.clone();
        b.id = 1;
        let store = index_collection(vec![a, b]).unwrap();
        assert_eq!(store.activity().rows().len(), 6);
        assert_eq!(store.scan_edges(0, "x", None).len(), 2);
        assert!(store.scan_edges(1, "x", None).iter().all(|r| r.graph == 1));
        assert_eq!(store.scan_edges(1, "x", Some("n1")).len(), 1);
        assert_eq!(store.scan_edges(0, "zzz", None).len(), 0);
    }

    #[test]
    fn non_dense_graph_ids_are_rejected() {
        let mut g = dag(1, &[]);
        g.id = 4;
        assert!(matches!(index_collection(vec![g]), Err(StoreError::NonDenseGraphId { id: 4, .. })));
    }

    #[test]
    fn unlabelled_nodes_use_the_empty_label() {
        let mut g = GsmGraph::new(0);
        g.add_node(&[], &[]);
        g.add_node(&["a", "b"], &[]);
        let store = index_collection(vec![g]).unwrap();
        assert_eq!(store.activity().block("").len(), 1);
        assert_eq!(store.activity().block("a").len(), 1);
        assert!(store.activity().block("b").is_empty());
        assert!(store.has_label(0, 1, "b"));
    }

    #[test]
    fn dump_has_one_entry_per_table() {
        let mut g = dag(2, &[(0, 1)]);
        g.nodes[0].pi.insert("k".into(), "v".into());
        let dump = index_collection(vec![g]).unwrap().dump_tables();
        let names: Vec<&str> = dump.keys().map(String::as_str).collect();
        assert_eq!(names, vec!["ActivityTable", "AttributeTable_k", "PhiTable_x"]);
        assert_eq!(dump["PhiTable_x"], "src_label\tgraph\tsrc\tedge\tdst\nn0\t0\t0\t0\t1\n");
    }
}
