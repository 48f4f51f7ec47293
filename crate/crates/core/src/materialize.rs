//! Merges an incremental view back into a standalone graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::MaterializeError;
use crate::model::{validate_acyclic, GsmEdge, GsmGraph, GsmNode, ObjectId, ObjectKind};
use crate::rewrite::Delta;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProvenanceEntry {
    pub kind: ObjectKind,
    pub old: u32,
    pub new: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Materialized {
    pub graph: GsmGraph,
    /// Old id (original or fresh) to output id, for every surviving object.
    /// A deleted node that was replaced maps onto its replacement.
    pub provenance: Vec<ProvenanceEntry>,
}

/// Builds the rewritten graph.
///
/// Surviving original nodes keep their relative order and come first,
/// followed by created nodes in creation order; ids are then renumbered
/// densely. Edge endpoints on a deleted node are redirected along the
/// replacement relation, and the edge is dropped when no replacement
/// exists.
pub fn materialise(g: &GsmGraph, delta: &Delta) -> Result<Materialized, MaterializeError> {
    let mut out = GsmGraph::new(g.id);
    let mut node_map: BTreeMap<ObjectId, u32> = BTreeMap::new();
    let mut provenance = Vec::new();

    for n in &g.nodes {
        let oid = g.node_oid(n.id);
        if delta.deleted.contains(&oid) {
            continue;
        }
        let mut node = n.clone();
        if let Some(u) = delta.updates.get(&oid) {
            if let Some(ell) = &u.ell {
                node.ell = ell.clone();
            }
            node.xi.extend(u.xi_appended.iter().cloned());
            for (k, v) in &u.pi {
                node.pi.insert(k.clone(), v.clone());
            }
        }
        node.id = out.nodes.len() as u32;
        node_map.insert(oid, node.id);
        out.nodes.push(node);
    }
    for (oid, rec) in &delta.new_nodes {
        if delta.deleted.contains(oid) {
            continue;
        }
        let id = out.nodes.len() as u32;
        node_map.insert(*oid, id);
        out.nodes.push(GsmNode { id, ell: rec.ell.clone(), xi: rec.xi.clone(), pi: rec.pi.clone() });
    }

    let place = |x: ObjectId| delta.settle(x).and_then(|s| node_map.get(&s).copied());

    for n in &g.nodes {
        if let Some(new) = place(g.node_oid(n.id)) {
            provenance.push(ProvenanceEntry { kind: ObjectKind::Node, old: n.id, new });
        }
    }
    for oid in delta.new_nodes.keys() {
        if let Some(&new) = node_map.get(oid) {
            provenance.push(ProvenanceEntry { kind: ObjectKind::Node, old: oid.local, new });
        }
    }

    for e in &g.edges {
        let oid = g.edge_oid(e.id);
        if delta.deleted.contains(&oid) {
            continue;
        }
        let (Some(src), Some(dst)) = (place(g.node_oid(e.src)), place(g.node_oid(e.dst))) else {
            continue;
        };
        let id = out.edges.len() as u32;
        provenance.push(ProvenanceEntry { kind: ObjectKind::Edge, old: e.id, new: id });
        out.edges.push(GsmEdge { id, src, dst, label: e.label.clone() });
    }
    for e in &delta.new_edges {
        if delta.deleted.contains(&e.id) {
            continue;
        }
        for end in [e.src, e.dst] {
            let known =
                if end.is_fresh() { delta.new_nodes.contains_key(&end) } else { (end.local as usize) < g.nodes.len() };
            if !known {
                return Err(MaterializeError::DanglingEdge { graph: g.id, edge: e.id, node: end });
            }
        }
        let (Some(src), Some(dst)) = (place(e.src), place(e.dst)) else {
            continue;
        };
        let id = out.edges.len() as u32;
        provenance.push(ProvenanceEntry { kind: ObjectKind::Edge, old: e.id.local, new: id });
        out.edges.push(GsmEdge { id, src, dst, label: e.label.clone() });
    }

    out.root = g.root.and_then(|r| place(g.node_oid(r)));
    validate_acyclic(&out).map_err(|witness| MaterializeError::Cycle { graph: g.id, witness })?;
    Ok(Materialized { graph: out, provenance })
}

/// Provenance sidecar: `old_kind,old_id,new_id` lines, one `# graph N`
/// line before each graph's block.
pub fn provenance_csv(results: &[Materialized]) -> String {
    let mut s = String::from("old_kind,old_id,new_id\n");
    for m in results {
        let _ = writeln!(s, "# graph {}", m.graph.id);
        for p in &m.provenance {
            let _ = writeln!(s, "{},{},{}", p.kind, p.old, p.new);
        }
    }
    s
}
