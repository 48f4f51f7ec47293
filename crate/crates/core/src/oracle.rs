//! Brute-force reference matcher for tiny graphs.
//!
//! Tries every assignment of graph nodes to the required node variables,
//! then every edge choice per required atom, then extends each morphism by
//! the optional atoms one at a time in declaration order (NULL when no
//! extension exists). Only meant for checking the relational matcher.

use std::collections::BTreeMap;

use crate::matching::{all_distinct, Cell, FlatMorphismTable, MatchMode};
use crate::model::{GsmGraph, ObjectId};
use crate::rules::{EdgeAtom, Pattern, Var};

/// Largest graph the oracle accepts.
pub const MAX_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("graph {graph} has {nodes} nodes; the oracle accepts at most {MAX_NODES}")]
pub struct TooLarge {
    pub graph: u32,
    pub nodes: usize,
}

type Binding = BTreeMap<Var, Cell>;

fn edges_for<'g>(g: &'g GsmGraph, atom: &'g EdgeAtom, src: u32, dst: u32) -> impl Iterator<Item = u32> + 'g {
    g.edges.iter().filter(move |e| e.src == src && e.dst == dst && atom.labels.contains(&e.label)).map(|e| e.id)
}

fn distinct(b: &Binding) -> bool {
    let cells: Vec<Cell> = b.values().copied().collect();
    all_distinct(&cells)
}

/// Every morphism of `pattern` into `g`, as a canonical table over
/// [`Pattern::vars`].
///
/// Refuses graphs with more than [`MAX_NODES`] nodes.
pub fn enumerate_morphisms_bruteforce(
    g: &GsmGraph,
    pattern: &Pattern,
    mode: MatchMode,
) -> Result<FlatMorphismTable, TooLarge> {
    if g.nodes.len() > MAX_NODES {
        return Err(TooLarge { graph: g.id, nodes: g.nodes.len() });
    }
    let iso = mode == MatchMode::Isomorphic;
    let gid = g.id;
    let node = |i: u32| Some(ObjectId::node(gid, i));

    let mut req_vars: Vec<Var> = Vec::new();
    for a in pattern.required() {
        for v in [&a.src, &a.dst] {
            if !req_vars.contains(v) {
                req_vars.push(v.clone());
            }
        }
    }

    let n = g.nodes.len() as u32;
    let mut results: Vec<Binding> = Vec::new();
    let mut assign = vec![0u32; req_vars.len()];
    let total = (n as u64).pow(req_vars.len() as u32);
    for _ in 0..total {
        let base: Binding = req_vars.iter().cloned().zip(assign.iter().map(|&i| node(i))).collect();
        // Edge choices for each required atom.
        let mut partial = vec![base];
        for a in pattern.required() {
            let (Some(s), Some(d)) = (partial[0][&a.src], partial[0][&a.dst]) else { unreachable!() };
            let choices: Vec<u32> = edges_for(g, a, s.local, d.local).collect();
            if choices.is_empty() {
                partial.clear();
                break;
            }
            if let Some(ev) = &a.edge {
                partial = partial
                    .into_iter()
                    .flat_map(|b| {
                        choices.iter().map(move |&e| {
                            let mut b = b.clone();
                            b.insert(ev.clone(), Some(ObjectId::edge(gid, e)));
                            b
                        })
                    })
                    .collect();
            }
        }
        results.extend(partial.into_iter().filter(|b| !iso || distinct(b)));

        // next assignment (odometer)
        for slot in assign.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }

    for a in pattern.optional() {
        let mut next = Vec::new();
        for b in results {
            let mut ext = Vec::new();
            for e in &g.edges {
                if !a.labels.contains(&e.label) {
                    continue;
                }
                let mut nb = b.clone();
                let mut ok = true;
                for (v, val) in [(&a.src, node(e.src)), (&a.dst, node(e.dst))]
                    .into_iter()
                    .chain(a.edge.as_ref().map(|ev| (ev, Some(ObjectId::edge(gid, e.id)))))
                {
                    match nb.get(v) {
                        Some(cur) if *cur != val => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            nb.insert(v.clone(), val);
                        }
                    }
                }
                if ok && (!iso || distinct(&nb)) {
                    ext.push(nb);
                }
            }
            if ext.is_empty() {
                let mut nb = b;
                for v in [&a.src, &a.dst].into_iter().chain(a.edge.as_ref()) {
                    nb.entry(v.clone()).or_insert(None);
                }
                next.push(nb);
            } else {
                next.extend(ext);
            }
        }
        results = next;
    }

    let header = pattern.vars();
    let mut t = FlatMorphismTable::new(header.clone());
    t.rows = results.iter().map(|b| header.iter().map(|v| b.get(v).copied().flatten()).collect()).collect();
    t.canonicalize();
    Ok(t)
}
