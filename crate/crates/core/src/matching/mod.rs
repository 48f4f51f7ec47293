//! Pattern matching as relational algebra over the phi tables.
//!
//! Each edge atom becomes a scan of the phi tables for its labels (shared
//! across rules through [`PatternCache`]), required atoms are equi-joined,
//! optional atoms left-joined, and the result is nested under aggregated
//! variables and block-indexed on the rule's entry point.

mod table;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::model::{GraphIdx, ObjectId, ObjectKind};
use crate::rules::{EdgeAtom, Pattern, Rule, RuleSet, Var};
use crate::store::ColumnarStore;

pub use table::{
    BlockIndex, Cell, FlatMorphismTable, IndexedMorphismTable, NestHeader, NestedMorphismTable, NestedRow,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchMode {
    /// Distinct pattern variables may bind the same object.
    #[default]
    Homomorphic,
    /// Node bindings are pairwise distinct.
    Isomorphic,
}

/// `(src, edge, dst)` triples of one label signature.
type Triples = Rc<Vec<(u32, u32, u32)>>;

/// Scan results for one graph, keyed by atom signature (its sorted label set).
pub struct PatternCache<'s> {
    store: &'s ColumnarStore,
    graph: GraphIdx,
    scans: HashMap<Vec<String>, Triples>,
    scan_counts: BTreeMap<Vec<String>, usize>,
}

fn signature(atom: &EdgeAtom) -> Vec<String> {
    let set: BTreeSet<&String> = atom.labels.iter().collect();
    set.into_iter().cloned().collect()
}

impl<'s> PatternCache<'s> {
    pub fn new(store: &'s ColumnarStore, graph: GraphIdx) -> Self {
        PatternCache { store, graph, scans: HashMap::new(), scan_counts: BTreeMap::new() }
    }

    pub fn graph(&self) -> GraphIdx {
        self.graph
    }

    /// `(src, edge, dst)` triples for every edge carrying one of the labels.
    fn edges(&mut self, sig: Vec<String>) -> Triples {
        if let Some(hit) = self.scans.get(&sig) {
            return Rc::clone(hit);
        }
        let mut out = Vec::new();
        for label in &sig {
            out.extend(self.store.scan_edges(self.graph, label, None).into_iter().map(|r| (r.src, r.edge, r.dst)));
        }
        *self.scan_counts.entry(sig.clone()).or_default() += 1;
        let out = Rc::new(out);
        self.scans.insert(sig, Rc::clone(&out));
        out
    }

    /// Number of phi-table scans performed per atom signature.
    pub fn scan_counts(&self) -> &BTreeMap<Vec<String>, usize> {
        &self.scan_counts
    }

    /// Morphisms of a single atom. The header is `[src, edge?, dst]`, or
    /// `[src, edge?]` when source and destination are the same variable.
    pub fn scan_atom(&mut self, atom: &EdgeAtom) -> FlatMorphismTable {
        let g = self.graph;
        let loop_atom = atom.src == atom.dst;
        let mut header = vec![atom.src.clone()];
        header.extend(atom.edge.iter().cloned());
        if !loop_atom {
            header.push(atom.dst.clone());
        }
        let mut t = FlatMorphismTable::new(header);
        for &(s, e, d) in self.edges(signature(atom)).iter() {
            if loop_atom && s != d {
                continue;
            }
            let mut row = vec![Some(ObjectId::node(g, s))];
            if atom.edge.is_some() {
                row.push(Some(ObjectId::edge(g, e)));
            }
            if !loop_atom {
                row.push(Some(ObjectId::node(g, d)));
            }
            t.rows.push(row);
        }
        t.canonicalize();
        t
    }
}

/// Morphisms of a single atom over one graph, without a shared cache.
pub fn scan_atom(store: &ColumnarStore, graph: GraphIdx, atom: &EdgeAtom) -> FlatMorphismTable {
    PatternCache::new(store, graph).scan_atom(atom)
}

fn shared_vars(a: &FlatMorphismTable, b: &FlatMorphismTable) -> Vec<(usize, usize)> {
    a.header.iter().enumerate().filter_map(|(i, v)| b.col(v).map(|j| (i, j))).collect()
}

/// Hash join of `left` with `right` on their common variables. With
/// `outer`, unmatched left rows survive with NULLs for the right-only
/// columns. NULL keys never match. `accept` filters candidate output rows
/// before they count as matches.
fn hash_join(
    left: &FlatMorphismTable,
    right: &FlatMorphismTable,
    outer: bool,
    accept: &dyn Fn(&[Cell]) -> bool,
) -> FlatMorphismTable {
    let shared = shared_vars(left, right);
    let extra: Vec<usize> = (0..right.header.len()).filter(|j| !shared.iter().any(|&(_, s)| s == *j)).collect();
    let mut header = left.header.clone();
    header.extend(extra.iter().map(|&j| right.header[j].clone()));

    let mut buckets: HashMap<Vec<ObjectId>, Vec<&Vec<Cell>>> = HashMap::new();
    for r in &right.rows {
        let key: Option<Vec<ObjectId>> = shared.iter().map(|&(_, j)| r[j]).collect();
        if let Some(k) = key {
            buckets.entry(k).or_default().push(r);
        }
    }

    let mut out = FlatMorphismTable::new(header);
    for l in &left.rows {
        let key: Option<Vec<ObjectId>> = shared.iter().map(|&(i, _)| l[i]).collect();
        let mut matched = false;
        if let Some(rs) = key.and_then(|k| buckets.get(&k)) {
            for r in rs {
                let mut row = l.clone();
                row.extend(extra.iter().map(|&j| r[j]));
                if accept(&row) {
                    out.rows.push(row);
                    matched = true;
                }
            }
        }
        if outer && !matched {
            let mut row = l.clone();
            row.extend(extra.iter().map(|_| None));
            out.rows.push(row);
        }
    }
    out.canonicalize();
    out
}

fn accept_all(_: &[Cell]) -> bool {
    true
}

/// Whether the bound node cells of a row are pairwise distinct. Edge
/// variables are left alone: two atoms over the same endpoints may share an
/// edge.
pub fn all_distinct(row: &[Cell]) -> bool {
    let mut seen = BTreeSet::new();
    row.iter().flatten().filter(|id| id.kind == ObjectKind::Node).all(|id| seen.insert(*id))
}

/// Natural equi-join of all tables.
///
/// Tables are joined smallest first (ties by position); each step picks the
/// smallest remaining table sharing a variable with the running result.
pub fn join_required(tables: Vec<FlatMorphismTable>) -> FlatMorphismTable {
    if tables.is_empty() {
        return FlatMorphismTable::default();
    }
    let mut remaining: Vec<(usize, FlatMorphismTable)> = tables.into_iter().enumerate().collect();
    let first = (0..remaining.len()).min_by_key(|&i| (remaining[i].1.len(), remaining[i].0)).unwrap();
    let mut acc = remaining.remove(first).1;
    while !remaining.is_empty() {
        let pick = (0..remaining.len())
            .filter(|&i| !shared_vars(&acc, &remaining[i].1).is_empty())
            .min_by_key(|&i| (remaining[i].1.len(), remaining[i].0))
            .or_else(|| (0..remaining.len()).min_by_key(|&i| (remaining[i].1.len(), remaining[i].0)))
            .unwrap();
        let next = remaining.remove(pick).1;
        acc = hash_join(&acc, &next, false, &accept_all);
    }
    acc.canonicalize();
    acc
}

/// Left outer join: every required row survives, padded with NULL where
/// the optional side has no compatible row.
pub fn join_optional(required: &FlatMorphismTable, opt: &FlatMorphismTable) -> FlatMorphismTable {
    hash_join(required, opt, true, &accept_all)
}

/// Groups rows by the variables outside every aggregation and packs the
/// bindings below each aggregated variable into a nested table.
///
/// Nested rows that are entirely NULL are dropped, so an unmatched optional
/// aggregation yields an empty nest.
pub fn nest(table: &FlatMorphismTable, pattern: &Pattern) -> NestedMorphismTable {
    let outer_header: Vec<Var> = pattern.outer_vars().into_iter().filter(|v| table.col(v).is_some()).collect();
    let nest_headers: Vec<NestHeader> =
        pattern.nests().into_iter().map(|n| NestHeader { agg: n.agg.clone(), header: n.header() }).collect();

    let cols = |vars: &[Var]| -> Vec<Option<usize>> { vars.iter().map(|v| table.col(v)).collect() };
    let outer_cols = cols(&outer_header);
    let nest_cols: Vec<Vec<Option<usize>>> = nest_headers.iter().map(|n| cols(&n.header)).collect();
    let pick =
        |row: &[Cell], cs: &[Option<usize>]| -> Vec<Cell> { cs.iter().map(|c| c.and_then(|i| row[i])).collect() };

    let mut groups: BTreeMap<Vec<Cell>, Vec<BTreeSet<Vec<Cell>>>> = BTreeMap::new();
    for row in &table.rows {
        let g = groups.entry(pick(row, &outer_cols)).or_insert_with(|| vec![BTreeSet::new(); nest_cols.len()]);
        for (set, cs) in g.iter_mut().zip(&nest_cols) {
            let nested = pick(row, cs);
            if nested.iter().any(Option::is_some) {
                set.insert(nested);
            }
        }
    }

    NestedMorphismTable {
        outer_header,
        nest_headers,
        rows: groups
            .into_iter()
            .map(|(outer, nests)| NestedRow {
                outer,
                nests: nests.into_iter().map(|s| s.into_iter().collect()).collect(),
            })
            .collect(),
    }
}

/// Sorts the table by the entry column and indexes its blocks.
///
/// Panics if `entry` is not an outer column; validated rules guarantee it.
pub fn build_index(mut table: NestedMorphismTable, entry: &Var) -> IndexedMorphismTable {
    let entry_col = table.outer_col(entry).expect("entry variable must be an outer column");
    table.rows.sort_by(|a, b| (a.outer[entry_col], &a.outer, &a.nests).cmp(&(b.outer[entry_col], &b.outer, &b.nests)));
    let index = BlockIndex::from_sorted_keys(
        table.rows.iter().map(|r| r.outer[entry_col].expect("entry binding is never NULL")),
    );
    IndexedMorphismTable { table, entry: entry.clone(), entry_col, index }
}

/// Flat morphisms of a pattern: scans, required joins, then one left join
/// per optional atom in declaration order. Columns follow
/// [`Pattern::vars`]; rows are canonical (sorted, unique).
pub fn evaluate_pattern(cache: &mut PatternCache<'_>, pattern: &Pattern, mode: MatchMode) -> FlatMorphismTable {
    let iso = mode == MatchMode::Isomorphic;
    let required: Vec<FlatMorphismTable> = pattern.required().map(|a| cache.scan_atom(a)).collect();
    let mut acc = join_required(required);
    if iso {
        acc.rows.retain(|r| all_distinct(r));
    }
    for atom in pattern.optional() {
        let opt = cache.scan_atom(atom);
        acc = if iso { hash_join(&acc, &opt, true, &all_distinct) } else { join_optional(&acc, &opt) };
    }
    let mut out = acc.project(&pattern.vars());
    out.canonicalize();
    out
}

/// Full matching pipeline for one rule over the cache's graph.
pub fn match_rule(cache: &mut PatternCache<'_>, rule: &Rule, mode: MatchMode) -> IndexedMorphismTable {
    let mode = if rule.distinct { MatchMode::Isomorphic } else { mode };
    let flat = evaluate_pattern(cache, &rule.pattern, mode);
    build_index(nest(&flat, &rule.pattern), &rule.pattern.entry)
}

/// Morphism tables of every rule over one graph, in rule order.
#[derive(Clone, Debug)]
pub struct GraphMatches {
    pub graph: GraphIdx,
    pub tables: Vec<IndexedMorphismTable>,
    pub scan_counts: BTreeMap<Vec<String>, usize>,
}

pub fn match_graph(store: &ColumnarStore, graph: GraphIdx, rules: &RuleSet, mode: MatchMode) -> GraphMatches {
    let mut cache = PatternCache::new(store, graph);
    let tables = rules.rules.iter().map(|r| match_rule(&mut cache, r, mode)).collect();
    GraphMatches { graph, tables, scan_counts: cache.scan_counts().clone() }
}
