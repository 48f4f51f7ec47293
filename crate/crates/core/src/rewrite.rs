//! Rule application over the incremental view of a graph.
//!
//! Graphs are never mutated here. Every effect of a production (new nodes and
//! edges, label/value/property writes, deletions, replacements) is recorded
//! in a [`Delta`] and merged with the original graph only at
//! materialisation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::error::RewriteError;
use crate::matching::{Cell, GraphMatches, NestedRow};
use crate::model::{GraphIdx, ObjectId, ObjectKind};
use crate::rules::{CmpOp, Cond, Expr, OpKind, ProductionOp, Rule, RuleSet, Var};
use crate::store::ColumnarStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolved {
    Live(ObjectId),
    Deleted,
}

impl Resolved {
    pub fn live(self) -> Option<ObjectId> {
        match self {
            Resolved::Live(id) => Some(id),
            Resolved::Deleted => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeRecord {
    pub ell: Vec<String>,
    pub xi: Vec<String>,
    pub pi: BTreeMap<String, String>,
}

/// Recorded changes to a node of the original graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeUpdate {
    pub ell: Option<Vec<String>>,
    pub xi_appended: Vec<String>,
    pub pi: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewEdge {
    pub id: ObjectId,
    pub src: ObjectId,
    pub dst: ObjectId,
    pub label: String,
}

/// Incremental view of one graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delta {
    pub graph: GraphIdx,
    /// Nodes created by productions, keyed by fresh id (creation order).
    pub new_nodes: BTreeMap<ObjectId, NodeRecord>,
    pub updates: BTreeMap<ObjectId, NodeUpdate>,
    pub new_edges: Vec<NewEdge>,
    pub deleted: BTreeSet<ObjectId>,
    /// Replacement relation: old object -> the node standing in for it.
    pub re: BTreeMap<ObjectId, ObjectId>,
    targets: BTreeSet<ObjectId>,
    next_node: u32,
    next_edge: u32,
}

impl Delta {
    pub fn new(graph: GraphIdx) -> Self {
        Delta {
            graph,
            new_nodes: BTreeMap::new(),
            updates: BTreeMap::new(),
            new_edges: Vec::new(),
            deleted: BTreeSet::new(),
            re: BTreeMap::new(),
            targets: BTreeSet::new(),
            next_node: ObjectId::FRESH_BASE,
            next_edge: ObjectId::FRESH_BASE,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.new_nodes.is_empty()
            && self.updates.is_empty()
            && self.new_edges.is_empty()
            && self.deleted.is_empty()
            && self.re.is_empty()
    }

    /// Follows the replacement relation to its fixpoint.
    pub fn resolve(&self, x: ObjectId) -> Resolved {
        let mut cur = x;
        // `re` is kept acyclic, so this terminates within |re| steps.
        for _ in 0..=self.re.len() {
            match self.re.get(&cur) {
                Some(&next) => cur = next,
                None => break,
            }
        }
        if self.deleted.contains(&cur) {
            Resolved::Deleted
        } else {
            Resolved::Live(cur)
        }
    }

    /// Where an object of the original graph ends up in the output: itself
    /// unless deleted, otherwise its replacement (if any), transitively.
    pub fn settle(&self, x: ObjectId) -> Option<ObjectId> {
        let mut cur = x;
        for _ in 0..=self.re.len() {
            if !self.deleted.contains(&cur) {
                return Some(cur);
            }
            cur = *self.re.get(&cur)?;
        }
        None
    }

    pub fn fresh_node(&mut self) -> ObjectId {
        let id = ObjectId::node(self.graph, self.next_node);
        self.next_node += 1;
        self.new_nodes.insert(id, NodeRecord::default());
        id
    }

    pub fn add_edge(&mut self, src: ObjectId, dst: ObjectId, label: String) -> ObjectId {
        let id = ObjectId::edge(self.graph, self.next_edge);
        self.next_edge += 1;
        self.new_edges.push(NewEdge { id, src, dst, label });
        id
    }

    /// Marks an object as deleted. Replacement targets are never deleted.
    pub fn delete(&mut self, x: ObjectId) {
        if !self.targets.contains(&x) {
            self.deleted.insert(x);
        }
    }

    /// Records that `new` stands in for `old` and rescues `new` from the
    /// deleted set. Returns `false` (and records nothing) if this would make
    /// the replacement relation cyclic.
    pub fn replace(&mut self, old: ObjectId, new: ObjectId) -> bool {
        // An earlier replacement of `old` chains on from its last stand-in.
        let mut from = old;
        while let Some(&n) = self.re.get(&from) {
            from = n;
        }
        if from == new {
            return true;
        }
        let mut cur = new;
        loop {
            if cur == from || cur == old {
                return false;
            }
            match self.re.get(&cur) {
                Some(&n) => cur = n,
                None => break,
            }
        }
        self.re.insert(from, new);
        self.targets.insert(new);
        self.deleted.remove(&new);
        true
    }

    fn record_mut(&mut self, id: ObjectId) -> Option<&mut NodeRecord> {
        self.new_nodes.get_mut(&id)
    }

    pub fn set_label(&mut self, id: ObjectId, label: String) {
        match self.record_mut(id) {
            Some(r) => r.ell = vec![label],
            None => self.updates.entry(id).or_default().ell = Some(vec![label]),
        }
    }

    pub fn append_xi(&mut self, id: ObjectId, value: String) {
        match self.record_mut(id) {
            Some(r) => r.xi.push(value),
            None => self.updates.entry(id).or_default().xi_appended.push(value),
        }
    }

    pub fn set_prop(&mut self, id: ObjectId, key: String, value: String) {
        match self.record_mut(id) {
            Some(r) => {
                r.pi.insert(key, value);
            }
            None => {
                self.updates.entry(id).or_default().pi.insert(key, value);
            }
        }
    }

    /// Current label vector of a node, reading through recorded updates.
    pub fn ell(&self, store: &ColumnarStore, id: ObjectId) -> Vec<String> {
        if let Some(r) = self.new_nodes.get(&id) {
            return r.ell.clone();
        }
        match self.updates.get(&id).and_then(|u| u.ell.clone()) {
            Some(ell) => ell,
            None => store.ell(id.graph, id.local).to_vec(),
        }
    }

    pub fn xi(&self, store: &ColumnarStore, id: ObjectId) -> Vec<String> {
        if let Some(r) = self.new_nodes.get(&id) {
            return r.xi.clone();
        }
        let mut xi = store.xi(id.graph, id.local).to_vec();
        if let Some(u) = self.updates.get(&id) {
            xi.extend(u.xi_appended.iter().cloned());
        }
        xi
    }

    pub fn prop(&self, store: &ColumnarStore, id: ObjectId, key: &str) -> Option<String> {
        if let Some(r) = self.new_nodes.get(&id) {
            return r.pi.get(key).cloned();
        }
        if let Some(v) = self.updates.get(&id).and_then(|u| u.pi.get(key)) {
            return Some(v.clone());
        }
        store.get_property(id.graph, id.local, key).map(str::to_string)
    }

    pub fn edge_label(&self, store: &ColumnarStore, id: ObjectId) -> Option<String> {
        if id.is_fresh() {
            self.new_edges.iter().find(|e| e.id == id).map(|e| e.label.clone())
        } else {
            Some(store.edge_label(id.graph, id.local).to_string())
        }
    }
}

/// Variable bindings of one rule instance.
#[derive(Clone, Debug)]
pub struct Bindings {
    pub rule: String,
    pub entry: ObjectId,
    pub outer: BTreeMap<Var, Cell>,
    pub nests: Vec<BoundNest>,
    /// Deletions queued until the instance completes.
    pub pending_deletions: Vec<ObjectId>,
}

#[derive(Clone, Debug)]
pub struct BoundNest {
    pub header: Vec<Var>,
    pub rows: Vec<Vec<Cell>>,
}

impl Bindings {
    pub fn new(rule: &str, entry: ObjectId) -> Self {
        Bindings {
            rule: rule.to_string(),
            entry,
            outer: BTreeMap::new(),
            nests: Vec::new(),
            pending_deletions: Vec::new(),
        }
    }

    fn nest_of(&self, v: &Var) -> Option<usize> {
        self.nests.iter().position(|n| n.header.contains(v))
    }
}

/// One evaluation environment: the outer bindings plus, for iterating
/// productions, one row of a nest.
struct Env<'b> {
    b: &'b Bindings,
    row: Option<(usize, &'b [Cell])>,
}

impl Env<'_> {
    fn get(&self, v: &Var) -> Cell {
        if let Some((n, row)) = self.row {
            if let Some(i) = self.b.nests[n].header.iter().position(|h| h == v) {
                return row[i];
            }
        }
        self.b.outer.get(v).copied().flatten()
    }
}

fn eval(expr: &Expr, env: &Env<'_>, delta: &Delta, store: &ColumnarStore) -> Option<String> {
    match expr {
        Expr::Str(s) => Some(s.clone()),
        Expr::Xi(v) => {
            let id = env.get(v)?;
            Some(delta.xi(store, id).join(" "))
        }
        Expr::Label(v) => {
            let id = env.get(v)?;
            match id.kind {
                ObjectKind::Node => Some(delta.ell(store, id).into_iter().next().unwrap_or_default()),
                ObjectKind::Edge => delta.edge_label(store, id),
            }
        }
        Expr::Prop(v, k) => delta.prop(store, env.get(v)?, k),
        Expr::Concat(parts) => {
            let mut out = String::new();
            for p in parts {
                out.push_str(&eval(p, env, delta, store)?);
            }
            Some(out)
        }
    }
}

fn compare(l: &str, op: CmpOp, r: &str) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        _ => match (l.trim().parse::<f64>(), r.trim().parse::<f64>()) {
            (Ok(a), Ok(b)) => match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            },
            _ => false,
        },
    }
}

/// Evaluates a rule condition over the outer bindings, reading through the
/// delta so earlier rewrites are visible.
pub fn eval_condition(cond: &Cond, b: &Bindings, delta: &Delta, store: &ColumnarStore) -> bool {
    let env = Env { b, row: None };
    eval_cond(cond, &env, delta, store)
}

fn eval_cond(cond: &Cond, env: &Env<'_>, delta: &Delta, store: &ColumnarStore) -> bool {
    match cond {
        Cond::And(a, b) => eval_cond(a, env, delta, store) && eval_cond(b, env, delta, store),
        Cond::Or(a, b) => eval_cond(a, env, delta, store) || eval_cond(b, env, delta, store),
        Cond::Not(c) => !eval_cond(c, env, delta, store),
        Cond::Bound(v) => env.get(v).is_some(),
        Cond::HasLabel(v, s) => env.get(v).is_some_and(|id| delta.ell(store, id).iter().any(|l| l == s)),
        Cond::Cmp(l, op, r) => match (eval(l, env, delta, store), eval(r, env, delta, store)) {
            (Some(a), Some(b)) => compare(&a, *op, &b),
            _ => false,
        },
    }
}

/// Runs one production against the delta.
///
/// Productions touching an unbound optional variable, or an expression that
/// reads a missing property, do nothing. Deletions are queued in
/// `b.pending_deletions`; call [`finish_instance`] to apply them.
pub fn apply_op(
    delta: &mut Delta,
    store: &ColumnarStore,
    b: &mut Bindings,
    op: &ProductionOp,
) -> Result<(), RewriteError> {
    if let OpKind::NewNode(v) = &op.kind {
        let id = delta.fresh_node();
        b.outer.insert(v.clone(), Some(id));
        return Ok(());
    }
    if let OpKind::Replace(old, new) = &op.kind {
        let (Some(o), Some(n)) = (b.outer.get(old).copied().flatten(), b.outer.get(new).copied().flatten()) else {
            return Ok(());
        };
        check_live(delta, b, old, o)?;
        if !delta.replace(o, n) {
            return Err(RewriteError::ReplacementCycle { rule: b.rule.clone(), entry: b.entry, old: o, new: n });
        }
        return Ok(());
    }

    let iterated = op.refs().into_iter().find(|r| r.each).and_then(|r| b.nest_of(&r.var));
    let rows: Vec<Option<Vec<Cell>>> = match iterated {
        Some(n) => b.nests[n].rows.iter().cloned().map(Some).collect(),
        None => vec![None],
    };
    let mut queued = Vec::new();
    for row in &rows {
        let env = Env { b, row: iterated.zip(row.as_deref()) };
        let target = |v: &Var| -> Result<Option<ObjectId>, RewriteError> {
            match env.get(v) {
                Some(id) => check_live(delta, b, v, id).map(|_| Some(id)),
                None => Ok(None),
            }
        };
        match &op.kind {
            OpKind::SetLabel(t, e) => {
                if let (Some(id), Some(val)) = (target(&t.var)?, eval(e, &env, delta, store)) {
                    delta.set_label(id, val);
                }
            }
            OpKind::AppendXi(t, e) => {
                if let (Some(id), Some(val)) = (target(&t.var)?, eval(e, &env, delta, store)) {
                    delta.append_xi(id, val);
                }
            }
            OpKind::SetProp(t, k, v) => {
                let id = target(&t.var)?;
                if let (Some(id), Some(k), Some(v)) = (id, eval(k, &env, delta, store), eval(v, &env, delta, store)) {
                    delta.set_prop(id, k, v);
                }
            }
            OpKind::NewEdge(s, l, d) => {
                let (src, dst) = (target(&s.var)?, target(&d.var)?);
                if let (Some(src), Some(dst), Some(label)) = (src, dst, eval(l, &env, delta, store)) {
                    delta.add_edge(src, dst, label);
                }
            }
            OpKind::DelNode(t) | OpKind::DelEdge(t) => {
                if let Some(id) = target(&t.var)? {
                    queued.push(id);
                }
            }
            OpKind::NewNode(_) | OpKind::Replace(..) => unreachable!(),
        }
    }
    b.pending_deletions.extend(queued);
    Ok(())
}

fn check_live(delta: &Delta, b: &Bindings, v: &Var, id: ObjectId) -> Result<(), RewriteError> {
    if delta.deleted.contains(&id) {
        Err(RewriteError::DeletedBinding { rule: b.rule.clone(), entry: b.entry, var: v.0.clone() })
    } else {
        Ok(())
    }
}

/// Applies the instance's queued deletions; returns what was deleted.
pub fn finish_instance(delta: &mut Delta, b: &mut Bindings) -> Vec<ObjectId> {
    let mut done = Vec::new();
    for id in b.pending_deletions.drain(..) {
        if !delta.deleted.contains(&id) {
            delta.delete(id);
            if delta.deleted.contains(&id) {
                done.push(id);
            }
        }
    }
    done
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Fired,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub rule: String,
    pub entry: ObjectId,
    /// Position of the morphism within the entry's block.
    pub morphism: usize,
    pub outcome: Outcome,
    /// Outer bindings after resolution (empty when skipped on a deleted binding).
    pub bindings: Vec<(Var, Cell)>,
    /// Objects deleted by this instance.
    pub deleted: Vec<ObjectId>,
}

/// Ordered log of every morphism considered during a rewrite pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub entries: Vec<TraceEntry>,
}

impl RewriteTrace {
    pub fn fired(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.outcome == Outcome::Fired)
    }
}

/// Line-oriented export: `rule,entry,fired|skipped,reason`.
impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let (what, why) = match &e.outcome {
                Outcome::Fired => ("fired", ""),
                Outcome::Skipped(r) => ("skipped", r.as_str()),
            };
            writeln!(f, "{},{},{},{}", e.rule, e.entry.local, what, why)?;
        }
        Ok(())
    }
}

/// Resolves a morphism through the delta. `Err` carries the skip reason.
fn bind_row(
    rule: &Rule,
    entry: ObjectId,
    row: &NestedRow,
    header: &crate::matching::NestedMorphismTable,
    delta: &Delta,
) -> Result<Bindings, String> {
    let mut b = Bindings::new(&rule.name, entry);
    for (v, cell) in header.outer_header.iter().zip(&row.outer) {
        let resolved = match cell {
            None => None,
            Some(id) => match delta.resolve(*id) {
                Resolved::Live(r) => Some(r),
                Resolved::Deleted => return Err(format!("deleted {v}")),
            },
        };
        b.outer.insert(v.clone(), resolved);
    }
    let required_aggs: BTreeSet<&Var> = rule.pattern.required().filter(|a| a.aggregated).map(|a| &a.dst).collect();
    for (nh, rows) in header.nest_headers.iter().zip(&row.nests) {
        let mut live = Vec::with_capacity(rows.len());
        'rows: for r in rows {
            let mut out = Vec::with_capacity(r.len());
            for c in r {
                match c.map(|id| delta.resolve(id)) {
                    None => out.push(None),
                    Some(Resolved::Live(id)) => out.push(Some(id)),
                    Some(Resolved::Deleted) => continue 'rows,
                }
            }
            live.push(out);
        }
        if live.is_empty() && !rows.is_empty() && required_aggs.contains(&nh.agg) {
            return Err(format!("deleted *{}", nh.agg));
        }
        b.nests.push(BoundNest { header: nh.header.clone(), rows: live });
    }
    Ok(b)
}

/// Visits the graph in reverse topological order and fires, at each entry
/// node, every rule's morphisms in rule order then morphism-table order.
pub fn rewrite_graph(
    store: &ColumnarStore,
    graph: GraphIdx,
    rules: &RuleSet,
    matches: &GraphMatches,
) -> Result<(Delta, RewriteTrace), RewriteError> {
    if let Some(r) = rules.rules.get(matches.tables.len()) {
        return Err(RewriteError::MissingTable(r.name.clone()));
    }
    let mut delta = Delta::new(graph);
    let mut trace = RewriteTrace::default();

    for &u in store.vtopo(graph).iter().rev() {
        let entry = ObjectId::node(graph, u);
        for (rule, table) in rules.rules.iter().zip(&matches.tables) {
            for (mi, row) in table.block(entry).iter().enumerate() {
                let mut te = TraceEntry {
                    rule: rule.name.clone(),
                    entry,
                    morphism: mi,
                    outcome: Outcome::Fired,
                    bindings: Vec::new(),
                    deleted: Vec::new(),
                };
                let mut b = match bind_row(rule, entry, row, &table.table, &delta) {
                    Ok(b) => b,
                    Err(reason) => {
                        te.outcome = Outcome::Skipped(reason);
                        trace.entries.push(te);
                        continue;
                    }
                };
                te.bindings = b.outer.iter().map(|(v, c)| (v.clone(), *c)).collect();
                if let Some(cond) = &rule.condition {
                    if !eval_condition(cond, &b, &delta, store) {
                        te.outcome = Outcome::Skipped("condition".to_string());
                        trace.entries.push(te);
                        continue;
                    }
                }
                for op in &rule.ops {
                    apply_op(&mut delta, store, &mut b, op)?;
                }
                te.deleted = finish_instance(&mut delta, &mut b);
                trace.entries.push(te);
            }
        }
    }
    Ok((delta, trace))
}

/// Canonical text form of a delta, for determinism checks.
pub fn dump_delta(delta: &Delta) -> String {
    let mut s = String::new();
    for (id, r) in &delta.new_nodes {
        let _ = writeln!(s, "new {id} ell={:?} xi={:?} pi={:?}", r.ell, r.xi, r.pi);
    }
    for (id, u) in &delta.updates {
        let _ = writeln!(s, "upd {id} ell={:?} xi+={:?} pi={:?}", u.ell, u.xi_appended, u.pi);
    }
    for e in &delta.new_edges {
        let _ = writeln!(s, "edge {} {} -[{}]-> {}", e.id, e.src, e.label, e.dst);
    }
    for id in &delta.deleted {
        let _ = writeln!(s, "del {id}");
    }
    for (a, b) in &delta.re {
        let _ = writeln!(s, "re {a} -> {b}");
    }
    s
}
