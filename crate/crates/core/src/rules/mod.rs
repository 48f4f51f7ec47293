//! Graph-grammar rules: a match pattern, an optional condition and an
//! ordered list of production operations.
//!
//! ```text
//! rule binverb {
//!   (V)-[s:"nsubj"]->(S)
//!   optional (V)-[o:"obj"||"dobj"]->(O)
//!   where bound(O)
//!   entry V
//!   rewrite
//!     edge (S)-[xi(V)]->(O)
//!     del node V
//! }
//! ```
//!
//! `*H` marks an aggregated destination: all bindings of `H` (and of the
//! pattern variables reachable from it) that share the remaining bindings are
//! packed into one nested table. Productions iterate such nests with `H each`.

mod parser;
mod validate;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

pub use parser::{parse_rules, parse_rules_unvalidated};
pub use validate::validate_ruleset;

/// Source location. Positions never take part in structural equality, so a
/// parsed rule compares equal to the same rule parsed from a reformatted
/// source.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(name.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Var {
    fn from(name: &str) -> Self {
        Var::new(name)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeAtom {
    pub src: Var,
    pub edge: Option<Var>,
    /// Disjunction of accepted edge labels; never empty.
    pub labels: Vec<String>,
    pub dst: Var,
    pub optional: bool,
    pub aggregated: bool,
    pub pos: Pos,
}

/// Variables packed into the nested table of one aggregated variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nest {
    pub agg: Var,
    pub nodes: Vec<Var>,
    pub edges: Vec<Var>,
}

impl Nest {
    pub fn contains(&self, v: &Var) -> bool {
        self.nodes.contains(v) || self.edges.contains(v)
    }

    /// Nested header: node variables then edge variables, each in pattern order.
    pub fn header(&self) -> Vec<Var> {
        self.nodes.iter().chain(self.edges.iter()).cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub atoms: Vec<EdgeAtom>,
    pub entry: Var,
    pub entry_pos: Pos,
}

impl Pattern {
    pub fn required(&self) -> impl Iterator<Item = &EdgeAtom> {
        self.atoms.iter().filter(|a| !a.optional)
    }

    pub fn optional(&self) -> impl Iterator<Item = &EdgeAtom> {
        self.atoms.iter().filter(|a| a.optional)
    }

    /// Node variables in order of first appearance.
    pub fn node_vars(&self) -> Vec<Var> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in &self.atoms {
            for v in [&a.src, &a.dst] {
                if seen.insert(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn edge_vars(&self) -> Vec<Var> {
        self.atoms.iter().filter_map(|a| a.edge.clone()).collect()
    }

    /// All variables: node variables first, then edge variables.
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.node_vars();
        v.extend(self.edge_vars());
        v
    }

    pub fn is_node_var(&self, v: &Var) -> bool {
        self.atoms.iter().any(|a| &a.src == v || &a.dst == v)
    }

    pub fn is_edge_var(&self, v: &Var) -> bool {
        self.atoms.iter().any(|a| a.edge.as_ref() == Some(v))
    }

    /// Node variables reachable from `from` along pattern atoms, `from` included.
    pub fn reachable(&self, from: &Var) -> BTreeSet<Var> {
        let mut seen = BTreeSet::from([from.clone()]);
        let mut frontier = vec![from.clone()];
        while let Some(v) = frontier.pop() {
            for a in &self.atoms {
                if a.src == v && seen.insert(a.dst.clone()) {
                    frontier.push(a.dst.clone());
                }
            }
        }
        seen
    }

    /// One nest per aggregated variable, in atom order.
    ///
    /// A nest holds the node variables reachable from the aggregated variable
    /// and the edge variables of every atom whose destination is one of them.
    pub fn nests(&self) -> Vec<Nest> {
        let order = self.node_vars();
        self.atoms
            .iter()
            .filter(|a| a.aggregated)
            .map(|a| {
                let reach = self.reachable(&a.dst);
                Nest {
                    agg: a.dst.clone(),
                    nodes: order.iter().filter(|v| reach.contains(*v)).cloned().collect(),
                    edges: self
                        .atoms
                        .iter()
                        .filter(|b| reach.contains(&b.dst))
                        .filter_map(|b| b.edge.clone())
                        .collect(),
                }
            })
            .collect()
    }

    /// Variables outside every nest, node variables first.
    pub fn outer_vars(&self) -> Vec<Var> {
        let nests = self.nests();
        self.vars().into_iter().filter(|v| !nests.iter().any(|n| n.contains(v))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Str(String),
    /// Values of a node, joined by single spaces.
    Xi(Var),
    /// Primary label of a node, or the label of an edge.
    Label(Var),
    Prop(Var, String),
    Concat(Vec<Expr>),
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Str(_) => {}
            Expr::Xi(v) | Expr::Label(v) | Expr::Prop(v, _) => out.push(v.clone()),
            Expr::Concat(parts) => parts.iter().for_each(|p| p.vars(out)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Rule condition. Comparisons involving an unbound variable or a missing
/// property are false; `bound` is the explicit test for optional bindings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Bound(Var),
    /// `ell(X) contains "s"`
    HasLabel(Var, String),
    Cmp(Expr, CmpOp, Expr),
}

impl Cond {
    pub fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Cond::Not(c) => c.vars(out),
            Cond::Bound(v) | Cond::HasLabel(v, _) => out.push(v.clone()),
            Cond::Cmp(l, _, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }
}

/// A variable reference in a production; `each` iterates the nested rows of
/// the variable's aggregation group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarRef {
    pub var: Var,
    pub each: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpKind {
    NewNode(Var),
    SetLabel(VarRef, Expr),
    AppendXi(VarRef, Expr),
    SetProp(VarRef, Expr, Expr),
    NewEdge(VarRef, Expr, VarRef),
    DelNode(VarRef),
    DelEdge(VarRef),
    Replace(Var, Var),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductionOp {
    pub kind: OpKind,
    pub pos: Pos,
}

impl ProductionOp {
    /// Variable references in the op, with their `each` flag.
    pub fn refs(&self) -> Vec<VarRef> {
        let plain = |v: &Var| VarRef { var: v.clone(), each: false };
        let mut exprs: Vec<&Expr> = Vec::new();
        let mut out = match &self.kind {
            OpKind::NewNode(_) => Vec::new(),
            OpKind::SetLabel(t, e) | OpKind::AppendXi(t, e) => {
                exprs.push(e);
                vec![t.clone()]
            }
            OpKind::SetProp(t, k, v) => {
                exprs.extend([k, v]);
                vec![t.clone()]
            }
            OpKind::NewEdge(s, l, d) => {
                exprs.push(l);
                vec![s.clone(), d.clone()]
            }
            OpKind::DelNode(t) | OpKind::DelEdge(t) => vec![t.clone()],
            OpKind::Replace(old, new) => vec![plain(old), plain(new)],
        };
        let mut vs = Vec::new();
        exprs.iter().for_each(|e| e.vars(&mut vs));
        out.extend(vs.iter().map(plain));
        out
    }

    pub fn is_deletion(&self) -> bool {
        matches!(self.kind, OpKind::DelNode(_) | OpKind::DelEdge(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    /// Require pairwise-distinct bindings (isomorphic matching).
    pub distinct: bool,
    pub pattern: Pattern,
    pub condition: Option<Cond>,
    pub ops: Vec<ProductionOp>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub rule: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Some(r) => write!(f, "{}: rule `{}`: {}", self.pos, r, self.message),
            None => write!(f, "{}: {}", self.pos, self.message),
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty printing; the output parses back to an equal rule set.
// ---------------------------------------------------------------------------

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Str(s) => f.write_str(&quote(s)),
            Expr::Xi(v) => write!(f, "xi({v})"),
            Expr::Label(v) => write!(f, "label({v})"),
            Expr::Prop(v, k) => write!(f, "prop({v}, {})", quote(k)),
            Expr::Concat(parts) => {
                let ps: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                f.write_str(&ps.join(" ++ "))
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::And(a, b) => write!(f, "({a} and {b})"),
            Cond::Or(a, b) => write!(f, "({a} or {b})"),
            Cond::Not(c) => write!(f, "not {c}"),
            Cond::Bound(v) => write!(f, "bound({v})"),
            Cond::HasLabel(v, s) => write!(f, "ell({v}) contains {}", quote(s)),
            Cond::Cmp(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.each {
            write!(f, "{} each", self.var)
        } else {
            write!(f, "{}", self.var)
        }
    }
}

impl fmt::Display for ProductionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            OpKind::NewNode(v) => write!(f, "new {v}"),
            OpKind::SetLabel(t, e) => write!(f, "label {t} = {e}"),
            OpKind::AppendXi(t, e) => write!(f, "value {t} += {e}"),
            OpKind::SetProp(t, k, v) => write!(f, "prop {t}[{k}] = {v}"),
            OpKind::NewEdge(s, l, d) => write!(f, "edge ({s})-[{l}]->({d})"),
            OpKind::DelNode(t) => write!(f, "del node {t}"),
            OpKind::DelEdge(t) => write!(f, "del edge {t}"),
            OpKind::Replace(o, n) => write!(f, "replace {o} with {n}"),
        }
    }
}

impl fmt::Display for EdgeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.optional {
            f.write_str("optional ")?;
        }
        write!(f, "({})-[", self.src)?;
        if let Some(e) = &self.edge {
            write!(f, "{e}:")?;
        }
        let labels: Vec<String> = self.labels.iter().map(|l| quote(l)).collect();
        write!(f, "{}]->({}{})", labels.join("||"), if self.aggregated { "*" } else { "" }, self.dst)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {}{} {{", self.name, if self.distinct { " distinct" } else { "" })?;
        for a in &self.pattern.atoms {
            writeln!(f, "  {a}")?;
        }
        if let Some(c) = &self.condition {
            writeln!(f, "  where {c}")?;
        }
        writeln!(f, "  entry {}", self.pattern.entry)?;
        writeln!(f, "  rewrite")?;
        for op in &self.ops {
            writeln!(f, "    {op}")?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}
