use std::collections::{BTreeSet, HashMap, HashSet};

use super::*;

struct Check<'a> {
    rule: &'a Rule,
    out: Vec<Diagnostic>,
}

impl Check<'_> {
    fn report(&mut self, pos: Pos, message: impl Into<String>) {
        self.out.push(Diagnostic { pos, rule: Some(self.rule.name.clone()), message: message.into() });
    }
}

/// Checks pattern, condition and production invariants of every rule and
/// returns all violations found.
pub fn validate_ruleset(rs: &RuleSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names: HashMap<&str, Pos> = HashMap::new();
    for r in &rs.rules {
        if let Some(first) = names.get(r.name.as_str()) {
            out.push(Diagnostic {
                pos: r.pos,
                rule: Some(r.name.clone()),
                message: format!("duplicate rule name (first defined at {first})"),
            });
        } else {
            names.insert(&r.name, r.pos);
        }
        let mut c = Check { rule: r, out: Vec::new() };
        check_pattern(&mut c);
        check_condition(&mut c);
        check_ops(&mut c);
        out.extend(c.out);
    }
    out
}

fn check_pattern(c: &mut Check<'_>) {
    let p = &c.rule.pattern;
    let node_vars: HashSet<&Var> = p.atoms.iter().flat_map(|a| [&a.src, &a.dst]).collect();

    let mut edge_seen: HashSet<&Var> = HashSet::new();
    for a in &p.atoms {
        if a.labels.is_empty() {
            c.report(a.pos, "edge atom needs at least one label");
        }
        if let Some(e) = &a.edge {
            if node_vars.contains(e) {
                c.report(a.pos, format!("`{e}` is used both as a node and as an edge variable"));
            }
            if !edge_seen.insert(e) {
                c.report(a.pos, format!("edge variable `{e}` is bound by more than one atom"));
            }
        }
    }

    // Entry point.
    let entry_required = p.required().any(|a| a.src == p.entry || a.dst == p.entry);
    if !entry_required && node_vars.contains(&p.entry) {
        c.report(p.entry_pos, format!("entry variable `{}` only occurs in optional atoms", p.entry));
    } else if !entry_required {
        c.report(p.entry_pos, format!("unknown variable `{}`", p.entry));
    }

    // Required atoms must form one connected pattern.
    let required: Vec<&EdgeAtom> = p.required().collect();
    if required.is_empty() {
        c.report(c.rule.pos, "pattern needs at least one required atom");
    } else {
        let mut reached: HashSet<&Var> = HashSet::from([&required[0].src]);
        loop {
            let before = reached.len();
            for a in &required {
                if reached.contains(&a.src) || reached.contains(&a.dst) {
                    reached.insert(&a.src);
                    reached.insert(&a.dst);
                }
            }
            if reached.len() == before {
                break;
            }
        }
        if let Some(a) = required.iter().find(|a| !reached.contains(&a.src)) {
            c.report(a.pos, "required atoms do not form a connected pattern");
        }
    }

    // Optional atoms extend what is already bound.
    let mut bound: HashSet<&Var> = required.iter().flat_map(|a| [&a.src, &a.dst]).collect();
    for a in p.optional() {
        if !bound.contains(&a.src) && !bound.contains(&a.dst) {
            c.report(a.pos, "optional atom shares no variable with the atoms before it");
        }
        bound.insert(&a.src);
        bound.insert(&a.dst);
    }

    // Aggregated variables.
    for a in p.atoms.iter().filter(|a| a.aggregated) {
        let binders = p.atoms.iter().filter(|b| b.dst == a.dst).count();
        if binders > 1 {
            c.report(a.pos, format!("aggregated variable `{}` is bound by multiple atoms", a.dst));
        }
        if p.reachable(&a.dst).contains(&a.src) {
            c.report(a.pos, format!("aggregated variable `{}` reaches its own parent", a.dst));
        }
    }
    let nests = p.nests();
    for (i, n) in nests.iter().enumerate() {
        if n.nodes.contains(&p.entry) {
            c.report(p.entry_pos, format!("entry variable `{}` is nested under `*{}`", p.entry, n.agg));
        }
        for m in &nests[i + 1..] {
            if n.nodes.iter().any(|v| m.nodes.contains(v)) {
                c.report(c.rule.pos, format!("aggregations `*{}` and `*{}` overlap", n.agg, m.agg));
            }
        }
    }
}

fn check_condition(c: &mut Check<'_>) {
    let Some(cond) = &c.rule.condition else { return };
    let p = &c.rule.pattern;
    let nests = p.nests();
    let mut vars = Vec::new();
    cond.vars(&mut vars);
    let mut reported = BTreeSet::new();
    for v in vars {
        if !reported.insert(v.clone()) {
            continue;
        }
        if !p.is_node_var(&v) && !p.is_edge_var(&v) {
            c.report(p.entry_pos, format!("condition refers to unknown variable `{v}`"));
        } else if nests.iter().any(|n| n.contains(&v)) {
            c.report(p.entry_pos, format!("condition refers to nested variable `{v}`"));
        }
    }
    check_cond_kinds(c, cond);
}

fn check_cond_kinds(c: &mut Check<'_>, cond: &Cond) {
    match cond {
        Cond::And(a, b) | Cond::Or(a, b) => {
            check_cond_kinds(c, a);
            check_cond_kinds(c, b);
        }
        Cond::Not(x) => check_cond_kinds(c, x),
        Cond::HasLabel(v, _) if c.rule.pattern.is_edge_var(v) => {
            let pos = c.rule.pattern.entry_pos;
            c.report(pos, format!("`ell` needs a node variable, `{v}` is an edge"));
        }
        Cond::Cmp(l, _, r) => {
            for e in [l, r] {
                let pos = c.rule.pattern.entry_pos;
                check_expr_kinds(c, e, pos, &|v| c.rule.pattern.is_edge_var(v));
            }
        }
        _ => {}
    }
}

fn check_expr_kinds(c: &mut Check<'_>, e: &Expr, pos: Pos, is_edge: &dyn Fn(&Var) -> bool) {
    match e {
        Expr::Xi(v) | Expr::Prop(v, _) if is_edge(v) => {
            c.report(pos, format!("`xi`/`prop` need a node variable, `{v}` is an edge"));
        }
        Expr::Concat(parts) => parts.iter().for_each(|p| check_expr_kinds(c, p, pos, is_edge)),
        _ => {}
    }
}

fn check_ops(c: &mut Check<'_>) {
    let p = &c.rule.pattern;
    let nests = p.nests();
    let mut new_vars: Vec<Var> = Vec::new();
    let is_edge = |v: &Var| p.is_edge_var(v);

    for op in &c.rule.ops {
        let refs = op.refs();

        if let OpKind::NewNode(v) = &op.kind {
            if p.is_node_var(v) || p.is_edge_var(v) || new_vars.contains(v) {
                c.report(op.pos, format!("`new {v}` redeclares an existing variable"));
            }
        }

        let mut iterated: Option<&Nest> = None;
        for r in &refs {
            let known = p.is_node_var(&r.var) || p.is_edge_var(&r.var) || new_vars.contains(&r.var);
            if !known {
                c.report(op.pos, format!("unknown variable `{}`", r.var));
                continue;
            }
            let nest = nests.iter().find(|n| n.contains(&r.var));
            if r.each {
                match nest {
                    None => c.report(op.pos, format!("`{} each` needs an aggregated variable", r.var)),
                    Some(n) if iterated.is_some_and(|m| m.agg != n.agg) => {
                        c.report(op.pos, "a production can iterate a single aggregation only")
                    }
                    Some(n) => iterated = Some(n),
                }
            }
        }
        for r in refs.iter().filter(|r| !r.each) {
            if let Some(n) = nests.iter().find(|n| n.contains(&r.var)) {
                if iterated.map(|m| &m.agg) != Some(&n.agg) {
                    c.report(op.pos, format!("nested variable `{}` must be iterated with `{} each`", r.var, r.var));
                }
            }
        }

        // Kinds of targets.
        let need_node = |c: &mut Check<'_>, v: &Var| {
            if is_edge(v) {
                c.report(op.pos, format!("`{v}` is an edge, this production needs a node"));
            }
        };
        match &op.kind {
            OpKind::SetLabel(t, e) | OpKind::AppendXi(t, e) => {
                need_node(c, &t.var);
                check_expr_kinds(c, e, op.pos, &is_edge);
            }
            OpKind::SetProp(t, k, v) => {
                need_node(c, &t.var);
                check_expr_kinds(c, k, op.pos, &is_edge);
                check_expr_kinds(c, v, op.pos, &is_edge);
            }
            OpKind::NewEdge(s, l, d) => {
                need_node(c, &s.var);
                need_node(c, &d.var);
                check_expr_kinds(c, l, op.pos, &is_edge);
            }
            OpKind::DelNode(t) => need_node(c, &t.var),
            OpKind::DelEdge(t) => {
                if !is_edge(&t.var) && (p.is_node_var(&t.var) || new_vars.contains(&t.var)) {
                    c.report(op.pos, format!("`del edge {}` needs an edge variable", t.var));
                }
            }
            OpKind::Replace(old, new) => {
                need_node(c, old);
                if !new_vars.contains(new) {
                    c.report(op.pos, format!("replacement `{new}` must be introduced by an earlier `new`"));
                }
                if nests.iter().any(|n| n.contains(old)) {
                    c.report(op.pos, format!("cannot replace nested variable `{old}`"));
                }
            }
            OpKind::NewNode(_) => {}
        }

        if let OpKind::NewNode(v) = &op.kind {
            new_vars.push(v.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::rules::{parse_rules, parse_rules_unvalidated, validate_ruleset};

    fn diags(text: &str) -> Vec<String> {
        validate_ruleset(&parse_rules_unvalidated(text).unwrap()).iter().map(|d| d.message.clone()).collect()
    }

    #[test]
    fn entry_in_optional_only_position() {
        let d = diags(r#"rule r { (A)-["x"]->(B) optional (B)-["y"]->(C) entry C rewrite }"#);
        assert_eq!(d, vec!["entry variable `C` only occurs in optional atoms"]);
    }

    #[test]
    fn duplicate_rule_names() {
        let d = diags(
            r#"rule r { (A)-["x"]->(B) entry A rewrite }
               rule r { (A)-["x"]->(B) entry A rewrite }"#,
        );
        assert_eq!(d.len(), 1);
        assert!(d[0].starts_with("duplicate rule name"));
    }

    #[test]
    fn all_violations_are_reported() {
        let d = diags(r#"rule r { (A)-["x"]->(B) (C)-["y"]->(D) entry Q rewrite del node W label B = xi(Z) }"#);
        assert_eq!(d.len(), 4, "{d:?}");
        assert!(d.iter().any(|m| m == "unknown variable `Q`"));
        assert!(d.iter().any(|m| m.contains("connected")));
        assert!(d.iter().any(|m| m == "unknown variable `W`"));
        assert!(d.iter().any(|m| m == "unknown variable `Z`"));
    }

    #[test]
    fn aggregated_variable_with_two_binders() {
        let d = diags(r#"rule r { (A)-["x"]->(*H) (B)-["y"]->(H) (A)-["z"]->(B) entry A rewrite }"#);
        assert!(d.iter().any(|m| m == "aggregated variable `H` is bound by multiple atoms"), "{d:?}");
    }

    #[test]
    fn nested_vars_need_each() {
        let d = diags(r#"rule r { (Z)-["conj"]->(*H) entry Z rewrite new N edge (N)-["orig"]->(H) }"#);
        assert_eq!(d, vec!["nested variable `H` must be iterated with `H each`"]);
        assert!(diags(r#"rule r { (Z)-["conj"]->(*H) entry Z rewrite new N edge (N)-["orig"]->(H each) }"#).is_empty());
        let d = diags(r#"rule r { (Z)-["conj"]->(H) entry Z rewrite new N edge (N)-["o"]->(H each) }"#);
        assert_eq!(d, vec!["`H each` needs an aggregated variable"]);
    }

    #[test]
    fn replace_needs_a_fresh_node() {
        let d = diags(r#"rule r { (A)-["x"]->(B) entry A rewrite replace A with B }"#);
        assert_eq!(d, vec!["replacement `B` must be introduced by an earlier `new`"]);
        let d = diags(r#"rule r { (A)-["x"]->(B) entry A rewrite replace A with N new N }"#);
        assert_eq!(d.len(), 2, "{d:?}");
    }

    #[test]
    fn kinds_are_checked() {
        let d = diags(r#"rule r { (A)-[e:"x"]->(B) entry A rewrite del edge A del node e value A += xi(e) }"#);
        assert_eq!(d.len(), 3, "{d:?}");
    }

    #[test]
    fn optional_atom_must_connect() {
        let d = diags(r#"rule r { (A)-["x"]->(B) optional (C)-["y"]->(D) entry A rewrite }"#);
        assert_eq!(d, vec!["optional atom shares no variable with the atoms before it"]);
    }

    #[test]
    fn condition_variables_are_scoped() {
        let d = diags(r#"rule r { (A)-["x"]->(*B) where bound(B) or xi(Q) = "1" entry A rewrite }"#);
        assert_eq!(d, vec!["condition refers to nested variable `B`", "condition refers to unknown variable `Q`"]);
    }

    #[test]
    fn diagnostics_carry_positions() {
        let err = parse_rules("rule r {\n  (A)-[\"x\"]->(B)\n  entry A\n  rewrite\n    del node W\n}").unwrap_err();
        match err {
            crate::error::RuleError::Invalid(ds) => {
                assert_eq!(ds.len(), 1);
                assert_eq!((ds[0].pos.line, ds[0].pos.column), (5, 5));
                assert!(ds[0].message.contains('W'));
            }
            other => panic!("{other:?}"),
        }
    }
}
