use proptest::prelude::*;

use gsql_core::matching::{evaluate_pattern, nest, MatchMode, PatternCache};
use gsql_core::model::{parse_graph_collection, serialize_collection, GsmGraph, ObjectId};
use gsql_core::oracle::enumerate_morphisms_bruteforce;
use gsql_core::rewrite::{Delta, Resolved};
use gsql_core::rules::{parse_rules, Pattern};
use gsql_core::store::index_collection;

const LABELS: [&str; 3] = ["A", "B", "C"];

/// Random DAG: edges go forward in a random permutation of the nodes.
fn dag(id: u32) -> impl Strategy<Value = GsmGraph> {
    (1..=8usize)
        .prop_flat_map(|n| {
            (
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::vec((0..n, 0..n, 0..3usize), 0..=12),
                proptest::collection::vec(0..2usize, n),
            )
        })
        .prop_map(move |(perm, edges, kinds)| {
            let mut g = GsmGraph::new(id);
            for (i, k) in kinds.iter().enumerate() {
                let name = i.to_string();
                g.add_node(&[["v", "w"][*k]], &[&name]);
                g.nodes[i].pi.insert("k".into(), k.to_string());
            }
            for (a, b, l) in edges {
                if a != b {
                    let (i, j) = (a.min(b), a.max(b));
                    g.add_edge(perm[i] as u32, perm[j] as u32, LABELS[l]);
                }
            }
            g
        })
}

fn patterns() -> Vec<Pattern> {
    let text = r#"
        rule p1 { (X)-[e:"A"]->(Y) entry X rewrite }
        rule p2 { (X)-["A"]->(Y) (Y)-[f:"B"]->(Z) entry X rewrite }
        rule p3 { (X)-["A"||"B"]->(Y) optional (Y)-[g:"C"]->(Z) entry X rewrite }
        rule p4 { (X)-["A"]->(Y) (X)-["B"]->(Z) optional (Z)-["C"]->(W) optional (W)-["A"]->(V) entry X rewrite }
        rule p5 { (X)-[e:"A"]->(Y) (Y)-["B"||"C"]->(Z) (X)-[f:"C"]->(Z) optional (X)-["B"]->(W) entry X rewrite }
        rule p6 { (X)-["A"]->(*H) (H)-["B"]->(Y) entry X rewrite }
        rule p7 { (X)-["A"]->(Y) optional (Y)-[h:"B"]->(*H) entry X rewrite }
        rule p8 { (X)-["A"||"C"]->(*H) optional (H)-["C"]->(W) entry X rewrite }
    "#;
    parse_rules(text).unwrap().rules.into_iter().map(|r| r.pattern).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn collection_round_trip(gs in proptest::collection::vec(dag(0), 0..4)) {
        let gs: Vec<GsmGraph> = gs.into_iter().enumerate().map(|(i, mut g)| { g.id = i as u32; g }).collect();
        let text = serialize_collection(&gs);
        let back = parse_graph_collection(&text).unwrap();
        prop_assert_eq!(&back, &gs);
        prop_assert_eq!(serialize_collection(&back), text);
    }

    #[test]
    fn indexed_scan_equals_full_scan(g in dag(0)) {
        let store = index_collection(vec![g.clone()]).unwrap();
        for l in LABELS {
            let mut via_index: Vec<(u32, u32, u32)> =
                store.scan_edges(0, l, None).iter().map(|r| (r.src, r.edge, r.dst)).collect();
            let mut full: Vec<(u32, u32, u32)> =
                g.edges.iter().filter(|e| e.label == l).map(|e| (e.src, e.id, e.dst)).collect();
            via_index.sort();
            full.sort();
            prop_assert_eq!(&via_index, &full);
            for src_label in ["v", "w"] {
                let n = store.scan_edges(0, l, Some(src_label)).len();
                let want = full.iter().filter(|(s, _, _)| g.nodes[*s as usize].ell[0] == src_label).count();
                prop_assert_eq!(n, want);
            }
        }
    }

    #[test]
    fn matcher_agrees_with_oracle(g in dag(0)) {
        let store = index_collection(vec![g.clone()]).unwrap();
        for p in patterns() {
            for mode in [MatchMode::Homomorphic, MatchMode::Isomorphic] {
                let mut cache = PatternCache::new(&store, 0);
                let got = evaluate_pattern(&mut cache, &p, mode);
                let want = enumerate_morphisms_bruteforce(&g, &p, mode).unwrap();
                prop_assert_eq!(got.row_set(), want.row_set(), "{:?} {:?}", p.atoms, mode);
            }
        }
    }

    #[test]
    fn isomorphic_oracle_is_a_subset(g in dag(0)) {
        // Only without optional atoms: an isomorphic run may pad with NULL
        // where the homomorphic run found an extension.
        for p in patterns().into_iter().filter(|p| p.optional().next().is_none()) {
            let homo = enumerate_morphisms_bruteforce(&g, &p, MatchMode::Homomorphic).unwrap().row_set();
            let iso = enumerate_morphisms_bruteforce(&g, &p, MatchMode::Isomorphic).unwrap().row_set();
            prop_assert!(iso.is_subset(&homo));
        }
    }

    #[test]
    fn flatten_inverts_nest(g in dag(0)) {
        let store = index_collection(vec![g]).unwrap();
        for p in patterns() {
            let mut cache = PatternCache::new(&store, 0);
            let flat = evaluate_pattern(&mut cache, &p, MatchMode::Homomorphic);
            let back = nest(&flat, &p).flatten();
            prop_assert_eq!(back.row_set(), flat.row_set());
        }
    }

    #[test]
    fn delta_invariants(ops in proptest::collection::vec((0..4u8, 0..6u32, 0..6u32), 0..40)) {
        let mut d = Delta::new(0);
        let mut fresh: Vec<ObjectId> = Vec::new();
        let obj = |i: u32, fresh: &[ObjectId]| {
            if (i as usize) < fresh.len() && i % 2 == 1 { fresh[i as usize] } else { ObjectId::node(0, i) }
        };
        for (kind, a, b) in ops {
            match kind {
                0 => fresh.push(d.fresh_node()),
                1 => d.delete(obj(a, &fresh)),
                2 => {
                    if let Some(&h) = fresh.get(b as usize % fresh.len().max(1)) {
                        let old = obj(a, &fresh);
                        if d.replace(old, h) {
                            prop_assert_eq!(d.resolve(old), d.resolve(h));
                        }
                    }
                }
                _ => {
                    let old = obj(a, &fresh);
                    let before = d.resolve(old);
                    let h = d.fresh_node();
                    fresh.push(h);
                    d.delete(old);
                    prop_assert!(d.replace(old, h));
                    // a replaced object resolves to its replacement, deleted or not
                    prop_assert_eq!(d.resolve(old), Resolved::Live(h));
                    prop_assert!(before == Resolved::Deleted || before != Resolved::Live(h));
                }
            }
            for x in (0..6).map(|i| ObjectId::node(0, i)).chain(fresh.iter().copied()) {
                if let Resolved::Live(y) = d.resolve(x) {
                    prop_assert_eq!(d.resolve(y), Resolved::Live(y));
                    prop_assert!(!d.re.contains_key(&y));
                }
            }
            for target in d.re.values() {
                prop_assert!(!d.deleted.contains(target));
            }
        }
    }
}

#[test]
fn generated_rules_round_trip() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(300));
    let strat = (
        1..=4usize,
        0..=2usize,
        proptest::collection::vec((0..5usize, 1..8u8, any::<bool>()), 4),
        proptest::option::of(0..4usize),
        0..4usize,
    );
    let accepted = std::sync::atomic::AtomicUsize::new(0);
    runner
        .run(&strat, |(required, optional, atoms, agg, cond)| {
            let total = (required + optional).min(4);
            let mut text = String::from("rule g {\n");
            for (t, &(src, labels, named)) in atoms.iter().take(total).enumerate() {
                let src = src % (t + 1);
                let ls: Vec<String> =
                    (0..3).filter(|b| labels & (1 << b) != 0).map(|b| format!("\"{}\"", LABELS[b])).collect();
                let opt = if t >= required { "optional " } else { "" };
                let star = if agg == Some(t) && t > 0 { "*" } else { "" };
                let edge = if named { format!("e{t}:") } else { String::new() };
                text += &format!("  {opt}(V{src})-[{edge}{}]->({star}V{})\n", ls.join("||"), t + 1);
            }
            match cond {
                1 => text += "  where bound(V0)\n",
                2 => text += "  where prop(V0, \"k\") >= \"2\" or not (ell(V0) contains \"A\")\n",
                3 => text += "  where xi(V0) ++ \"x\" != label(V0)\n",
                _ => {}
            }
            text += "  entry V0\n  rewrite\n    new N\n    edge (N)-[\"n\" ++ xi(V0)]->(V0)\n    prop V0[\"k\"] = \"1\"\n    replace V0 with N\n}\n";
            let Ok(rs) = parse_rules(&text) else {
                // Generated shapes the validator rejects (e.g. an aggregation
                // above the only required atoms) are not interesting here.
                return Ok(());
            };
            accepted.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let printed = rs.to_string();
            let again = parse_rules(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
            prop_assert_eq!(&again, &rs);
            prop_assert_eq!(again.to_string(), printed);
            Ok(())
        })
        .unwrap();
    assert!(accepted.into_inner() > 100);
}

#[test]
fn shipped_rules_round_trip() {
    let text = std::fs::read_to_string(format!("{}/../../rules/fig1.gqr", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let rs = parse_rules(&text).unwrap();
    assert_eq!(parse_rules(&rs.to_string()).unwrap(), rs);
}
