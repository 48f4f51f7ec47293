use gsql_core::conllu::from_conllu;
use gsql_core::matching::{build_index, evaluate_pattern, match_graph, nest, MatchMode, PatternCache};
use gsql_core::materialize::materialise;
use gsql_core::model::{parse_graph_collection, serialize_collection, validate_acyclic, GsmGraph, ObjectId};
use gsql_core::pipeline::{run_all, run_graph};
use gsql_core::rewrite::{rewrite_graph, Outcome};
use gsql_core::rules::{parse_rules, RuleSet};
use gsql_core::store::{index_collection, ColumnarStore};

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn fig1() -> RuleSet {
    let path = format!("{}/../../rules/fig1.gqr", env!("CARGO_MANIFEST_DIR"));
    parse_rules(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn conllu_store(name: &str) -> ColumnarStore {
    index_collection(from_conllu(&fixture(name)).unwrap()).unwrap()
}

fn find(g: &GsmGraph, form: &str) -> u32 {
    g.nodes.iter().find(|n| n.xi == [form]).unwrap_or_else(|| panic!("no node {form}")).id
}

#[test]
fn fig2a_matches_its_conllu_source() {
    let gsm = parse_graph_collection(&fixture("fig2a.gsm")).unwrap();
    let conllu = from_conllu(&fixture("alice_bob.conllu")).unwrap();
    assert_eq!(gsm, conllu);
    let g = &gsm[0];
    assert_eq!((g.nodes.len(), g.edges.len()), (5, 4));
    assert_eq!(g.root, Some(find(g, "play")));
    assert_eq!(serialize_collection(&gsm), fixture("fig2a.gsm"));
}

#[test]
fn fig2a_tables() {
    let store = conllu_store("alice_bob.conllu");
    assert_eq!(store.activity().rows().len(), 5);
    assert_eq!(store.phi_labels().count(), 4);
    assert_eq!(store.scan_edges(0, "nsubj", None).len(), 1);
}

#[test]
fn complex_sentence_shape() {
    let gs = from_conllu(&fixture("matt_tray.conllu")).unwrap();
    let g = &gs[0];
    assert_eq!(g.nodes.len(), 25);
    assert_eq!(g.edges.len(), 24);
    assert!(validate_acyclic(g).is_ok());
    let store = index_collection(gs).unwrap();
    assert_eq!(store.scan_edges(0, "conj", None).len(), 5);
}

#[test]
fn fig3_single_atom_morphisms() {
    let store = index_collection(parse_graph_collection(&fixture("fig3.gsm")).unwrap()).unwrap();
    let rs = parse_rules(r#"rule m { (a)-[b:"e"]->(c) entry a rewrite }"#).unwrap();
    let mut cache = PatternCache::new(&store, 0);
    let t = evaluate_pattern(&mut cache, &rs.rules[0].pattern, MatchMode::Homomorphic);
    let roman = ["i", "ii", "iii", "iv", "v", "vi"];
    let xi = |c: Option<ObjectId>| store.xi(0, c.unwrap().local)[0].clone();
    let (a, b, c) = (t.col(&"a".into()).unwrap(), t.col(&"b".into()).unwrap(), t.col(&"c".into()).unwrap());
    let mut got: Vec<(String, &str, String)> =
        t.rows.iter().map(|r| (xi(r[a]), roman[r[b].unwrap().local as usize], xi(r[c]))).collect();
    got.sort();
    let want =
        [("1", "i", "2"), ("1", "ii", "3"), ("1", "vi", "5"), ("2", "iii", "3"), ("2", "iv", "4"), ("3", "v", "4")];
    let want: Vec<(String, &str, String)> = want.iter().map(|(s, e, d)| (s.to_string(), *e, d.to_string())).collect();
    assert_eq!(got, want);
}

#[test]
fn subject_object_join() {
    let store = conllu_store("alice_bob.conllu");
    let rs = parse_rules(r#"rule j { (V)-["nsubj"]->(S) (V)-["obj"]->(O) entry V rewrite }"#).unwrap();
    let mut cache = PatternCache::new(&store, 0);
    let t = evaluate_pattern(&mut cache, &rs.rules[0].pattern, MatchMode::Homomorphic);
    assert_eq!(t.len(), 1);
    let g = store.graph(0);
    let row = &t.rows[0];
    assert_eq!(row[t.col(&"V".into()).unwrap()].unwrap().local, find(g, "play"));
    assert_eq!(row[t.col(&"S".into()).unwrap()].unwrap().local, find(g, "Alice"));
    assert_eq!(row[t.col(&"O".into()).unwrap()].unwrap().local, find(g, "cricket"));
}

#[test]
fn intransitive_leaves_object_null() {
    let store = conllu_store("intransitive.conllu");
    let rs = fig1();
    let binverb = rs.get("binverb").unwrap();
    let mut cache = PatternCache::new(&store, 0);
    let t = evaluate_pattern(&mut cache, &binverb.pattern, MatchMode::Homomorphic);
    assert_eq!(t.len(), 1);
    assert_eq!(t.rows[0][t.col(&"O".into()).unwrap()], None);
    let m = match_graph(&store, 0, &rs, MatchMode::Homomorphic);
    let (delta, trace) = rewrite_graph(&store, 0, &rs, &m).unwrap();
    assert!(delta.is_empty());
    assert_eq!(trace.entries[0].outcome, Outcome::Skipped("condition".into()));
}

#[test]
fn coordination_groups() {
    let rs = fig1();
    let coalesce = rs.get("coalesce").unwrap();

    let store = conllu_store("alice_bob.conllu");
    let mut cache = PatternCache::new(&store, 0);
    let nested = nest(&evaluate_pattern(&mut cache, &coalesce.pattern, MatchMode::Homomorphic), &coalesce.pattern);
    assert_eq!(nested.len(), 1);
    assert_eq!(nested.rows[0].nests[0].len(), 1);
    assert_eq!(nested.flatten().len(), 1);

    let store = conllu_store("matt_tray.conllu");
    let mut cache = PatternCache::new(&store, 0);
    let nested = nest(&evaluate_pattern(&mut cache, &coalesce.pattern, MatchMode::Homomorphic), &coalesce.pattern);
    // Matt+Tray, Alice+Bob+Carl, Carl+Dan, play+have
    assert_eq!(nested.len(), 4);
    let mut sizes: Vec<usize> = nested.rows.iter().map(|r| r.nests[0].len()).collect();
    sizes.sort();
    assert_eq!(sizes, vec![1, 1, 1, 2]);
}

#[test]
fn two_determiners_give_two_singleton_blocks() {
    let store = conllu_store("two_det.conllu");
    let rs = fig1();
    let inject = rs.get("inject").unwrap();
    let mut cache = PatternCache::new(&store, 0);
    let flat = evaluate_pattern(&mut cache, &inject.pattern, MatchMode::Homomorphic);
    let idx = build_index(nest(&flat, &inject.pattern), &inject.pattern.entry);
    assert_eq!(idx.index.len(), 2);
    assert!(idx.index.iter().all(|(_, r)| r.len() == 1));
}

#[test]
fn determiner_becomes_property() {
    let store = conllu_store("two_det.conllu");
    let run = run_graph(&store, 0, &fig1(), MatchMode::Homomorphic).unwrap();
    let out = index_collection(vec![run.output.graph.clone()]).unwrap();
    let dog = find(&run.output.graph, "dog");
    let cat = find(&run.output.graph, "cat");
    assert_eq!(out.get_property(0, dog, "det"), Some("the"));
    assert_eq!(out.get_property(0, cat, "det"), Some("a"));
    let chased = run.output.graph.edges.iter().find(|e| e.label == "chased").unwrap();
    assert_eq!((chased.src, chased.dst), (dog, cat));
}

#[test]
fn simple_sentence_delta() {
    let store = conllu_store("alice_bob.conllu");
    let rs = fig1();
    let m = match_graph(&store, 0, &rs, MatchMode::Homomorphic);
    let (delta, trace) = rewrite_graph(&store, 0, &rs, &m).unwrap();
    let g = store.graph(0);
    let alice = ObjectId::node(0, find(g, "Alice"));
    let play = ObjectId::node(0, find(g, "play"));

    // Hp (coalesced subject) and R (stand-in for the verb)
    assert_eq!(delta.new_nodes.len(), 2);
    let hp = *delta.new_nodes.keys().next().unwrap();
    assert_eq!(delta.re.get(&alice), Some(&hp));
    assert!(!delta.deleted.contains(&alice));
    assert!(delta.deleted.contains(&play));
    assert_eq!(delta.new_edges.iter().filter(|e| e.label == "orig").count(), 2);
    let verb_edges: Vec<_> = delta.new_edges.iter().filter(|e| e.label == "play").collect();
    assert_eq!(verb_edges.len(), 1);
    assert_eq!(verb_edges[0].src, hp);
    assert_eq!(verb_edges[0].dst, ObjectId::node(0, find(g, "cricket")));
    assert_eq!(trace.fired().count(), 2);
}

#[test]
fn simple_sentence_output() {
    let store = conllu_store("alice_bob.conllu");
    let out = run_graph(&store, 0, &fig1(), MatchMode::Homomorphic).unwrap().output.graph;
    assert_eq!(out.component_count(), 1);
    assert_eq!((out.nodes.len(), out.edges.len()), (6, 6));
    let hp = out.nodes.iter().find(|n| n.ell == ["conj"]).unwrap().id;
    let mut orig: Vec<u32> = out.edges.iter().filter(|e| e.label == "orig" && e.src == hp).map(|e| e.dst).collect();
    orig.sort();
    assert_eq!(orig, vec![find(&out, "Alice"), find(&out, "Bob")]);
    let verb = out.edges.iter().find(|e| e.label == "play").unwrap();
    assert_eq!((verb.src, verb.dst), (hp, find(&out, "cricket")));
}

#[test]
fn complex_sentence_is_one_component() {
    let store = conllu_store("matt_tray.conllu");
    let out = run_graph(&store, 0, &fig1(), MatchMode::Homomorphic).unwrap().output.graph;
    assert_eq!(out.component_count(), 1);
    assert_eq!(out.nodes.len(), 28);
    assert!(validate_acyclic(&out).is_ok());
}

#[test]
fn no_match_is_identity() {
    let store = conllu_store("no_match.conllu");
    let rs = fig1();
    let m = match_graph(&store, 0, &rs, MatchMode::Homomorphic);
    let (delta, trace) = rewrite_graph(&store, 0, &rs, &m).unwrap();
    assert!(delta.is_empty());
    assert!(trace.entries.is_empty());
    assert_eq!(&materialise(store.graph(0), &delta).unwrap().graph, store.graph(0));
}

#[test]
fn empty_ruleset_is_identity_on_all_fixtures() {
    let rs = parse_rules("# nothing\n").unwrap();
    for f in ["alice_bob.conllu", "matt_tray.conllu", "two_det.conllu"] {
        let store = conllu_store(f);
        let runs = run_all(&store, &rs, MatchMode::Homomorphic).unwrap();
        assert_eq!(&runs[0].output.graph, store.graph(0), "{f}");
    }
}

#[test]
fn shared_scans_across_rules() {
    let store = conllu_store("alice_bob.conllu");
    let rs = parse_rules(
        r#"rule a { (V)-["nsubj"]->(S) entry V rewrite }
           rule b { (V)-["nsubj"]->(S) (V)-["obj"]->(O) entry V rewrite }"#,
    )
    .unwrap();
    let m = match_graph(&store, 0, &rs, MatchMode::Homomorphic);
    assert_eq!(m.scan_counts[&vec!["nsubj".to_string()]], 1);
}
