//! Inputs shared by the phase benchmarks.

use gsql_core::conllu::from_conllu;
use gsql_core::rules::{parse_rules, RuleSet};
use gsql_core::store::{index_collection, ColumnarStore};

pub const SIMPLE: &str = include_str!("../../../fixtures/alice_bob.conllu");
pub const COMPLEX: &str = include_str!("../../../fixtures/matt_tray.conllu");
pub const RULES: &str = include_str!("../../../rules/fig1.gqr");

pub fn rules() -> RuleSet {
    parse_rules(RULES).expect("shipped rules are valid")
}

pub fn store(conllu: &str) -> ColumnarStore {
    index_collection(from_conllu(conllu).expect("fixture parses")).expect("fixture indexes")
}
