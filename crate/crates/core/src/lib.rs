//! Graph-grammar matching and rewriting over collections of small DAGs.
//!
//! Graphs are loaded into a columnar store ([`store`]), rules ([`rules`]) are
//! matched relationally into nested morphism tables ([`matching`]), fired in
//! reverse topological order into an incremental view ([`rewrite`]), and the
//! view is merged back into output graphs ([`materialize`]).

pub mod conllu;
pub mod error;
pub mod matching;
pub mod materialize;
pub mod model;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod pipeline;
pub mod rewrite;
pub mod rules;
pub mod store;

pub use error::{Error, Result};
pub use matching::MatchMode;
pub use model::{GsmGraph, ObjectId, ObjectKind};
pub use rules::{parse_rules, RuleSet};
pub use store::ColumnarStore;
