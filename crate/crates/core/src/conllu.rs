//! CoNLL-U dependency parses as graphs.
//!
//! Each token becomes a node labelled and valued with its FORM and carrying
//! `upos`, `lemma` and `idx` properties; each dependency becomes an edge from
//! the head to the dependent labelled with the relation. Multiword ranges
//! (`1-2`) and empty nodes (`1.1`) are skipped.

use crate::error::ConlluError;
use crate::model::{validate_acyclic, GsmGraph};

struct Token {
    line: usize,
    form: String,
    lemma: String,
    upos: String,
    head: usize,
    deprel: String,
}

/// Reads every sentence of a CoNLL-U document; graph ids follow sentence order.
pub fn from_conllu(text: &str) -> Result<Vec<GsmGraph>, ConlluError> {
    let mut graphs = Vec::new();
    let mut sentence: Vec<Token> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim_end_matches('\r');
        if l.trim().is_empty() {
            if !sentence.is_empty() {
                graphs.push(build(graphs.len(), std::mem::take(&mut sentence))?);
            }
            continue;
        }
        if l.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Columns { line, found: cols.len() });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize =
            cols[0].parse().map_err(|_| ConlluError::Field { line, field: "ID", value: cols[0].to_string() })?;
        if id != sentence.len() + 1 {
            return Err(ConlluError::Field { line, field: "ID", value: cols[0].to_string() });
        }
        let head: usize =
            cols[6].parse().map_err(|_| ConlluError::Field { line, field: "HEAD", value: cols[6].to_string() })?;
        sentence.push(Token {
            line,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !sentence.is_empty() {
        graphs.push(build(graphs.len(), sentence)?);
    }
    Ok(graphs)
}

fn build(index: usize, tokens: Vec<Token>) -> Result<GsmGraph, ConlluError> {
    let mut g = GsmGraph::new(index as u32);
    for (i, t) in tokens.iter().enumerate() {
        let n = g.add_node(&[&t.form], &[&t.form]);
        let pi = &mut g.nodes[n as usize].pi;
        pi.insert("upos".into(), t.upos.clone());
        pi.insert("lemma".into(), t.lemma.clone());
        pi.insert("idx".into(), (i + 1).to_string());
    }
    for (i, t) in tokens.iter().enumerate() {
        if t.head > tokens.len() {
            return Err(ConlluError::HeadOutOfRange { line: t.line, head: t.head, len: tokens.len() });
        }
        if t.head == 0 {
            g.root.get_or_insert(i as u32);
        } else {
            g.add_edge(t.head as u32 - 1, i as u32, &t.deprel);
        }
    }
    validate_acyclic(&g).map_err(|witness| ConlluError::Cycle { sentence: index, witness })?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENT: &str = "# text = Bob plays\n\
1\tBob\tBob\tPROPN\t_\t_\t2\tnsubj\t_\t_\n\
2\tplays\tplay\tVERB\t_\t_\t0\troot\t_\t_\n\
\n";

    #[test]
    fn tokens_and_dependencies() {
        let gs = from_conllu(SENT).unwrap();
        assert_eq!(gs.len(), 1);
        let g = &gs[0];
        assert_eq!(g.root, Some(1));
        assert_eq!(g.nodes[0].ell, vec!["Bob".to_string()]);
        assert_eq!(g.nodes[1].pi["lemma"], "play");
        assert_eq!(g.nodes[1].pi["idx"], "2");
        assert_eq!((g.edges[0].src, g.edges[0].dst, g.edges[0].label.as_str()), (1, 0, "nsubj"));
    }

    #[test]
    fn multiword_ranges_are_skipped() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\tde\tADP\t_\t_\t0\troot\t_\t_\n2\tel\tel\tDET\t_\t_\t1\tdet\t_\t_\n";
        let gs = from_conllu(text).unwrap();
        assert_eq!(gs[0].nodes.len(), 2);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(from_conllu("1\tBob\n"), Err(ConlluError::Columns { line: 1, found: 2 })));
        let bad_head = "1\ta\ta\tX\t_\t_\t5\tdep\t_\t_\n";
        assert!(matches!(from_conllu(bad_head), Err(ConlluError::HeadOutOfRange { head: 5, .. })));
        let cyc = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(matches!(from_conllu(cyc), Err(ConlluError::Cycle { .. })));
        let nan = "1\ta\ta\tX\t_\t_\tx\tdep\t_\t_\n";
        assert!(matches!(from_conllu(nan), Err(ConlluError::Field { field: "HEAD", .. })));
    }
}
