use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use crate::model::ObjectId;
use crate::rules::Var;

/// One binding in a morphism row; `None` is the NULL of an unmatched
/// optional variable.
pub type Cell = Option<ObjectId>;

/// Relational morphism table: one column per pattern variable, one row per
/// morphism.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlatMorphismTable {
    pub header: Vec<Var>,
    pub rows: Vec<Vec<Cell>>,
}

impl FlatMorphismTable {
    pub fn new(header: Vec<Var>) -> Self {
        FlatMorphismTable { header, rows: Vec::new() }
    }

    pub fn col(&self, v: &Var) -> Option<usize> {
        self.header.iter().position(|h| h == v)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorts rows by their bindings and drops duplicates.
    pub fn canonicalize(&mut self) {
        self.rows.sort();
        self.rows.dedup();
    }

    /// Reorders (and possibly drops) columns; missing variables become NULL.
    pub fn project(&self, header: &[Var]) -> FlatMorphismTable {
        let cols: Vec<Option<usize>> = header.iter().map(|v| self.col(v)).collect();
        FlatMorphismTable {
            header: header.to_vec(),
            rows: self.rows.iter().map(|r| cols.iter().map(|c| c.and_then(|i| r[i])).collect()).collect(),
        }
    }

    /// Rows as variable-name maps, for order-independent comparison.
    pub fn row_set(&self) -> BTreeSet<BTreeMap<String, Cell>> {
        self.rows.iter().map(|r| self.header.iter().map(|v| v.0.clone()).zip(r.iter().copied()).collect()).collect()
    }
}

/// Maps each entry-point object to the contiguous block of its rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockIndex {
    blocks: BTreeMap<ObjectId, Range<usize>>,
}

impl BlockIndex {
    pub fn get(&self, entry: ObjectId) -> Option<Range<usize>> {
        self.blocks.get(&entry).cloned()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, Range<usize>)> + '_ {
        self.blocks.iter().map(|(k, r)| (*k, r.clone()))
    }

    /// Builds the index over `keys`, which must already be grouped.
    pub fn from_sorted_keys(keys: impl Iterator<Item = ObjectId>) -> Self {
        let mut blocks: BTreeMap<ObjectId, Range<usize>> = BTreeMap::new();
        for (i, k) in keys.enumerate() {
            let r = blocks.entry(k).or_insert(i..i);
            debug_assert_eq!(r.end, i, "block index keys are not grouped");
            r.end = i + 1;
        }
        BlockIndex { blocks }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedRow {
    pub outer: Vec<Cell>,
    /// One nested table per aggregation, rows unique and sorted.
    pub nests: Vec<Vec<Vec<Cell>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestHeader {
    pub agg: Var,
    pub header: Vec<Var>,
}

/// Morphism table whose bindings below aggregated variables are grouped
/// into nested tables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NestedMorphismTable {
    pub outer_header: Vec<Var>,
    pub nest_headers: Vec<NestHeader>,
    pub rows: Vec<NestedRow>,
}

impl NestedMorphismTable {
    pub fn outer_col(&self, v: &Var) -> Option<usize> {
        self.outer_header.iter().position(|h| h == v)
    }

    /// Position of `v` as (nest, column) if it is a nested variable.
    pub fn nested_col(&self, v: &Var) -> Option<(usize, usize)> {
        self.nest_headers.iter().enumerate().find_map(|(i, n)| n.header.iter().position(|h| h == v).map(|c| (i, c)))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Unnests every row; an empty nest contributes one all-NULL row.
    pub fn flatten(&self) -> FlatMorphismTable {
        let mut header = self.outer_header.clone();
        for n in &self.nest_headers {
            header.extend(n.header.iter().cloned());
        }
        let mut rows = Vec::new();
        for r in &self.rows {
            let mut partial: Vec<Vec<Cell>> = vec![r.outer.clone()];
            for (nest, nh) in r.nests.iter().zip(&self.nest_headers) {
                let padding = vec![vec![None; nh.header.len()]];
                let inner = if nest.is_empty() { &padding } else { nest };
                partial = partial
                    .iter()
                    .flat_map(|p| {
                        inner.iter().map(move |n| {
                            let mut row = p.clone();
                            row.extend(n.iter().copied());
                            row
                        })
                    })
                    .collect();
            }
            rows.extend(partial);
        }
        FlatMorphismTable { header, rows }
    }
}

fn cell(c: &Cell) -> String {
    match c {
        Some(id) => id.to_string(),
        None => "⊥".to_string(),
    }
}

/// Tab-separated text, NULL as `⊥`, nested tables as `[a,b; c,d]`.
impl fmt::Display for NestedMorphismTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut head: Vec<String> = self.outer_header.iter().map(|v| v.0.clone()).collect();
        for n in &self.nest_headers {
            let inner: Vec<&str> = n.header.iter().map(Var::as_str).collect();
            head.push(format!("*{}[{}]", n.agg, inner.join(",")));
        }
        writeln!(f, "{}", head.join("\t"))?;
        for r in &self.rows {
            let mut cells: Vec<String> = r.outer.iter().map(cell).collect();
            for nest in &r.nests {
                let rows: Vec<String> =
                    nest.iter().map(|nr| nr.iter().map(cell).collect::<Vec<_>>().join(",")).collect();
                cells.push(format!("[{}]", rows.join("; ")));
            }
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// A nested morphism table sorted by, and block-indexed on, its entry point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexedMorphismTable {
    pub table: NestedMorphismTable,
    pub entry: Var,
    pub entry_col: usize,
    pub index: BlockIndex,
}

impl IndexedMorphismTable {
    pub fn block(&self, entry: ObjectId) -> &[NestedRow] {
        match self.index.get(entry) {
            Some(r) => &self.table.rows[r],
            None => &[],
        }
    }
}
