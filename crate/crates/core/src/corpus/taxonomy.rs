use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Synthetic root every top-level category hangs off. Never part of cat(p).
pub const ROOT: &str = "[all]";

/// Maximum number of category levels above a product.
pub const DEFAULT_MAX_DEPTH: usize = 4;

/// Product taxonomy: a forest of categories whose leaves are products.
#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    edges: Vec<(String, String)>,
    parent: HashMap<String, String>,
    child_count: HashMap<String, usize>,
    nodes: BTreeSet<String>,
}

impl Taxonomy {
    pub fn from_edges<I, S>(edges: I, max_depth: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut tax = Taxonomy::default();
        for (child, parent) in edges {
            let (child, parent) = (child.into(), parent.into());
            if child == ROOT {
                return Err(Error::Curation(format!("`{ROOT}` cannot be a child")));
            }
            if child == parent {
                return Err(Error::Curation(format!("`{child}` is its own parent")));
            }
            match tax.parent.get(&child) {
                Some(existing) if *existing == parent => continue,
                Some(existing) => {
                    return Err(Error::Curation(format!(
                        "`{child}` has two parents: `{existing}` and `{parent}`"
                    )))
                }
                None => {}
            }
            tax.nodes.insert(child.clone());
            if parent != ROOT {
                tax.nodes.insert(parent.clone());
                *tax.child_count.entry(parent.clone()).or_default() += 1;
            }
            tax.parent.insert(child.clone(), parent.clone());
            tax.edges.push((child, parent));
        }
        for leaf in tax.leaves() {
            let depth = tax.ancestors(leaf)?.len();
            if depth > max_depth {
                return Err(Error::Curation(format!(
                    "`{leaf}` sits {depth} category levels deep (max {max_depth})"
                )));
            }
        }
        Ok(tax)
    }

    fn ancestors(&self, node: &str) -> Result<Vec<&str>> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some(p) = self.parent.get(cur) {
            if p == ROOT {
                break;
            }
            if out.len() > self.nodes.len() {
                return Err(Error::Curation(format!("cycle through `{node}`")));
            }
            out.push(p.as_str());
            cur = p;
        }
        Ok(out)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| !self.child_count.contains_key(*n))
            .map(String::as_str)
    }

    pub fn is_leaf(&self, node: &str) -> bool {
        self.nodes.contains(node) && !self.child_count.contains_key(node)
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.contains(node)
    }

    /// cat(p): the strict ancestors of a product, nearest first, root excluded.
    /// `None` when `product` is not a leaf of the taxonomy.
    pub fn categories_of(&self, product: &str) -> Option<Vec<&str>> {
        if !self.is_leaf(product) {
            return None;
        }
        // Cycles are rejected at construction.
        self.ancestors(product).ok()
    }

    /// Immediate parent category, `None` for top-level nodes and unknown ids.
    pub fn parent_of(&self, node: &str) -> Option<&str> {
        self.parent
            .get(node)
            .map(String::as_str)
            .filter(|p| *p != ROOT)
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn write<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (child, parent) in &self.edges {
            w.write_record([child, parent])?;
        }
        w.flush()
    }

    pub fn read<R: Read>(input: R, source_name: &str, max_depth: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut edges = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 1);
            if idx == 0 && record.iter().eq(["child_id", "parent_id"]) {
                continue;
            }
            if record.len() != 2 || record.iter().any(str::is_empty) {
                return Err(Error::parse(source_name, line, "expected `child_id,parent_id`"));
            }
            edges.push((record[0].to_string(), record[1].to_string()));
        }
        Taxonomy::from_edges(edges, max_depth)
    }

    pub fn parse(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Taxonomy::read(BufReader::new(file), &path.display().to_string(), DEFAULT_MAX_DEPTH)
    }
}
