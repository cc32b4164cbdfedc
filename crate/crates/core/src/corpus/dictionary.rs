use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

/// What an item label denotes, recovered from its prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Product,
    Category,
    Demographic,
}

impl ItemKind {
    pub fn of_label(label: &str) -> ItemKind {
        if label.starts_with("cat=") {
            ItemKind::Category
        } else if label.starts_with("age=")
            || label.starts_with("gender=")
            || label.starts_with("dept=")
        {
            ItemKind::Demographic
        } else {
            ItemKind::Product
        }
    }
}

/// Bijection between item labels and dense ids `0..len`, assigned in
/// first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ItemDictionary {
    labels: Vec<String>,
    ids: HashMap<String, u32>,
}

impl ItemDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn category_label(category: &str) -> String {
        format!("cat={category}")
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.ids.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<u32> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.labels.get(id as usize).map(String::as_str)
    }

    pub fn kind(&self, id: u32) -> Option<ItemKind> {
        self.label(id).map(ItemKind::of_label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Labels closest to `query` by edit distance, best first.
    pub fn nearest(&self, query: &str, count: usize) -> Vec<&str> {
        let mut scored: Vec<(usize, &str)> = self
            .labels
            .iter()
            .map(|l| (strsim::levenshtein(query, l), l.as_str()))
            .collect();
        scored.sort();
        scored.into_iter().take(count).map(|(_, l)| l).collect()
    }

    /// `id<TAB>label` per line.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (id, label) in self.labels.iter().enumerate() {
            writeln!(out, "{id}\t{label}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R, source_name: &str) -> Result<Self> {
        let mut dict = ItemDictionary::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx as u64 + 1;
            let (id, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, lineno, "expected `id<TAB>label`"))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(source_name, lineno, format!("bad id `{id}`")))?;
            if id != dict.len() {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("ids must be contiguous from 0, expected {}", dict.len()),
                ));
            }
            if dict.ids.contains_key(label) {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("duplicate label `{label}`"),
                ));
            }
            dict.intern(label);
        }
        Ok(dict)
    }
}
