use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{dedup_records, CustomerProfile, ItemDictionary, SalesRecord, Taxonomy};
use crate::error::{Error, Result};

/// How raw records are grouped into transactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    /// One transaction per record: demo(c) ∪ cat(p).
    Demo,
    /// One transaction per receipt.
    ProductReceipt,
    /// One transaction per customer, over all their receipts.
    ProductClient,
}

impl Scenario {
    pub fn default_min_support(self) -> u32 {
        match self {
            Scenario::Demo | Scenario::ProductReceipt => 1000,
            Scenario::ProductClient => 10_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Demo => "DEMO",
            Scenario::ProductReceipt => "PRODUCT_RECEIPT",
            Scenario::ProductClient => "PRODUCT_CLIENT",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "DEMO" => Ok(Scenario::Demo),
            "PRODUCT_RECEIPT" | "RECEIPT" => Ok(Scenario::ProductReceipt),
            "PRODUCT_CLIENT" | "CLIENT" => Ok(Scenario::ProductClient),
            _ => Err(Error::Argument(format!(
                "unknown scenario `{s}` (expected DEMO, PRODUCT_RECEIPT or PRODUCT_CLIENT)"
            ))),
        }
    }
}

/// The miner's input: integer-encoded transactions with items sorted
/// ascending and no repeats. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionSet {
    scenario: Scenario,
    transactions: Vec<Vec<u32>>,
    dictionary: ItemDictionary,
}

impl TransactionSet {
    pub fn new(
        scenario: Scenario,
        transactions: Vec<Vec<u32>>,
        dictionary: ItemDictionary,
    ) -> Result<Self> {
        if transactions.is_empty() {
            return Err(Error::Curation("transaction set is empty".into()));
        }
        let universe = dictionary.len() as u32;
        for (i, t) in transactions.iter().enumerate() {
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Integrity(format!(
                    "transaction {i} is not strictly increasing"
                )));
            }
            if t.last().is_some_and(|&x| x >= universe) {
                return Err(Error::Integrity(format!(
                    "transaction {i} references an item outside the dictionary"
                )));
            }
        }
        Ok(TransactionSet {
            scenario,
            transactions,
            dictionary,
        })
    }

    /// Build from label sets, interning labels in first-seen order.
    pub fn from_labels<I, T, S>(scenario: Scenario, transactions: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut dictionary = ItemDictionary::new();
        let encoded = transactions
            .into_iter()
            .map(|t| {
                let mut ids: Vec<u32> = t.into_iter().map(|l| dictionary.intern(l.as_ref())).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect();
        TransactionSet::new(scenario, encoded, dictionary)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn transactions(&self) -> &[Vec<u32>] {
        &self.transactions
    }

    pub fn dictionary(&self) -> &ItemDictionary {
        &self.dictionary
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Support of every single item, indexed by id.
    pub fn item_supports(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.dictionary.len()];
        for t in &self.transactions {
            for &i in t {
                counts[i as usize] += 1;
            }
        }
        counts
    }

    /// One line per transaction, ids separated by single spaces.
    pub fn write_transactions<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut line = String::new();
        for t in &self.transactions {
            line.clear();
            for (k, id) in t.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&id.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_transactions<R: BufRead>(
        input: R,
        source_name: &str,
        scenario: Scenario,
        dictionary: ItemDictionary,
    ) -> Result<Self> {
        let mut transactions = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx as u64 + 1;
            let ids = line
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<u32>()
                        .map_err(|_| Error::parse(source_name, lineno, format!("bad item id `{s}`")))
                })
                .collect::<Result<Vec<u32>>>()?;
            transactions.push(ids);
        }
        TransactionSet::new(scenario, transactions, dictionary).map_err(|e| match e {
            Error::Curation(_) => Error::EmptyCorpus(source_name.to_string()),
            other => other,
        })
    }
}

/// Group sales records into the scenario's transaction set.
///
/// DEMO needs every customer's profile and every product in the taxonomy;
/// the other scenarios ignore both.
pub fn build_transactions(
    records: &[SalesRecord],
    scenario: Scenario,
    profiles: Option<&[CustomerProfile]>,
    taxonomy: Option<&Taxonomy>,
) -> Result<TransactionSet> {
    let records = dedup_records(records.to_vec());
    if records.is_empty() {
        return Err(Error::Curation("no sales records".into()));
    }
    let mut dict = ItemDictionary::new();
    let transactions = match scenario {
        Scenario::Demo => {
            let profiles = profiles
                .ok_or_else(|| Error::Curation("DEMO needs customer profiles".into()))?;
            let taxonomy =
                taxonomy.ok_or_else(|| Error::Curation("DEMO needs a product taxonomy".into()))?;
            let by_customer: HashMap<&str, &CustomerProfile> = profiles
                .iter()
                .map(|p| (p.customer_id.as_str(), p))
                .collect();
            let mut cache: HashMap<&str, Vec<u32>> = HashMap::new();
            records
                .iter()
                .map(|r| {
                    let profile = by_customer.get(r.customer_id.as_str()).ok_or_else(|| {
                        Error::Curation(format!("customer `{}` has no profile", r.customer_id))
                    })?;
                    let categories = taxonomy.categories_of(&r.product_id).ok_or_else(|| {
                        Error::Curation(format!(
                            "product `{}` is not a leaf of the taxonomy",
                            r.product_id
                        ))
                    })?;
                    let mut items: Vec<u32> =
                        profile.demo_labels().iter().map(|l| dict.intern(l)).collect();
                    let cats = cache.entry(r.product_id.as_str()).or_insert_with(|| {
                        categories
                            .iter()
                            .rev()
                            .map(|c| dict.intern(&ItemDictionary::category_label(c)))
                            .collect()
                    });
                    items.extend_from_slice(cats);
                    items.sort_unstable();
                    items.dedup();
                    Ok(items)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Scenario::ProductReceipt | Scenario::ProductClient => {
            let key = |r: &SalesRecord| -> String {
                if scenario == Scenario::ProductReceipt {
                    r.receipt_id.clone()
                } else {
                    r.customer_id.clone()
                }
            };
            let mut slot: HashMap<String, usize> = HashMap::new();
            let mut groups: Vec<Vec<u32>> = Vec::new();
            for r in &records {
                let item = dict.intern(&r.product_id);
                let idx = *slot.entry(key(r)).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[idx].push(item);
            }
            for g in &mut groups {
                g.sort_unstable();
                g.dedup();
            }
            groups
        }
    };
    TransactionSet::new(scenario, transactions, dict)
}
