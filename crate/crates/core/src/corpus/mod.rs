//! Raw sales data, customer demographics, the product taxonomy, and the
//! transaction sets built from them for each mining scenario.

mod dictionary;
mod records;
mod synth;
mod taxonomy;
mod transactions;

pub use dictionary::{ItemDictionary, ItemKind};
pub use records::{
    dedup_records, parse_customers, parse_sales, read_customers, read_sales, write_customers,
    write_sales, AgeBand, CustomerProfile, Gender, SalesRecord,
};
pub use synth::{synth_corpus, SynthConfig, SynthCorpus};
pub use taxonomy::{Taxonomy, DEFAULT_MAX_DEPTH, ROOT};
pub use transactions::{build_transactions, Scenario, TransactionSet};
