use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use super::{write_customers, write_sales, AgeBand, CustomerProfile, Gender, SalesRecord, Taxonomy, ROOT};
use crate::error::{Error, Result};

const DEPARTMENTS: usize = 20;
const MEAN_EXTRA_ITEMS: f64 = 3.0;
const AFFINITY_RATE: f64 = 0.3;

/// Parameters of a synthetic retail corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_customers: usize,
    pub n_products: usize,
    pub n_receipts: usize,
    /// Zipf exponent of product popularity.
    pub skew: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_customers: 5_000,
            n_products: 2_000,
            n_receipts: 100_000,
            skew: 1.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<SalesRecord>,
    pub profiles: Vec<CustomerProfile>,
    pub taxonomy: Taxonomy,
}

impl SynthCorpus {
    /// Writes `sales.csv`, `customers.csv` and `taxonomy.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_sales(BufWriter::new(File::create(dir.join("sales.csv"))?), &self.records)?;
        write_customers(
            BufWriter::new(File::create(dir.join("customers.csv"))?),
            &self.profiles,
        )?;
        self.taxonomy
            .write(BufWriter::new(File::create(dir.join("taxonomy.csv"))?))
    }
}

pub fn product_label(p: usize) -> String {
    format!("p{p}")
}

/// Balanced four-level category tree. Products are spread over the
/// bottom-level categories in contiguous id blocks, so every top-level
/// category owns a contiguous product range.
struct Layout {
    fanout: usize,
    n_leaf_categories: usize,
    n_products: usize,
}

impl Layout {
    fn new(n_products: usize) -> Self {
        let target_leaves = n_products.div_ceil(4).max(1);
        let mut fanout: usize = 1;
        while fanout.pow(4) < target_leaves {
            fanout += 1;
        }
        Layout {
            fanout,
            n_leaf_categories: fanout.pow(4),
            n_products,
        }
    }

    fn leaf_category(&self, product: usize) -> usize {
        product * self.n_leaf_categories / self.n_products
    }

    /// Category path (top level first) of a bottom-level category.
    fn path(&self, leaf: usize) -> [String; 4] {
        let f = self.fanout;
        let digits = [leaf / f.pow(3), (leaf / f.pow(2)) % f, (leaf / f) % f, leaf % f];
        let mut prefix = String::from("c");
        let mut out: [String; 4] = Default::default();
        for (level, d) in digits.iter().enumerate() {
            prefix.push_str(&format!("{}{d}", if level == 0 { "" } else { "." }));
            out[level] = prefix.clone();
        }
        out
    }

    fn top_level(&self, product: usize) -> usize {
        self.leaf_category(product) / self.fanout.pow(3)
    }

    /// Product id range owned by a top-level category.
    fn top_level_range(&self, top: usize) -> (usize, usize) {
        let per_top = self.fanout.pow(3);
        let first_leaf = top * per_top;
        let start = (first_leaf * self.n_products).div_ceil(self.n_leaf_categories);
        let end = ((first_leaf + per_top) * self.n_products).div_ceil(self.n_leaf_categories);
        (start, end.min(self.n_products))
    }

    fn taxonomy(&self) -> Result<Taxonomy> {
        let mut edges = Vec::new();
        let mut emitted = std::collections::HashSet::new();
        for p in 0..self.n_products {
            let path = self.path(self.leaf_category(p));
            for level in 0..4 {
                if emitted.insert(path[level].clone()) {
                    let parent = if level == 0 { ROOT.to_string() } else { path[level - 1].clone() };
                    edges.push((path[level].clone(), parent));
                }
            }
            edges.push((product_label(p), path[3].clone()));
        }
        Taxonomy::from_edges(edges, 4)
    }
}

/// Deterministic synthetic corpus: Zipf product popularity, a balanced
/// four-level taxonomy, complete customer profiles, and a mild affinity
/// between a customer's age band and a top-level category.
pub fn synth_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    let SynthConfig {
        seed,
        n_customers,
        n_products,
        n_receipts,
        skew,
    } = *config;
    if n_customers == 0 || n_products == 0 || n_receipts == 0 {
        return Err(Error::Argument(
            "customer, product and receipt counts must all be at least 1".into(),
        ));
    }
    if !skew.is_finite() || skew < 0.0 {
        return Err(Error::Argument(format!("skew must be a non-negative number, got {skew}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = Layout::new(n_products);
    let taxonomy = layout.taxonomy()?;
    let n_top = layout.top_level(n_products - 1) + 1;

    let zipf = |n: usize| Zipf::new(n as f64, skew).map_err(|e| Error::Argument(e.to_string()));
    let popularity = zipf(n_products)?;
    let top_popularity: Vec<Option<(usize, Zipf<f64>)>> = (0..n_top)
        .map(|top| {
            let (lo, hi) = layout.top_level_range(top);
            if hi > lo {
                Ok(Some((lo, zipf(hi - lo)?)))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let basket_size = Poisson::new(MEAN_EXTRA_ITEMS).expect("positive mean");

    let mut profiles = Vec::with_capacity(n_customers);
    let mut favourite = Vec::with_capacity(n_customers);
    for c in 0..n_customers {
        let age_idx = rng.random_range(0..AgeBand::KNOWN.len());
        let gender = if rng.random_bool(0.5) { Gender::Female } else { Gender::Male };
        let department = format!("d{:02}", rng.random_range(0..DEPARTMENTS) + 1);
        favourite.push(if rng.random_bool(0.5) {
            age_idx % n_top
        } else {
            rng.random_range(0..n_top)
        });
        profiles.push(CustomerProfile {
            customer_id: format!("c{c}"),
            age_band: AgeBand::KNOWN[age_idx],
            gender,
            department,
        });
    }

    let mut records = Vec::new();
    let mut basket: Vec<usize> = Vec::new();
    for t in 0..n_receipts {
        let customer = rng.random_range(0..n_customers);
        let size = (1 + basket_size.sample(&mut rng) as usize).min(n_products);
        basket.clear();
        let mut attempts = 0;
        while basket.len() < size && attempts < 8 * size {
            attempts += 1;
            let product = match &top_popularity[favourite[customer]] {
                Some((lo, dist)) if rng.random_bool(AFFINITY_RATE) => {
                    lo + dist.sample(&mut rng) as usize - 1
                }
                _ => popularity.sample(&mut rng) as usize - 1,
            };
            if !basket.contains(&product) {
                basket.push(product);
            }
        }
        let receipt = format!("t{t}");
        let customer_id = &profiles[customer].customer_id;
        for &p in &basket {
            records.push(SalesRecord {
                receipt_id: receipt.clone(),
                customer_id: customer_id.clone(),
                product_id: product_label(p),
            });
        }
    }

    Ok(SynthCorpus {
        records,
        profiles,
        taxonomy,
    })
}
