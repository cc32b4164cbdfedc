use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a sales log: product `product_id` bought by `customer_id`
/// on receipt `receipt_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SalesRecord {
    pub receipt_id: String,
    pub customer_id: String,
    pub product_id: String,
}

impl SalesRecord {
    pub fn new(receipt: &str, customer: &str, product: &str) -> Self {
        SalesRecord {
            receipt_id: receipt.to_string(),
            customer_id: customer.to_string(),
            product_id: product.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBand {
    #[serde(rename = "<35")]
    Under35,
    #[serde(rename = "35-49")]
    From35To49,
    #[serde(rename = "50-65")]
    From50To65,
    #[serde(rename = ">65")]
    Over65,
    #[serde(rename = "*")]
    Unknown,
}

impl AgeBand {
    pub const KNOWN: [AgeBand; 4] = [
        AgeBand::Under35,
        AgeBand::From35To49,
        AgeBand::From50To65,
        AgeBand::Over65,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBand::Under35 => "<35",
            AgeBand::From35To49 => "35-49",
            AgeBand::From50To65 => "50-65",
            AgeBand::Over65 => ">65",
            AgeBand::Unknown => "*",
        }
    }
}

impl FromStr for AgeBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "<35" => Ok(AgeBand::Under35),
            "35-49" => Ok(AgeBand::From35To49),
            "50-65" => Ok(AgeBand::From50To65),
            ">65" => Ok(AgeBand::Over65),
            "*" => Ok(AgeBand::Unknown),
            other => Err(format!(
                "age band `{other}` is not one of <35, 35-49, 50-65, >65, *"
            )),
        }
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "*")]
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
            Gender::Unknown => "*",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "F" | "f" | "female" => Ok(Gender::Female),
            "M" | "m" | "male" => Ok(Gender::Male),
            "*" => Ok(Gender::Unknown),
            other => Err(format!("gender `{other}` is not one of F, M, *")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Demographic attributes of a customer. Unknown values are stored as the
/// `*` wildcard, never left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerProfile {
    pub customer_id: String,
    pub age_band: AgeBand,
    pub gender: Gender,
    pub department: String,
}

impl CustomerProfile {
    /// Item labels for demo(c), in a fixed attribute order.
    pub fn demo_labels(&self) -> [String; 3] {
        [
            format!("age={}", self.age_band),
            format!("gender={}", self.gender),
            format!("dept={}", self.department),
        ]
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn read_rows<R: Read>(
    input: R,
    source_name: &str,
    arity: usize,
    header: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rows = Vec::new();
    for (idx, record) in csv_reader(input).into_records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(source_name, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 1);
        if idx == 0 && record.iter().eq(header.iter().copied()) {
            continue;
        }
        if record.len() != arity {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected {arity} fields, found {}", record.len()),
            ));
        }
        if let Some(pos) = record.iter().position(str::is_empty) {
            return Err(Error::parse(
                source_name,
                line,
                format!("field `{}` is empty", header[pos]),
            ));
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

const SALES_HEADER: [&str; 3] = ["receipt_id", "customer_id", "product_id"];
const CUSTOMERS_HEADER: [&str; 4] = ["customer_id", "age_band", "gender", "department"];

/// Collapse repeated (receipt, product) pairs, keeping the first occurrence.
pub fn dedup_records(records: Vec<SalesRecord>) -> Vec<SalesRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert((r.receipt_id.clone(), r.product_id.clone())))
        .collect()
}

pub fn read_sales<R: Read>(input: R, source_name: &str) -> Result<Vec<SalesRecord>> {
    let rows = read_rows(input, source_name, 3, &SALES_HEADER)?;
    if rows.is_empty() {
        return Err(Error::EmptyCorpus(source_name.to_string()));
    }
    let records = rows
        .into_iter()
        .map(|(_, mut f)| SalesRecord {
            product_id: f.pop().unwrap(),
            customer_id: f.pop().unwrap(),
            receipt_id: f.pop().unwrap(),
        })
        .collect();
    Ok(dedup_records(records))
}

/// Parse a `receipt_id,customer_id,product_id` file. Records come back in
/// file order with duplicate (receipt, product) pairs collapsed.
pub fn parse_sales(path: impl AsRef<Path>) -> Result<Vec<SalesRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_sales(BufReader::new(file), &path.display().to_string())
}

pub fn read_customers<R: Read>(input: R, source_name: &str) -> Result<Vec<CustomerProfile>> {
    let rows = read_rows(input, source_name, 4, &CUSTOMERS_HEADER)?;
    rows.into_iter()
        .map(|(line, f)| {
            let age_band = f[1]
                .parse()
                .map_err(|e: String| Error::parse(source_name, line, e))?;
            let gender = f[2]
                .parse()
                .map_err(|e: String| Error::parse(source_name, line, e))?;
            Ok(CustomerProfile {
                customer_id: f[0].clone(),
                age_band,
                gender,
                department: f[3].clone(),
            })
        })
        .collect()
}

pub fn parse_customers(path: impl AsRef<Path>) -> Result<Vec<CustomerProfile>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_customers(BufReader::new(file), &path.display().to_string())
}

pub fn write_sales<W: Write>(out: W, records: &[SalesRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.write_record([&r.receipt_id, &r.customer_id, &r.product_id])?;
    }
    w.flush()
}

pub fn write_customers<W: Write>(out: W, profiles: &[CustomerProfile]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in profiles {
        w.write_record([
            p.customer_id.as_str(),
            p.age_band.as_str(),
            p.gender.as_str(),
            p.department.as_str(),
        ])?;
    }
    w.flush()
}
