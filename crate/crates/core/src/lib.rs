//! Per-target closed rule mining, 34 interestingness measures, and tools
//! for comparing and clustering the rankings those measures induce.

pub mod clusterlab;
pub mod corpus;
pub mod error;
pub mod miner;
pub mod pipeline;
pub mod rankcorr;
pub mod rules;

pub use error::{Error, Result};
