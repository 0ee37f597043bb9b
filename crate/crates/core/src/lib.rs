//! Statistically safe bar-chart recommendation.
//!
//! Tables are loaded from CSV ([`table`]), filtered by conjunctions of
//! OR-connected clauses ([`query`]), and summarized as pmfs over a group-by
//! column. [`vc`] bounds how far every such pmf can drift from its
//! population value at once, and [`recommend`] uses that bound to rank
//! candidate filters whose difference from a reference is larger than the
//! sampling noise. [`stats`] holds the chi-squared baselines and
//! [`experiments`] the reproducible evaluation runs.

pub mod error;
pub mod experiments;
pub mod query;
pub mod recommend;
pub mod stats;
pub mod table;
pub mod vc;

pub use error::{Error, Result};
