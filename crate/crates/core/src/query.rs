//! Filter predicates, visualizations and empirical pmfs.
//!
//! A [`Predicate`] is a conjunction of [`Connection`]s, one per feature, and
//! every connection is a disjunction of [`Clause`]s on that feature. Clause
//! values live in the feature's metric space; `+inf` is a no-op sentinel
//! that selects every row, nulls included.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{canonical_bits, Column, FeatureKind, Table};

/// Default number of equal-width buckets for a continuous group-by feature.
pub const DEFAULT_BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Le, Op::Ge, Op::Lt, Op::Gt, Op::Eq, Op::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Lt => "<",
            Op::Gt => ">",
            Op::Eq => "=",
            Op::Ne => "!=",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Whether the operator is meaningful on unordered (categorical) features.
    pub fn is_equality(self) -> bool {
        matches!(self, Op::Eq | Op::Ne)
    }

    pub fn apply(self, x: f64, value: f64) -> bool {
        match self {
            Op::Le => x <= value,
            Op::Ge => x >= value,
            Op::Lt => x < value,
            Op::Gt => x > value,
            Op::Eq => x == value,
            Op::Ne => x != value,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub op: Op,
    #[serde(with = "inf_value")]
    pub value: f64,
}

impl Clause {
    pub fn new(op: Op, value: f64) -> Self {
        Clause { op, value }
    }

    pub fn sentinel() -> Self {
        Clause { op: Op::Le, value: f64::INFINITY }
    }

    pub fn is_sentinel(&self) -> bool {
        self.value == f64::INFINITY
    }

    pub fn matches(&self, x: Option<f64>) -> bool {
        if self.is_sentinel() {
            return true;
        }
        match x {
            Some(x) => self.op.apply(x, self.value),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub feature: String,
    #[serde(rename = "or")]
    pub clauses: Vec<Clause>,
}

impl Connection {
    pub fn new(feature: impl Into<String>, clauses: Vec<Clause>) -> Self {
        Connection { feature: feature.into(), clauses }
    }

    pub fn single(feature: impl Into<String>, op: Op, value: f64) -> Self {
        Connection::new(feature, vec![Clause::new(op, value)])
    }

    pub fn matches(&self, x: Option<f64>) -> bool {
        self.clauses.iter().any(|c| c.matches(x))
    }

    pub fn is_sentinel(&self) -> bool {
        self.clauses.iter().any(Clause::is_sentinel)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Predicate {
    #[serde(rename = "and", default)]
    pub connections: Vec<Connection>,
}

impl Predicate {
    /// The empty conjunction, selecting every row.
    pub fn truth() -> Self {
        Predicate::default()
    }

    pub fn new(connections: Vec<Connection>) -> Self {
        Predicate { connections }
    }

    pub fn and(mut self, connection: Connection) -> Self {
        self.connections.push(connection);
        self
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let p: Predicate = serde_json::from_str(json)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for conn in &self.connections {
            if !seen.insert(conn.feature.as_str()) {
                return Err(Error::InvalidPredicate(format!(
                    "feature `{}` appears in more than one connection",
                    conn.feature
                )));
            }
            if conn.clauses.is_empty() {
                return Err(Error::InvalidPredicate(format!(
                    "connection on `{}` has no clauses",
                    conn.feature
                )));
            }
            for c in &conn.clauses {
                if c.value.is_nan() || c.value == f64::NEG_INFINITY {
                    return Err(Error::InvalidPredicate(format!(
                        "clause value on `{}` must be finite or +inf",
                        conn.feature
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.connections.iter().map(|c| c.feature.as_str())
    }

    pub fn references(&self, feature: &str) -> bool {
        self.features().any(|f| f == feature)
    }

    /// Number of clauses that are not `+inf` sentinels.
    pub fn clause_count(&self) -> usize {
        self.connections
            .iter()
            .flat_map(|c| &c.clauses)
            .filter(|c| !c.is_sentinel())
            .count()
    }

    /// Same predicate with connections sorted by feature name.
    pub fn canonical(&self) -> Predicate {
        let mut connections = self.connections.clone();
        connections.sort_by(|a, b| a.feature.cmp(&b.feature));
        Predicate { connections }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("predicate serializes")
    }

    /// Human readable form using raw labels from `table`.
    pub fn describe(&self, table: &Table) -> String {
        let parts: Vec<String> = self
            .canonical()
            .connections
            .iter()
            .filter(|c| !c.is_sentinel())
            .map(|conn| {
                let column = table.column(&conn.feature).ok();
                let terms: Vec<String> = conn
                    .clauses
                    .iter()
                    .map(|c| {
                        let v = match column {
                            Some(col) => col.metric_map().to_raw(c.value),
                            None => crate::table::format_number(c.value),
                        };
                        format!("{} {} {}", conn.feature, c.op, v)
                    })
                    .collect();
                if terms.len() == 1 {
                    terms.into_iter().next().unwrap()
                } else {
                    format!("({})", terms.join(" OR "))
                }
            })
            .collect();
        if parts.is_empty() {
            "TRUE".into()
        } else {
            parts.join(" AND ")
        }
    }

    pub(crate) fn bind<'t>(&'t self, table: &'t Table) -> Result<Vec<(&'t Connection, &'t Column)>> {
        self.validate()?;
        self.connections
            .iter()
            .map(|conn| Ok((conn, table.column(&conn.feature)?)))
            .collect()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_json())
    }
}

/// Rows (ascending indices) where every connection has a satisfied clause.
pub fn evaluate_predicate(pred: &Predicate, table: &Table) -> Result<Vec<usize>> {
    let bound = pred.bind(table)?;
    Ok((0..table.row_count())
        .filter(|&row| bound.iter().all(|(conn, col)| conn.matches(col.values()[row])))
        .collect())
}

/// Fraction of rows that satisfy `pred`.
pub fn selectivity(pred: &Predicate, table: &Table) -> Result<f64> {
    if table.row_count() == 0 {
        return Err(Error::EmptyTable);
    }
    Ok(evaluate_predicate(pred, table)?.len() as f64 / table.row_count() as f64)
}

/// `SELECT X, COUNT(*) FROM D WHERE F GROUP BY X`, read as a pmf over `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visualization {
    pub predicate: Predicate,
    pub group_by: String,
    /// Bucket count when the group-by feature is continuous.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buckets: Option<usize>,
}

impl Visualization {
    pub fn new(predicate: Predicate, group_by: impl Into<String>) -> Self {
        Visualization { predicate, group_by: group_by.into(), buckets: None }
    }

    pub fn with_buckets(mut self, buckets: usize) -> Self {
        self.buckets = Some(buckets);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.predicate.validate()?;
        if self.predicate.references(&self.group_by) {
            return Err(Error::InvalidVisualization(format!(
                "group-by feature `{}` is also used in the predicate",
                self.group_by
            )));
        }
        if matches!(self.buckets, Some(k) if k < 2) {
            return Err(Error::InvalidVisualization("bucket count must be at least 2".into()));
        }
        Ok(())
    }
}

/// Maps group-by values to bars. Built from the full table so that every
/// pmf over the same group-by feature shares the same x-axis.
#[derive(Debug, Clone)]
pub struct GroupBinning {
    labels: Vec<String>,
    rule: BinRule,
}

#[derive(Debug, Clone)]
enum BinRule {
    Values(HashMap<u64, usize>),
    Buckets { min: f64, width: f64, count: usize },
}

impl GroupBinning {
    pub fn for_column(column: &Column, buckets: Option<usize>) -> Result<Self> {
        if column.kind() == FeatureKind::ContinuousOrdered {
            let count = buckets.unwrap_or(DEFAULT_BUCKETS);
            if count < 2 {
                return Err(Error::InvalidVisualization("bucket count must be at least 2".into()));
            }
            let stats = column.stats();
            let (min, max) = match (stats.min, stats.max) {
                (Some(a), Some(b)) => (a, b),
                _ => (0.0, 1.0),
            };
            let width = if max > min { (max - min) / count as f64 } else { 1.0 };
            let labels = (0..count)
                .map(|i| {
                    let lo = min + width * i as f64;
                    let hi = if i + 1 == count { max.max(lo + width) } else { min + width * (i + 1) as f64 };
                    let close = if i + 1 == count { "]" } else { ")" };
                    format!("[{}, {}{close}", round_label(lo), round_label(hi))
                })
                .collect();
            Ok(GroupBinning { labels, rule: BinRule::Buckets { min, width, count } })
        } else {
            let values = column.distinct_values();
            let labels = values.iter().map(|v| column.metric_map().to_raw(*v)).collect();
            let index = values.iter().enumerate().map(|(i, v)| (canonical_bits(*v), i)).collect();
            Ok(GroupBinning { labels, rule: BinRule::Values(index) })
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bin(&self, value: Option<f64>) -> Option<usize> {
        let v = value?;
        match &self.rule {
            BinRule::Values(index) => index.get(&canonical_bits(v)).copied(),
            BinRule::Buckets { min, width, count } => {
                let k = ((v - min) / width).floor();
                Some(if k < 0.0 { 0 } else { (k as usize).min(count - 1) })
            }
        }
    }
}

fn round_label(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    crate::table::format_number(r)
}

/// Empirical pmf of a visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of rows behind the estimate.
    pub support: u64,
}

impl Pmf {
    pub fn from_counts(labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let support: u64 = counts.iter().sum();
        if support == 0 {
            return Err(Error::EmptySupport);
        }
        let probabilities = counts.iter().map(|&c| c as f64 / support as f64).collect();
        Ok(Pmf { labels, probabilities, counts, support })
    }

    /// A pmf given as exact probabilities, e.g. a reference distribution.
    pub fn from_probabilities(labels: Vec<String>, probabilities: Vec<f64>, support: u64) -> Result<Self> {
        if labels.len() != probabilities.len() {
            return Err(Error::MisalignedSupports);
        }
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("probabilities must lie in [0, 1]"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        let counts = probabilities.iter().map(|p| (p * support as f64).round() as u64).collect();
        Ok(Pmf { labels, probabilities, counts, support })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

pub fn estimate_pmf(vis: &Visualization, table: &Table) -> Result<Pmf> {
    vis.validate()?;
    let group = table.column(&vis.group_by)?;
    let binning = GroupBinning::for_column(group, vis.buckets)?;
    let rows = evaluate_predicate(&vis.predicate, table)?;
    let mut counts = vec![0u64; binning.len()];
    for row in rows {
        if let Some(b) = binning.bin(group.values()[row]) {
            counts[b] += 1;
        }
    }
    Pmf::from_counts(binning.labels().to_vec(), counts)
}

mod inf_value {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "+inf" => Ok(f64::INFINITY),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}
