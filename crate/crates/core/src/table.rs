//! Immutable columnar tables with typed features.
//!
//! Every value is stored in its feature's metric space: ordered numeric
//! features keep their raw value, binary features are mapped onto `{0, 1}`
//! and categorical labels get integer codes in first-appearance order. The
//! [`MetricMap`] of a column converts metric values back to raw text.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer columns with at most this many distinct values are discrete.
pub const DEFAULT_DISCRETE_THRESHOLD: usize = 100;

const NULL_TOKENS: [&str; 5] = ["", "NA", "null", "NULL", "NaN"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "binary")]
    Binary,
    #[serde(rename = "discrete")]
    DiscreteOrdered,
    #[serde(rename = "continuous")]
    ContinuousOrdered,
    #[serde(rename = "categorical")]
    Categorical,
}

impl FeatureKind {
    pub fn is_ordered(self) -> bool {
        !matches!(self, FeatureKind::Categorical)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Binary => "binary",
            FeatureKind::DiscreteOrdered => "discrete",
            FeatureKind::ContinuousOrdered => "continuous",
            FeatureKind::Categorical => "categorical",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-column kind overrides, as read from `{"column": "binary|discrete|continuous|categorical"}`.
pub type Schema = BTreeMap<String, FeatureKind>;

pub fn parse_schema(json: &str) -> Result<Schema> {
    Ok(serde_json::from_str(json)?)
}

/// Injective map from raw values to reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricMap {
    /// Raw numeric value is the metric value.
    Identity,
    /// `low -> 0`, `high -> 1`.
    Binary { low: f64, high: f64 },
    /// Label `i` has metric value `i`.
    Categorical { labels: Vec<String> },
}

impl MetricMap {
    pub fn to_metric(&self, raw: &str) -> Option<f64> {
        match self {
            MetricMap::Identity => parse_number(raw),
            MetricMap::Binary { low, high } => {
                let v = parse_number(raw)?;
                if v == *low {
                    Some(0.0)
                } else if v == *high {
                    Some(1.0)
                } else {
                    None
                }
            }
            MetricMap::Categorical { labels } => {
                labels.iter().position(|l| l == raw).map(|i| i as f64)
            }
        }
    }

    /// Raw text for a metric value. Values outside the map render as the number.
    pub fn to_raw(&self, metric: f64) -> String {
        match self {
            MetricMap::Identity => format_number(metric),
            MetricMap::Binary { low, high } => {
                if metric == 0.0 {
                    format_number(*low)
                } else if metric == 1.0 {
                    format_number(*high)
                } else {
                    format_number(metric)
                }
            }
            MetricMap::Categorical { labels } => {
                if metric >= 0.0 && metric.fract() == 0.0 && (metric as usize) < labels.len() {
                    labels[metric as usize].clone()
                } else {
                    format_number(metric)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    kind: FeatureKind,
    metric: MetricMap,
    values: Vec<Option<f64>>,
}

impl Column {
    /// Builds a numeric column, mapping binary columns onto `{0, 1}`.
    pub fn numeric(name: impl Into<String>, kind: FeatureKind, raw: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        match kind {
            FeatureKind::Binary => {
                let mut distinct: Vec<f64> = Vec::new();
                for v in raw.iter().flatten() {
                    if !distinct.contains(v) {
                        distinct.push(*v);
                        if distinct.len() > 2 {
                            return Err(Error::KindOverride {
                                column: name,
                                kind: kind.to_string(),
                                reason: "more than two distinct values".into(),
                            });
                        }
                    }
                }
                distinct.sort_by(f64::total_cmp);
                let low = distinct.first().copied().unwrap_or(0.0);
                let high = distinct.last().copied().unwrap_or(1.0);
                let values = raw
                    .into_iter()
                    .map(|v| v.map(|v| if v == low { 0.0 } else { 1.0 }))
                    .collect();
                Ok(Column { name, kind, metric: MetricMap::Binary { low, high }, values })
            }
            FeatureKind::DiscreteOrdered | FeatureKind::ContinuousOrdered => {
                Ok(Column { name, kind, metric: MetricMap::Identity, values: raw })
            }
            FeatureKind::Categorical => {
                let labels: Vec<Option<String>> =
                    raw.into_iter().map(|v| v.map(format_number)).collect();
                Ok(Column::categorical(name, labels))
            }
        }
    }

    /// Builds a numeric column with the kind CSV loading would infer.
    pub fn inferred(name: impl Into<String>, raw: Vec<Option<f64>>) -> Self {
        let kind = infer_numeric_kind(raw.iter().flatten().copied(), DEFAULT_DISCRETE_THRESHOLD);
        Column::numeric(name, kind, raw).expect("inferred kind always fits its values")
    }

    /// Builds a categorical column; codes follow first appearance.
    pub fn categorical(name: impl Into<String>, raw: Vec<Option<String>>) -> Self {
        let mut labels: Vec<String> = Vec::new();
        let mut codes: HashMap<String, usize> = HashMap::new();
        let values = raw
            .into_iter()
            .map(|v| {
                v.map(|label| {
                    let next = labels.len();
                    let code = *codes.entry(label.clone()).or_insert_with(|| {
                        labels.push(label);
                        next
                    });
                    code as f64
                })
            })
            .collect();
        Column {
            name: name.into(),
            kind: FeatureKind::Categorical,
            metric: MetricMap::Categorical { labels },
            values,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn metric_map(&self) -> &MetricMap {
        &self.metric
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn raw(&self, row: usize) -> Option<String> {
        self.values[row].map(|v| self.metric.to_raw(v))
    }

    /// Distinct non-null metric values, ascending.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut seen = HashSet::new();
        let mut out: Vec<f64> = self
            .values
            .iter()
            .flatten()
            .filter(|v| seen.insert(canonical_bits(**v)))
            .copied()
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn stats(&self) -> ColumnStats {
        let distinct = self.distinct_values();
        ColumnStats {
            distinct: distinct.len(),
            min: distinct.first().copied(),
            max: distinct.last().copied(),
            nulls: self.values.iter().filter(|v| v.is_none()).count(),
        }
    }
}

/// Immutable dataset. Columns are shared, so derived tables are cheap.
#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    columns: Vec<Arc<Column>>,
    n: usize,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        Self::from_shared(name.into(), columns.into_iter().map(Arc::new).collect())
    }

    fn from_shared(name: String, columns: Vec<Arc<Column>>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        let mut names = HashSet::new();
        for c in &columns {
            if c.len() != n {
                return Err(Error::param(format!(
                    "column `{}` has {} rows, expected {n}",
                    c.name,
                    c.len()
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Table { name, columns, n })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &Column> {
        self.columns.iter().map(|c| c.as_ref())
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.column_index(name)
            .map(|i| self.columns[i].as_ref())
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn column_at(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    /// Kinds of all columns, usable as a schema override to reload [`Table::to_csv`] output.
    pub fn schema(&self) -> Schema {
        self.columns.iter().map(|c| (c.name.clone(), c.kind)).collect()
    }

    /// A new table without the named columns.
    pub fn without_columns(&self, drop: &[&str]) -> Table {
        let columns = self
            .columns
            .iter()
            .filter(|c| !drop.contains(&c.name.as_str()))
            .cloned()
            .collect::<Vec<_>>();
        let n = if columns.is_empty() { 0 } else { self.n };
        Table { name: self.name.clone(), columns, n }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in 0..self.n {
            w.write_record(self.columns.iter().map(|c| c.raw(row).unwrap_or_default()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub distinct: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub nulls: usize,
}

pub fn column_stats(table: &Table, feature: &str) -> Result<ColumnStats> {
    Ok(table.column(feature)?.stats())
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub name: String,
    pub schema: Schema,
    pub discrete_threshold: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            name: "table".into(),
            schema: Schema::new(),
            discrete_threshold: DEFAULT_DISCRETE_THRESHOLD,
        }
    }
}

/// Reads a UTF-8 CSV with a header row.
pub fn load_table<R: Read>(reader: R, options: &LoadOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(e) => return Err(map_csv_error(e)),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    for name in options.schema.keys() {
        if !headers.contains(name) {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record.map_err(map_csv_error)?;
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            col.push(if is_null(field) { None } else { Some(field.to_string()) });
        }
    }

    let kinds = infer_feature_kinds(&raw, options.discrete_threshold);
    let mut columns = Vec::with_capacity(headers.len());
    for ((name, values), inferred) in headers.into_iter().zip(raw).zip(kinds) {
        let kind = options.schema.get(&name).copied().unwrap_or(inferred);
        columns.push(build_column(name, kind, values)?);
    }
    Table::new(options.name.clone(), columns)
}

pub fn load_table_str(csv_text: &str, options: &LoadOptions) -> Result<Table> {
    load_table(csv_text.as_bytes(), options)
}

fn build_column(name: String, kind: FeatureKind, values: Vec<Option<String>>) -> Result<Column> {
    if kind == FeatureKind::Categorical {
        return Ok(Column::categorical(name, values));
    }
    let mut numbers = Vec::with_capacity(values.len());
    for v in values {
        match v {
            None => numbers.push(None),
            Some(s) => match parse_number(&s) {
                Some(x) => numbers.push(Some(x)),
                None => {
                    return Err(Error::KindOverride {
                        column: name,
                        kind: kind.to_string(),
                        reason: format!("non-numeric value `{s}`"),
                    })
                }
            },
        }
    }
    Column::numeric(name, kind, numbers)
}

fn map_csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::RaggedRow {
            line,
            expected: *expected_len as usize,
            found: *len as usize,
        },
        _ => Error::Csv(e.to_string()),
    }
}

pub fn infer_feature_kinds(columns: &[Vec<Option<String>>], discrete_threshold: usize) -> Vec<FeatureKind> {
    columns
        .iter()
        .map(|c| infer_kind(c.iter().map(|v| v.as_deref()), discrete_threshold))
        .collect()
}

/// Classifies one column of raw values (nulls as `None`).
pub fn infer_kind<'a>(values: impl IntoIterator<Item = Option<&'a str>>, discrete_threshold: usize) -> FeatureKind {
    let mut numbers = Vec::new();
    for v in values.into_iter().flatten() {
        let Some(x) = parse_number(v) else {
            return FeatureKind::Categorical;
        };
        numbers.push(x);
    }
    infer_numeric_kind(numbers, discrete_threshold)
}

/// Classifies a column of non-null numbers.
pub fn infer_numeric_kind(values: impl IntoIterator<Item = f64>, discrete_threshold: usize) -> FeatureKind {
    let mut distinct = HashSet::new();
    let mut all_integer = true;
    for x in values {
        all_integer &= x.fract() == 0.0;
        distinct.insert(canonical_bits(x));
    }
    match distinct.len() {
        2 => FeatureKind::Binary,
        k if all_integer && k <= discrete_threshold => FeatureKind::DiscreteOrdered,
        _ => FeatureKind::ContinuousOrdered,
    }
}

fn is_null(field: &str) -> bool {
    NULL_TOKENS.contains(&field)
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

pub(crate) fn canonical_bits(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}
