//! Column removal before any recommendation is computed.
//!
//! Every decision here looks only at predicate-independent column
//! statistics, so it can run before the query class is frozen without
//! touching the error guarantees of the recommender.

use serde::{Deserialize, Serialize};

use crate::query::Op;
use crate::table::{Column, FeatureKind, Table};
use crate::vc::{FeatureComplexity, QueryClassSpec};

/// Default `n / n_unique` below which a column is treated as an identifier.
pub const DEFAULT_ID_RATIO: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Drop integer-valued or categorical columns with `n / n_unique`
    /// below this ratio. `None` disables the rule.
    pub id_ratio: Option<f64>,
    /// Drop the later column of an ordered pair with `1 - rho^2` below this
    /// value. `None` disables the rule.
    pub correlation_eps: Option<f64>,
    /// Columns that are never dropped.
    pub keep: Vec<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { id_ratio: Some(DEFAULT_ID_RATIO), correlation_eps: None, keep: Vec::new() }
    }
}

impl PreprocessConfig {
    pub fn disabled() -> Self {
        PreprocessConfig { id_ratio: None, correlation_eps: None, keep: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Constant,
    IdentifierRatio,
    Correlated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub reason: DropReason,
    /// Distinct count for `constant`, `n / n_unique` for
    /// `identifier_ratio`, `1 - rho^2` for `correlated`.
    pub statistic: f64,
    /// The retained column a correlated column duplicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlated_with: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub dropped: Vec<DroppedFeature>,
    pub retained: Vec<String>,
    pub class_before: QueryClassSpec,
    pub class_after: QueryClassSpec,
    pub d_before: u32,
    pub d_after: u32,
}

/// Query class of `table` under single-clause connections drawn from `ops`.
pub fn query_class(table: &Table, ops: &[Op]) -> QueryClassSpec {
    QueryClassSpec {
        features: table
            .columns()
            .map(|c| FeatureComplexity::for_operators(c.name(), c.kind(), ops))
            .collect(),
    }
}

fn class_dimension(class: &QueryClassSpec) -> u32 {
    class.features.iter().map(FeatureComplexity::contribution).sum()
}

pub fn preprocess(table: &Table, config: &PreprocessConfig, ops: &[Op]) -> (Table, PreprocessReport) {
    let n = table.row_count() as f64;
    let mut dropped: Vec<DroppedFeature> = Vec::new();
    let mut retained: Vec<&Column> = Vec::new();

    for column in table.columns() {
        if config.keep.iter().any(|k| k == column.name()) {
            retained.push(column);
            continue;
        }
        let distinct = column.stats().distinct;
        if distinct <= 1 {
            dropped.push(drop(column, DropReason::Constant, distinct as f64, None));
            continue;
        }
        if let Some(limit) = config.id_ratio {
            let ratio = n / distinct as f64;
            if ratio < limit && identifier_like(column) {
                dropped.push(drop(column, DropReason::IdentifierRatio, ratio, None));
                continue;
            }
        }
        if let Some(eps) = config.correlation_eps {
            if column.kind().is_ordered() {
                let twin = retained
                    .iter()
                    .filter(|r| r.kind().is_ordered())
                    .filter_map(|r| pearson(r, column).map(|rho| (r, 1.0 - rho * rho)))
                    .find(|&(_, residual)| residual < eps);
                if let Some((other, residual)) = twin {
                    dropped.push(drop(column, DropReason::Correlated, residual, Some(other.name().to_string())));
                    continue;
                }
            }
        }
        retained.push(column);
    }

    let names: Vec<&str> = dropped.iter().map(|d| d.feature.as_str()).collect();
    let reduced = table.without_columns(&names);
    let class_before = query_class(table, ops);
    let class_after = query_class(&reduced, ops);
    let report = PreprocessReport {
        retained: reduced.column_names().iter().map(|s| s.to_string()).collect(),
        d_before: class_dimension(&class_before),
        d_after: class_dimension(&class_after),
        class_before,
        class_after,
        dropped,
    };
    for d in &report.dropped {
        log::info!("dropping column `{}` ({:?}, statistic {})", d.feature, d.reason, d.statistic);
    }
    (reduced, report)
}

fn drop(column: &Column, reason: DropReason, statistic: f64, other: Option<String>) -> DroppedFeature {
    DroppedFeature { feature: column.name().to_string(), reason, statistic, correlated_with: other }
}

/// Identifier columns hold labels or integers; real-valued measurements
/// are naturally almost all distinct and are left alone.
fn identifier_like(column: &Column) -> bool {
    column.kind() == FeatureKind::Categorical
        || column.values().iter().flatten().all(|v| v.fract() == 0.0)
}

/// Pearson correlation over rows where both columns are present.
pub fn pearson(a: &Column, b: &Column) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .values()
        .iter()
        .zip(b.values())
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let len = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / len;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
