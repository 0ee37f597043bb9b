//! Browser bindings: uncertainty curves, Chernoff/VC bound comparison and
//! in-page recommendation over a pasted CSV.
//!
//! Every export returns a JSON string; the plain-Rust functions behind them
//! are public so they can be tested natively.

use serde::Serialize;
use vizrec_core::experiments::{gen_planted_dataset, gen_uniform_dataset};
use vizrec_core::query::{Op, Predicate};
use vizrec_core::recommend::{ExplorationConfig, PreparedDataset, RecommendRequest, RecommendationSet};
use vizrec_core::table::{load_table_str, LoadOptions};
use vizrec_core::vc::{chernoff_epsilon, BoundConfig, LogBase};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub selectivity: f64,
    pub support: u64,
    pub epsilon_candidate: f64,
    /// Candidate radius plus the radius of the full-table reference.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Uncertainty radius against selectivity on a table of `n` rows.
pub fn epsilon_curve_points(n: u64, d: u32, delta: f64, natural_log: bool, points: usize) -> Result<Vec<CurvePoint>, String> {
    if n == 0 || points < 2 {
        return Err("need n >= 1 and at least two points".into());
    }
    let base = if natural_log { LogBase::Natural } else { LogBase::Two };
    let bound = BoundConfig::new(d, delta).map_err(err)?.with_log_base(base);
    let reference = bound.epsilon_bar(n).map_err(err)?.value;
    (1..=points)
        .map(|i| {
            let selectivity = (i as f64 / points as f64).powi(2);
            let support = ((selectivity * n as f64).round() as u64).max(1);
            let eps = bound.epsilon_bar(support).map_err(err)?.value;
            Ok(CurvePoint { selectivity, support, epsilon_candidate: eps, uncertainty: reference + eps })
        })
        .collect()
}

/// Chernoff union bounds for K in {1, 10, 100, 1000} and VC radii for
/// d = 1 and `d`, on a logarithmic grid of sample sizes from 10 to `m_max`.
pub fn bound_comparison_curves(m_max: u64, d: u32, delta: f64) -> Result<Curves, String> {
    if m_max < 10 {
        return Err("m_max must be at least 10".into());
    }
    let vc1 = BoundConfig::new(1, delta).map_err(err)?;
    let vcd = BoundConfig::new(d, delta).map_err(err)?;
    let mut columns: Vec<String> =
        ["m", "chernoff_k1", "chernoff_k10", "chernoff_k100", "chernoff_k1000", "vc_d1"].map(String::from).to_vec();
    columns.push(format!("vc_d{d}"));
    let steps = 60;
    let span = (m_max as f64 / 10.0).log10();
    let mut rows = Vec::with_capacity(steps + 1);
    let mut last = 0;
    for i in 0..=steps {
        let m = (10.0 * 10f64.powf(span * i as f64 / steps as f64)).round() as u64;
        if m == last {
            continue;
        }
        last = m;
        let mut row = vec![m as f64];
        for k in [1, 10, 100, 1000] {
            row.push(chernoff_epsilon(m, delta, k).map_err(err)?);
        }
        row.push(vc1.epsilon_bar(m).map_err(err)?.raw);
        row.push(vcd.epsilon_bar(m).map_err(err)?.raw);
        rows.push(row);
    }
    Ok(Curves { columns, rows })
}

/// Safe recommendations for a CSV held in memory.
pub fn recommend_from_csv(
    csv: &str,
    group_by: &str,
    reference: &str,
    delta: f64,
    eps_v: Option<f64>,
    operators: &str,
) -> Result<RecommendationSet, String> {
    let ops = operators
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Op::parse(s).ok_or_else(|| format!("unknown operator `{s}`")))
        .collect::<Result<Vec<Op>, String>>()?;
    let reference = if reference.trim().is_empty() { Predicate::truth() } else { Predicate::from_json(reference).map_err(err)? };
    let table = load_table_str(csv, &LoadOptions { name: "pasted".into(), ..Default::default() }).map_err(err)?;
    let config = ExplorationConfig { operators: if ops.is_empty() { vec![Op::Le] } else { ops }, ..Default::default() };
    let prepared = PreparedDataset::prepare(&table, config).map_err(err)?;
    let request = RecommendRequest { delta: Some(delta), eps_v, ..RecommendRequest::new(reference, group_by) };
    prepared.recommend(&request).map_err(err)
}

/// Seeded example CSVs: `uniform` (no signal) or `planted` (a 0.5 shift on `flag`).
pub fn sample_dataset(kind: &str, n: usize, seed: u64) -> Result<String, String> {
    match kind {
        "uniform" => Ok(gen_uniform_dataset(n, seed).to_csv()),
        "planted" => Ok(gen_planted_dataset(n, seed).to_csv()),
        other => Err(format!("unknown sample `{other}`")),
    }
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn epsilon_curve(n: u32, d: u32, delta: f64, natural_log: bool, points: u32) -> Result<String, JsError> {
    to_json(epsilon_curve_points(n as u64, d, delta, natural_log, points as usize))
}

#[wasm_bindgen]
pub fn bound_comparison(m_max: u32, d: u32, delta: f64) -> Result<String, JsError> {
    to_json(bound_comparison_curves(m_max as u64, d, delta))
}

/// `eps_v` below zero means no visual threshold.
#[wasm_bindgen]
pub fn recommend_csv(
    csv: &str,
    group_by: &str,
    reference: &str,
    delta: f64,
    eps_v: f64,
    operators: &str,
) -> Result<String, JsError> {
    let eps_v = (eps_v >= 0.0).then_some(eps_v);
    to_json(recommend_from_csv(csv, group_by, reference, delta, eps_v, operators))
}

#[wasm_bindgen]
pub fn sample_csv(kind: &str, n: u32, seed: u32) -> Result<String, JsError> {
    sample_dataset(kind, n as usize, seed as u64).map_err(|e| JsError::new(&e))
}
