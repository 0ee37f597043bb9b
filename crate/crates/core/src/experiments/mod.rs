//! Seeded synthetic experiments producing plot-ready series.
//!
//! Every run returns an [`ExperimentResult`] whose JSON and CSV renderings
//! are pure functions of the parameters, so re-running with the same seed
//! reproduces the output byte for byte.

mod data;

pub use data::{
    binomial_pmf, binomial_sample, gen_planted_dataset, gen_restriction_dataset, gen_uniform_dataset, rng,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::query::{Pmf, Predicate};
use crate::recommend::{chebyshev_distance, ExplorationConfig, PreparedDataset, PreprocessConfig, RecommendRequest};
use crate::stats::{bonferroni, chi2_distance, chi_squared_gof, min_samples_chi2};
use crate::table::Table;
use crate::vc::{chernoff_epsilon, BoundConfig, LogBase};

/// Names accepted by [`run_named`].
pub const EXPERIMENTS: [&str; 5] =
    ["random-data", "chi2-vs-vc", "min-samples", "chernoff-vs-vc", "search-space-restriction"];

const CHI2_FIXTURE: &str = include_str!("../../fixtures/chi2_vs_vc.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(name: &str, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    /// Bound configurations used, keyed by role.
    pub bounds: BTreeMap<String, BoundConfig>,
    pub series: Vec<Series>,
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentResult {
    fn new(name: &str) -> Self {
        ExperimentResult {
            name: name.into(),
            parameters: BTreeMap::new(),
            bounds: BTreeMap::new(),
            series: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment results are always serializable")
    }

    /// CSV of the primary (first) series.
    pub fn to_csv(&self) -> String {
        self.series.first().map(Series::to_csv).unwrap_or_default()
    }
}

/// Parameters shared by the command-line runner.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub n: Option<usize>,
    pub d: Option<u32>,
    pub delta: f64,
    pub log_base: LogBase,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 7, n: None, d: None, delta: 0.05, log_base: LogBase::Two }
    }
}

pub fn run_named(name: &str, opts: &RunOptions) -> Result<ExperimentResult> {
    match name {
        "random-data" => {
            run_random_data_experiment(opts.n.unwrap_or(100_000), opts.seed, opts.d, opts.delta, opts.log_base)
        }
        "chi2-vs-vc" => run_chi2_vs_vc_example(1200, 10_000, opts.d.unwrap_or(10), opts.delta),
        "min-samples" => {
            let bins: Vec<u32> = (2..=100).collect();
            run_min_samples_curve(&bins, &DEFAULT_DISTANCE_GRID, 5e-8)
        }
        "chernoff-vs-vc" => run_chernoff_vs_vc(opts.n.unwrap_or(100_000), opts.seed, opts.d.unwrap_or(5), opts.delta),
        "search-space-restriction" => {
            let table = gen_restriction_dataset(opts.n.unwrap_or(10_000), opts.seed, 0.09);
            run_search_space_restriction(&table, "agg", opts.seed, opts.delta)
        }
        other => Err(Error::param(format!(
            "unknown experiment `{other}`; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

/// Selectivity grid for threshold curves, denser near zero.
fn selectivity_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|i| (i as f64 / points as f64).powi(2)).collect()
}

/// Candidates on independent uniform data, scored against the full table.
pub fn run_random_data_experiment(
    n: usize,
    seed: u64,
    d: Option<u32>,
    delta: f64,
    log_base: LogBase,
) -> Result<ExperimentResult> {
    let table = gen_uniform_dataset(n, seed);
    let config = ExplorationConfig { delta, log_base, vc_dimension: d, ..Default::default() };
    let prepared = PreparedDataset::prepare(&table, config)?;
    let request = RecommendRequest::new(Predicate::truth(), "agg");
    let exploration = prepared.explore(&request)?;
    let bound = exploration.bound;

    let mut result = ExperimentResult::new("random-data");
    result.parameters.insert("n".into(), json!(n));
    result.parameters.insert("seed".into(), json!(seed));
    result.parameters.insert("delta".into(), json!(delta));
    result.parameters.insert("group_by".into(), json!("agg"));
    result.bounds.insert("vc".into(), bound);

    let mut scatter = Series::new("candidates", &["selectivity", "distance", "uncertainty", "interest", "safe"]);
    let mut candidates = exploration.candidates.clone();
    candidates.sort_by(|a, b| {
        a.selectivity
            .total_cmp(&b.selectivity)
            .then_with(|| a.predicate.canonical_json().cmp(&b.predicate.canonical_json()))
    });
    for c in &candidates {
        scatter.rows.push(vec![c.selectivity, c.distance, c.uncertainty, c.interest, c.safe as u8 as f64]);
    }
    let mut curve = Series::new("threshold", &["selectivity", "epsilon_candidate", "uncertainty"]);
    for g in selectivity_grid(50) {
        let m = ((g * n as f64).round() as u64).max(1);
        let eps = bound.epsilon_bar(m)?.value;
        curve.rows.push(vec![g, eps, exploration.reference.epsilon + eps]);
    }
    result.series = vec![scatter, curve];

    let eps_min = bound.epsilon_bar(n as u64)?.value;
    let other_base = match log_base {
        LogBase::Two => LogBase::Natural,
        LogBase::Natural => LogBase::Two,
    };
    let eps_min_other = bound.with_log_base(other_base).epsilon_bar(n as u64)?.value;
    let max_distance = candidates.iter().map(|c| c.distance).fold(0.0, f64::max);
    result.summary.insert("recommendations".into(), json!(exploration.stats.safe));
    result.summary.insert("candidates".into(), json!(candidates.len()));
    result.summary.insert("raw_predicates".into(), json!(exploration.stats.enumeration.raw));
    result.summary.insert("d".into(), json!(bound.d));
    result.summary.insert("eps_min".into(), json!(eps_min));
    result.summary.insert(format!("eps_min_{}", log_name(other_base)), json!(eps_min_other));
    result.summary.insert("gamma_min".into(), json!(exploration.gamma_min));
    result.summary.insert("max_distance".into(), json!(max_distance));
    Ok(result)
}

fn log_name(base: LogBase) -> &'static str {
    match base {
        LogBase::Two => "log2",
        LogBase::Natural => "ln",
    }
}

#[derive(Debug, Clone, Deserialize)]
struct PmfPairFixture {
    labels: Vec<String>,
    reference: Vec<f64>,
    candidate: Vec<f64>,
}

/// Scales the candidate's deviation from the reference by `factor`.
fn scale_gap(reference: &[f64], candidate: &[f64], factor: f64) -> Vec<f64> {
    reference.iter().zip(candidate).map(|(r, c)| r + factor * (c - r)).collect()
}

/// One reference/candidate pmf pair judged by the chi-squared test and by
/// the VC criterion, with the candidate gap scaled over a range.
pub fn run_chi2_vs_vc_example(m: u64, n: u64, d: u32, delta: f64) -> Result<ExperimentResult> {
    let fixture: PmfPairFixture = serde_json::from_str(CHI2_FIXTURE)?;
    let alpha = 0.05;
    let bound = BoundConfig::new(d, delta)?;
    let eps_reference = bound.epsilon_bar(n)?.value;
    let eps_candidate = bound.epsilon_bar(m)?.value;

    let judge = |candidate: &[f64]| -> Result<(f64, f64, f64, f64)> {
        let counts: Vec<u64> = candidate.iter().map(|p| (p * m as f64).round() as u64).collect();
        let test = chi_squared_gof(&fixture.reference, &counts, alpha)?;
        let p = Pmf::from_probabilities(fixture.labels.clone(), fixture.reference.clone(), n)?;
        let q = Pmf::from_counts(fixture.labels.clone(), counts)?;
        let gap = chebyshev_distance(&p, &q)?;
        Ok((gap, chi2_distance(&fixture.reference, &q.probabilities), test.statistic, test.p_value))
    };

    let (gap, chi_dist, statistic, p_value) = judge(&fixture.candidate)?;
    let max_hypotheses = (alpha / p_value).floor();
    let uncertainty = eps_reference + eps_candidate;

    let mut result = ExperimentResult::new("chi2-vs-vc");
    result.parameters.insert("m".into(), json!(m));
    result.parameters.insert("n".into(), json!(n));
    result.parameters.insert("alpha".into(), json!(alpha));
    result.bounds.insert("vc".into(), bound);

    let mut sweep = Series::new(
        "gap-sweep",
        &["gap", "chi2_distance", "p_value", "max_hypotheses", "uncertainty", "vc_safe", "vc_safe_one_sample"],
    );
    for step in 0..=20 {
        let factor = 0.25 + 0.125 * step as f64;
        let scaled = scale_gap(&fixture.reference, &fixture.candidate, factor);
        let (g, cd, _, p) = judge(&scaled)?;
        sweep.rows.push(vec![
            g,
            cd,
            p,
            (alpha / p).floor(),
            uncertainty,
            (g > uncertainty) as u8 as f64,
            (g > eps_candidate) as u8 as f64,
        ]);
    }
    result.series.push(sweep);

    let rejects_at_max = p_value < bonferroni(alpha, max_hypotheses as u64)?;
    let rejects_above_max = p_value < bonferroni(alpha, max_hypotheses as u64 + 1)?;
    let s = &mut result.summary;
    s.insert("gap".into(), json!(gap));
    s.insert("chi2_distance".into(), json!(chi_dist));
    s.insert("statistic".into(), json!(statistic));
    s.insert("dof".into(), json!(fixture.labels.len() - 1));
    s.insert("p_value".into(), json!(p_value));
    s.insert("max_hypotheses".into(), json!(max_hypotheses));
    s.insert("chi2_rejects_at_max_hypotheses".into(), json!(rejects_at_max));
    s.insert("chi2_rejects_above_max_hypotheses".into(), json!(rejects_above_max));
    s.insert("epsilon_reference".into(), json!(eps_reference));
    s.insert("epsilon_candidate".into(), json!(eps_candidate));
    s.insert("uncertainty".into(), json!(uncertainty));
    s.insert("vc_safe".into(), json!(gap > uncertainty));
    s.insert("vc_safe_one_sample".into(), json!(gap > eps_candidate));
    let doubled = scale_gap(&fixture.reference, &fixture.candidate, 2.0);
    let (g2, ..) = judge(&doubled)?;
    s.insert("doubled_gap".into(), json!(g2));
    s.insert("vc_safe_doubled".into(), json!(g2 > uncertainty));
    Ok(result)
}

/// Distance grid used by the default minimum-sample curve.
pub const DEFAULT_DISTANCE_GRID: [f64; 8] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0];

/// Samples needed for a chi-squared rejection over bar counts and distances.
pub fn run_min_samples_curve(bins: &[u32], distances: &[f64], alpha: f64) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("min-samples");
    result.parameters.insert("alpha".into(), json!(alpha));
    result.parameters.insert("bins".into(), json!(bins));
    result.parameters.insert("distances".into(), json!(distances));
    let mut surface = Series::new("n-min", &["bins", "chi2_distance", "n_min"]);
    for &k in bins {
        for &dist in distances {
            surface.rows.push(vec![k as f64, dist, min_samples_chi2(dist, k, alpha)? as f64]);
        }
    }
    result.series.push(surface);
    result.summary.insert("n_min_k2_d0.1".into(), json!(min_samples_chi2(0.1, 2, alpha)?));
    result.summary.insert("n_min_k100_d0.1".into(), json!(min_samples_chi2(0.1, 100, alpha)?));
    Ok(result)
}

/// Sample sizes for the bound comparison: roughly log-spaced from 10.
fn sample_grid(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 10.0f64;
    while (m as usize) <= n_max {
        let v = m.round() as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        m *= 10f64.powf(0.1);
    }
    if out.last() != Some(&n_max) && n_max >= 10 {
        out.push(n_max);
    }
    out
}

/// Observed estimation error of a Bin(10, 0.3) pmf on one sample path
/// against Chernoff and VC radii.
pub fn run_chernoff_vs_vc(n_max: usize, seed: u64, d: u32, delta: f64) -> Result<ExperimentResult> {
    if n_max < 10 {
        return Err(Error::param("n_max must be at least 10"));
    }
    let truth = binomial_pmf(10, 0.3);
    let sample = binomial_sample(n_max, 10, 0.3, seed);
    let vc_d1 = BoundConfig::new(1, delta)?;
    let vc_d = BoundConfig::new(d, delta)?;

    let vc_col = format!("vc_d{d}");
    let mut columns = vec![
        "m",
        "observed",
        "chernoff_single_bar",
        "chernoff_k1",
        "chernoff_k10",
        "chernoff_k100",
        "chernoff_k1000",
        "vc_d1",
    ];
    if d != 1 {
        columns.push(&vc_col);
    }
    let mut curves = Series::new("bounds", &columns);

    let mut counts = vec![0u64; truth.len()];
    let mut seen = 0usize;
    let mut violations = 0u64;
    for m in sample_grid(n_max) {
        for &k in &sample[seen..m] {
            counts[k as usize] += 1;
        }
        seen = m;
        let observed = counts
            .iter()
            .zip(&truth)
            .map(|(&c, &p)| (c as f64 / m as f64 - p).abs())
            .fold(0.0, f64::max);
        let m64 = m as u64;
        let vc = vc_d.epsilon_bar(m64)?.raw;
        if observed > vc {
            violations += 1;
        }
        let mut row = vec![
            m as f64,
            observed,
            ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt(),
            chernoff_epsilon(m64, delta, 1)?,
            chernoff_epsilon(m64, delta, 10)?,
            chernoff_epsilon(m64, delta, 100)?,
            chernoff_epsilon(m64, delta, 1000)?,
            vc_d1.epsilon_bar(m64)?.raw,
        ];
        if d != 1 {
            row.push(vc);
        }
        curves.rows.push(row);
    }

    let ratio = |a: &str, b: &str| -> Vec<f64> {
        let x = curves.column(a).unwrap_or_default();
        let y = curves.column(b).unwrap_or_default();
        x.iter().zip(&y).map(|(p, q)| p / q).collect()
    };
    let vc1_over_k1 = ratio("vc_d1", "chernoff_k1").into_iter().fold(0.0, f64::max);
    let k1000_over_vcd = ratio("chernoff_k1000", &vc_col).into_iter().fold(f64::INFINITY, f64::min);

    let mut result = ExperimentResult::new("chernoff-vs-vc");
    result.parameters.insert("n_max".into(), json!(n_max));
    result.parameters.insert("seed".into(), json!(seed));
    result.parameters.insert("distribution".into(), json!("Bin(10, 0.3)"));
    result.bounds.insert("vc_d1".into(), vc_d1);
    result.bounds.insert(vc_col.clone(), vc_d);
    result.series.push(curves);
    result.summary.insert("observed_above_vc".into(), json!(violations));
    result.summary.insert("max_ratio_vc_d1_to_chernoff_k1".into(), json!(vc1_over_k1));
    result.summary.insert(format!("min_ratio_chernoff_k1000_to_{vc_col}"), json!(k1000_over_vcd));
    Ok(result)
}

/// Recommendations and threshold curves before and after preprocessing.
///
/// Both runs score the same candidates (those over the retained columns);
/// they differ only in the VC dimension of the declared class, which
/// before preprocessing includes every column of `table`.
pub fn run_search_space_restriction(table: &Table, group_by: &str, seed: u64, delta: f64) -> Result<ExperimentResult> {
    let preprocess = PreprocessConfig { correlation_eps: Some(0.01), keep: vec![group_by.to_string()], ..Default::default() };
    let after_cfg = ExplorationConfig { delta, preprocess, ..Default::default() };
    let after = PreparedDataset::prepare(table, after_cfg.clone())?;
    let report = after.report().clone();
    let before_cfg = ExplorationConfig {
        vc_dimension: Some(report.d_before),
        preprocess: PreprocessConfig::disabled(),
        ..after_cfg
    };
    let before = PreparedDataset::prepare(after.table(), before_cfg)?;

    let request = RecommendRequest::new(Predicate::truth(), group_by);
    let rec_before = before.recommend(&request)?;
    let rec_after = after.recommend(&request)?;

    let n = table.row_count() as u64;
    let b_before = before.bound(delta)?;
    let b_after = after.bound(delta)?;
    let mut curves = Series::new("threshold", &["selectivity", "eps_before", "eps_after"]);
    for g in selectivity_grid(50) {
        let m = ((g * n as f64).round() as u64).max(1);
        curves.rows.push(vec![g, b_before.epsilon_bar(m)?.value, b_after.epsilon_bar(m)?.value]);
    }

    let mut result = ExperimentResult::new("search-space-restriction");
    result.parameters.insert("n".into(), json!(n));
    result.parameters.insert("seed".into(), json!(seed));
    result.parameters.insert("group_by".into(), json!(group_by));
    result.bounds.insert("before".into(), b_before);
    result.bounds.insert("after".into(), b_after);
    result.series.push(curves);
    let s = &mut result.summary;
    s.insert("d_before".into(), json!(report.d_before));
    s.insert("d_after".into(), json!(report.d_after));
    s.insert("recommendations_before".into(), json!(rec_before.recommendations.len()));
    s.insert("recommendations_after".into(), json!(rec_after.recommendations.len()));
    s.insert("dropped".into(), serde_json::to_value(&report.dropped)?);
    Ok(result)
}

#[cfg(test)]
mod tests;
