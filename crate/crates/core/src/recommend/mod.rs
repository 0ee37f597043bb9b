//! Safe visualization recommendation.
//!
//! Given a reference visualization, every candidate filter in the declared
//! query class is scored by its Chebyshev distance to the reference pmf.
//! A candidate is reported only when that distance exceeds the combined
//! uncertainty radii of both pmfs, so with probability at least `1 - delta`
//! no reported difference is a sampling artifact, however many candidates
//! were looked at.

mod enumerate;
mod preprocess;

pub use enumerate::{clause_options, Candidate, CellIndex, EnumerationPlan, EnumerationStats};
pub use preprocess::{
    pearson, preprocess, query_class, DropReason, DroppedFeature, PreprocessConfig, PreprocessReport,
    DEFAULT_ID_RATIO,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::{Op, Pmf, Predicate, Visualization};
use crate::stats::{bonferroni, chi_squared_gof};
use crate::table::Table;
use crate::vc::{reduce_connection, vc_dimension_bound, BoundConfig, Bound, LogBase, QueryClassSpec, DEFAULT_C};

/// Default cap on distinct candidates held in memory.
pub const DEFAULT_MAX_CANDIDATES: usize = 500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    pub delta: f64,
    pub c: f64,
    pub log_base: LogBase,
    /// Minimum visually discernible distance; candidates must also exceed it.
    pub eps_v: Option<f64>,
    /// Largest number of features constrained by one candidate predicate.
    pub max_features: Option<usize>,
    /// Operators allowed in candidate clauses.
    pub operators: Vec<Op>,
    /// Treat the reference pmf as exact.
    pub one_sample: bool,
    /// Explore features in ascending order of distinct values.
    pub ordering: bool,
    /// Cut branches whose selectivity cannot yield a safe candidate.
    pub prune: bool,
    /// Overrides the VC dimension derived from the query class.
    pub vc_dimension: Option<u32>,
    /// Bars for a continuous group-by feature, and threshold buckets for
    /// continuous predicate features.
    pub buckets: Option<usize>,
    pub max_candidates: usize,
    pub preprocess: PreprocessConfig,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            delta: 0.05,
            c: DEFAULT_C,
            log_base: LogBase::Two,
            eps_v: None,
            max_features: None,
            operators: vec![Op::Le],
            one_sample: false,
            ordering: true,
            prune: true,
            vc_dimension: None,
            buckets: None,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c must be positive, got {}", self.c)));
        }
        if let Some(e) = self.eps_v {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::param(format!("eps_v must lie in [0, 1], got {e}")));
            }
        }
        if self.operators.is_empty() {
            return Err(Error::param("at least one operator is required"));
        }
        if matches!(self.buckets, Some(b) if b < 2) {
            return Err(Error::param("buckets must be at least 2"));
        }
        if self.vc_dimension == Some(0) {
            return Err(Error::param("VC dimension must be at least 1"));
        }
        Ok(())
    }
}

/// A recommendation request against a prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    #[serde(default)]
    pub reference: Predicate,
    pub group_by: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_sample: Option<bool>,
}

impl RecommendRequest {
    pub fn new(reference: Predicate, group_by: impl Into<String>) -> Self {
        RecommendRequest { reference, group_by: group_by.into(), delta: None, eps_v: None, one_sample: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceView {
    pub predicate: Predicate,
    pub description: String,
    pub pmf: Pmf,
    pub selectivity: f64,
    /// Zero when the reference is treated as exact.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub predicate: Predicate,
    pub description: String,
    pub pmf: Pmf,
    pub distance: f64,
    pub epsilon_reference: f64,
    pub epsilon_candidate: f64,
    /// `epsilon_reference + epsilon_candidate`.
    pub uncertainty: f64,
    /// `max(uncertainty, eps_v)`.
    pub threshold: f64,
    /// `distance - uncertainty`.
    pub interest: f64,
    pub safe: bool,
    pub support: u64,
    pub selectivity: f64,
    /// Enumerated predicates selecting the same rows.
    pub equivalents: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationSet {
    pub dataset: String,
    pub group_by: String,
    pub reference: ReferenceView,
    pub bound: BoundConfig,
    pub eps_v: Option<f64>,
    pub one_sample: bool,
    pub gamma_min: f64,
    pub stats: ExplorationStats,
    pub recommendations: Vec<Recommendation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationStats {
    #[serde(flatten)]
    pub enumeration: EnumerationStats,
    /// Candidates with rows but no group-by values.
    pub empty_pmf: u64,
    pub safe: u64,
}

/// Every scored candidate, safe or not, in enumeration order.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub reference: ReferenceView,
    pub bound: BoundConfig,
    pub eps_v: Option<f64>,
    pub one_sample: bool,
    pub gamma_min: f64,
    pub stats: ExplorationStats,
    pub candidates: Vec<Recommendation>,
}

/// `max_k |p_k - q_k|` over aligned pmfs.
pub fn chebyshev_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.labels != q.labels {
        return Err(Error::MisalignedSupports);
    }
    Ok(p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// A preprocessed table with its query class frozen.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    table: Arc<Table>,
    config: ExplorationConfig,
    report: PreprocessReport,
    class: QueryClassSpec,
    d: u32,
}

impl PreparedDataset {
    pub fn prepare(table: &Table, config: ExplorationConfig) -> Result<Self> {
        config.validate()?;
        if table.row_count() == 0 {
            return Err(Error::EmptyTable);
        }
        let (reduced, report) = preprocess(table, &config.preprocess, &config.operators);
        let class = report.class_after.clone();
        let d = match config.vc_dimension {
            Some(d) => d,
            None => vc_dimension_bound(&class)?,
        };
        Ok(PreparedDataset { table: Arc::new(reduced), config, report, class, d })
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn config(&self) -> &ExplorationConfig {
        &self.config
    }

    pub fn report(&self) -> &PreprocessReport {
        &self.report
    }

    pub fn class(&self) -> &QueryClassSpec {
        &self.class
    }

    pub fn vc_dimension(&self) -> u32 {
        self.d
    }

    pub fn bound(&self, delta: f64) -> Result<BoundConfig> {
        let b = BoundConfig { delta, c: self.config.c, log_base: self.config.log_base, d: self.d };
        b.validate()?;
        Ok(b)
    }

    /// Selectivity at or below which no candidate can be safe.
    pub fn gamma_min(&self) -> f64 {
        self.bound(self.config.delta)
            .and_then(|b| b.min_selectivity(self.table.row_count() as u64))
            .unwrap_or(1.0)
    }

    /// Features candidate predicates may constrain for this group-by.
    pub fn predicate_features(&self, group_by: &str) -> Vec<&str> {
        let mut features: Vec<(usize, &str)> = self
            .class
            .features
            .iter()
            .filter(|f| f.contribution() > 0 && f.name != group_by)
            .map(|f| {
                let distinct = self.table.column(&f.name).map(|c| c.stats().distinct).unwrap_or(0);
                (distinct, f.name.as_str())
            })
            .collect();
        if self.config.ordering {
            features.sort_by_key(|&(distinct, _)| distinct);
        }
        features.into_iter().map(|(_, name)| name).collect()
    }

    /// Rejects predicates that would widen the declared class.
    pub fn check_in_class(&self, predicate: &Predicate, group_by: &str) -> Result<()> {
        predicate.validate()?;
        if self.table.column(group_by).is_err() {
            return Err(Error::OutsideQueryClass(format!("group-by feature `{group_by}` is not available")));
        }
        for conn in &predicate.connections {
            let outside = |why: &str| Error::OutsideQueryClass(format!("feature `{}`: {why}", conn.feature));
            let feature = self.class.feature(&conn.feature).ok_or_else(|| outside("not in the class"))?;
            if conn.feature == group_by {
                return Err(Error::InvalidVisualization(format!(
                    "group-by feature `{group_by}` is also used in the predicate"
                )));
            }
            let column = self.table.column(&conn.feature)?;
            let usable = |op: Op| column.kind().is_ordered() || op.is_equality();
            let allowed: Vec<Op> = self.config.operators.iter().copied().filter(|&op| usable(op)).collect();
            let left = allowed.iter().any(|op| matches!(op, Op::Le | Op::Lt | Op::Ne));
            let right = allowed.iter().any(|op| matches!(op, Op::Ge | Op::Gt | Op::Ne));
            let reduced = reduce_connection(conn);
            let (alpha, beta) = reduced.complexity();
            let mut left_rays = 0;
            let mut right_rays = 0;
            for iv in reduced.intervals() {
                match (iv.lo, iv.hi) {
                    (Bound::Unbounded, Bound::Unbounded) => {}
                    (Bound::Unbounded, _) => left_rays += 1,
                    (_, Bound::Unbounded) => right_rays += 1,
                    _ => {}
                }
            }
            if alpha > feature.alpha || beta > feature.beta || (left_rays > 0 && !left) || (right_rays > 0 && !right) {
                return Err(outside("connection exceeds the declared intervals and rays"));
            }
        }
        Ok(())
    }

    /// Pmf of a single visualization, checked against the class.
    pub fn visualization(&self, predicate: &Predicate, group_by: &str) -> Result<(Pmf, f64)> {
        self.check_in_class(predicate, group_by)?;
        let vis = Visualization { predicate: predicate.clone(), group_by: group_by.into(), buckets: self.config.buckets };
        vis.validate()?;
        let rows = crate::query::evaluate_predicate(predicate, &self.table)?;
        let pmf = crate::query::estimate_pmf(&vis, &self.table)?;
        Ok((pmf, rows.len() as f64 / self.table.row_count() as f64))
    }

    /// Scores every candidate without filtering or sorting.
    pub fn explore(&self, request: &RecommendRequest) -> Result<Exploration> {
        let delta = request.delta.unwrap_or(self.config.delta);
        let eps_v = request.eps_v.or(self.config.eps_v);
        if let Some(e) = eps_v {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::param(format!("eps_v must lie in [0, 1], got {e}")));
            }
        }
        let one_sample = request.one_sample.unwrap_or(self.config.one_sample);
        let bound = self.bound(delta)?;
        self.check_in_class(&request.reference, &request.group_by)?;

        let features = self.predicate_features(&request.group_by);
        let index = CellIndex::build(&self.table, &features, &request.group_by, self.config.buckets)?;
        let n = self.table.row_count() as u64;
        let gamma_min = bound.min_selectivity(n)?;

        let ref_cells = index.select(&request.reference)?;
        let ref_pmf = Pmf::from_counts(index.bin_labels().to_vec(), index.bar_counts(&ref_cells))?;
        let ref_eps = if one_sample { 0.0 } else { bound.epsilon_bar(ref_pmf.support)?.value };
        let reference = ReferenceView {
            predicate: request.reference.canonical(),
            description: request.reference.describe(&self.table),
            selectivity: index.rows(&ref_cells) as f64 / n as f64,
            pmf: ref_pmf,
            epsilon: ref_eps,
        };

        let plan = EnumerationPlan {
            index: &index,
            options: features
                .iter()
                .map(|f| Ok(clause_options(self.table.column(f)?, &self.config.operators, self.config.buckets)))
                .collect::<Result<_>>()?,
            max_features: self.config.max_features,
            prune_rows: self.config.prune.then(|| bound.c * bound.complexity_term()),
            max_candidates: self.config.max_candidates,
        };
        let (raw_candidates, enumeration) = plan.run()?;

        let score = |cand: &Candidate| -> Option<Recommendation> {
            let pmf = Pmf::from_counts(index.bin_labels().to_vec(), index.bar_counts(&cand.cells)).ok()?;
            let distance = chebyshev_distance(&reference.pmf, &pmf).ok()?;
            let eps = bound.epsilon_bar(pmf.support).ok()?.value;
            let uncertainty = reference.epsilon + eps;
            let threshold = eps_v.map_or(uncertainty, |v| uncertainty.max(v));
            Some(Recommendation {
                description: cand.predicate.describe(&self.table),
                predicate: cand.predicate.clone(),
                support: pmf.support,
                selectivity: cand.rows as f64 / n as f64,
                pmf,
                distance,
                epsilon_reference: reference.epsilon,
                epsilon_candidate: eps,
                uncertainty,
                threshold,
                interest: distance - uncertainty,
                safe: distance > threshold,
                equivalents: cand.equivalents,
            })
        };
        #[cfg(feature = "parallel")]
        let scored: Vec<Option<Recommendation>> = {
            use rayon::prelude::*;
            raw_candidates.par_iter().map(score).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let scored: Vec<Option<Recommendation>> = raw_candidates.iter().map(score).collect();

        let empty_pmf = scored.iter().filter(|s| s.is_none()).count() as u64;
        let candidates: Vec<Recommendation> = scored.into_iter().flatten().collect();
        let safe = candidates.iter().filter(|c| c.safe).count() as u64;
        log::debug!(
            "explored {} raw predicates, {} candidates, {} safe",
            enumeration.raw,
            candidates.len(),
            safe
        );
        Ok(Exploration {
            reference,
            bound,
            eps_v,
            one_sample,
            gamma_min,
            stats: ExplorationStats { enumeration, empty_pmf, safe },
            candidates,
        })
    }

    /// Safe candidates ranked by decreasing interest.
    pub fn recommend(&self, request: &RecommendRequest) -> Result<RecommendationSet> {
        let exploration = self.explore(request)?;
        let mut recommendations: Vec<Recommendation> =
            exploration.candidates.into_iter().filter(|c| c.safe).collect();
        rank(&mut recommendations);
        Ok(RecommendationSet {
            dataset: self.table.name().to_string(),
            group_by: request.group_by.clone(),
            reference: exploration.reference,
            bound: exploration.bound,
            eps_v: exploration.eps_v,
            one_sample: exploration.one_sample,
            gamma_min: exploration.gamma_min,
            stats: exploration.stats,
            recommendations,
        })
    }

    /// Chi-squared goodness-of-fit baseline with optional Bonferroni correction.
    pub fn baseline_chi2(&self, request: &RecommendRequest, alpha: f64, correct: bool) -> Result<BaselineSet> {
        let mut unpruned = self.clone();
        unpruned.config.prune = false;
        let exploration = unpruned.explore(request)?;
        let hypotheses = exploration.candidates.len().max(1) as u64;
        let level = if correct { bonferroni(alpha, hypotheses)? } else { bonferroni(alpha, 1)? };

        let mut ill_posed = 0u64;
        let mut discoveries = Vec::new();
        for cand in &exploration.candidates {
            match chi_squared_gof(&exploration.reference.pmf.probabilities, &cand.pmf.counts, level) {
                Ok(test) if test.reject => discoveries.push(BaselineResult {
                    predicate: cand.predicate.clone(),
                    description: cand.description.clone(),
                    statistic: test.statistic,
                    dof: test.dof,
                    p_value: test.p_value,
                    distance: cand.distance,
                    support: cand.support,
                    selectivity: cand.selectivity,
                }),
                Ok(_) => {}
                Err(Error::IllPosed(_)) => ill_posed += 1,
                Err(e) => return Err(e),
            }
        }
        discoveries.sort_by(|a, b| {
            a.p_value
                .total_cmp(&b.p_value)
                .then_with(|| b.statistic.total_cmp(&a.statistic))
                .then_with(|| a.predicate.canonical_json().cmp(&b.predicate.canonical_json()))
        });
        Ok(BaselineSet {
            alpha,
            corrected: correct,
            hypotheses,
            level,
            ill_posed,
            reference: exploration.reference,
            discoveries,
        })
    }
}

/// Interest descending, ties by canonical predicate JSON.
pub fn rank(recs: &mut [Recommendation]) {
    recs.sort_by(|a, b| {
        b.interest
            .total_cmp(&a.interest)
            .then_with(|| a.predicate.canonical_json().cmp(&b.predicate.canonical_json()))
    });
}

/// One-shot recommendation on an unprepared table.
pub fn vizrec(table: &Table, reference: &Visualization, config: ExplorationConfig) -> Result<RecommendationSet> {
    let prepared = PreparedDataset::prepare(table, config)?;
    prepared.recommend(&RecommendRequest::new(reference.predicate.clone(), reference.group_by.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub predicate: Predicate,
    pub description: String,
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub distance: f64,
    pub support: u64,
    pub selectivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSet {
    pub alpha: f64,
    pub corrected: bool,
    /// Distinct candidates tested (after zero-support exclusion and merging).
    pub hypotheses: u64,
    /// Per-test level.
    pub level: f64,
    /// Candidates with mass where the reference has none.
    pub ill_posed: u64,
    pub reference: ReferenceView,
    /// Rejections ranked by ascending p-value, then descending statistic
    /// (p-values underflow to zero for strong effects).
    pub discoveries: Vec<BaselineResult>,
}
