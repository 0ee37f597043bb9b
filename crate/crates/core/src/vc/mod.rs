//! VC-dimension bounds for predicate query classes and the uncertainty
//! radii they imply.
//!
//! For a class of conjunctions over features, where the clauses on feature
//! `i` reduce to at most `alpha_i` bounded intervals and `beta_i` rays, the
//! VC dimension is at most `sum_i (2 alpha_i + beta_i)`. With VC dimension
//! at most `d`, a uniform sample of size `m` is an `eps`-approximation with
//! probability `1 - delta` once
//!
//! ```text
//! eps >= sqrt(c * (d + log2(1/delta)) / m)
//! ```
//!
//! and this holds simultaneously for every filter in the class, which is
//! what lets the recommender compare many candidates at once.

mod interval;
mod shatter;

pub use interval::{clause_intervals, reduce_connection, reduce_intervals, Bound, Interval, IntervalSet};
pub use shatter::{shattering_oracle, MAX_ORACLE_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::Op;
use crate::table::FeatureKind;

/// Default sample-complexity constant.
pub const DEFAULT_C: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureComplexity {
    pub name: String,
    /// Maximum number of non-redundant bounded (closed) intervals.
    pub alpha: u32,
    /// Maximum number of non-redundant rays (open intervals).
    pub beta: u32,
}

impl FeatureComplexity {
    pub fn contribution(&self) -> u32 {
        2 * self.alpha + self.beta
    }

    /// Complexity of single-clause connections drawn from `ops`.
    ///
    /// `=` contributes a degenerate closed interval. Rays are counted per
    /// direction: a class mixing `<=` and `>=` clauses shatters two points
    /// even though each member is a single ray. `!=` yields a ray in both
    /// directions. Categorical features only admit `=` and `!=`.
    pub fn for_operators(name: impl Into<String>, kind: FeatureKind, ops: &[Op]) -> Self {
        let usable = |op: &Op| kind.is_ordered() || op.is_equality();
        let has = |wanted: &[Op]| ops.iter().filter(|o| usable(o)).any(|o| wanted.contains(o));
        let alpha = u32::from(has(&[Op::Eq]));
        let beta = u32::from(has(&[Op::Le, Op::Lt, Op::Ne])) + u32::from(has(&[Op::Ge, Op::Gt, Op::Ne]));
        FeatureComplexity { name: name.into(), alpha, beta }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryClassSpec {
    pub features: Vec<FeatureComplexity>,
}

impl QueryClassSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureComplexity> {
        self.features.iter().find(|f| f.name == name)
    }
}

/// `sum_i (2 alpha_i + beta_i)`.
pub fn vc_dimension_bound(spec: &QueryClassSpec) -> Result<u32> {
    let d: u32 = spec.features.iter().map(FeatureComplexity::contribution).sum();
    if d == 0 {
        return Err(Error::EmptyQueryClass);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "log2")]
    Two,
    #[serde(rename = "ln")]
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub delta: f64,
    pub c: f64,
    pub log_base: LogBase,
    pub d: u32,
}

impl BoundConfig {
    pub fn new(d: u32, delta: f64) -> Result<Self> {
        let cfg = BoundConfig { delta, c: DEFAULT_C, log_base: LogBase::Two, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c must be positive, got {}", self.c)));
        }
        if self.d == 0 {
            return Err(Error::param("VC dimension must be at least 1"));
        }
        Ok(())
    }

    /// `d + log(1/delta)` in the configured base.
    pub fn complexity_term(&self) -> f64 {
        self.d as f64 + self.log_base.log(1.0 / self.delta)
    }

    pub fn epsilon_bar(&self, support: u64) -> Result<EpsilonBar> {
        self.validate()?;
        if support == 0 {
            return Err(Error::EmptySupport);
        }
        let raw = (self.c * self.complexity_term() / support as f64).sqrt();
        Ok(EpsilonBar {
            value: raw.min(1.0),
            raw,
            d: self.d,
            delta: self.delta,
            support,
            c: self.c,
            log_base: self.log_base,
        })
    }

    /// Selectivity at or below which `epsilon_bar >= 1`, so nothing can be safe.
    pub fn min_selectivity(&self, n: u64) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(self.c * self.complexity_term() / n as f64)
    }
}

/// Uncertainty radius of a pmf estimated from `support` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBar {
    /// `raw` clamped to 1.
    pub value: f64,
    pub raw: f64,
    pub d: u32,
    pub delta: f64,
    pub support: u64,
    pub c: f64,
    pub log_base: LogBase,
}

/// `sqrt(c * (d + log2(1/delta)) / m)`.
pub fn epsilon_bar(d: u32, delta: f64, support: u64, c: f64) -> Result<EpsilonBar> {
    BoundConfig { delta, c, log_base: LogBase::Two, d }.epsilon_bar(support)
}

/// `(d + log2(1/delta)) / (2n)`.
pub fn min_selectivity_threshold(d: u32, delta: f64, n: u64) -> Result<f64> {
    BoundConfig { delta, c: DEFAULT_C, log_base: LogBase::Two, d }.min_selectivity(n)
}

/// Largest VC dimension for which every pair of visualizations with
/// selectivities `gamma1`, `gamma2` that differ by `theta` is marked safe:
/// `floor(theta^2 * min(gamma1, gamma2) * n - log2(1/delta))`.
pub fn max_vc_for_requirements(theta: f64, gamma1: f64, gamma2: f64, n: u64, delta: f64) -> Result<u32> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    for g in [gamma1, gamma2] {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::param(format!("selectivity must lie in (0, 1], got {g}")));
        }
    }
    check_delta(delta)?;
    let d = (theta * theta * gamma1.min(gamma2) * n as f64 - (1.0 / delta).log2()).floor();
    if d < 1.0 {
        return Err(Error::Unsatisfiable(format!(
            "largest admissible VC dimension is {d}, below 1"
        )));
    }
    Ok(d as u32)
}

/// `exp(-2 m eps^2)`, the single-bar tail bound as printed.
pub fn chernoff_tail(m: u64, eps: f64) -> f64 {
    (-2.0 * m as f64 * eps * eps).exp()
}

/// Two-sided variant `2 exp(-2 m eps^2)`, capped at 1.
pub fn chernoff_tail_two_sided(m: u64, eps: f64) -> f64 {
    (2.0 * chernoff_tail(m, eps)).min(1.0)
}

/// Union bound over `k` simultaneous bars: `k exp(-2 m eps^2)`.
pub fn chernoff_union_tail(k: u64, m: u64, eps: f64) -> f64 {
    k as f64 * chernoff_tail(m, eps)
}

/// Radius at which the union bound over `k` bars equals `delta`:
/// `sqrt(ln(k / delta) / (2m))`.
pub fn chernoff_epsilon(m: u64, delta: f64, k: u64) -> Result<f64> {
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    Ok(((k as f64 / delta).ln() / (2.0 * m as f64)).sqrt())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0, 1), got {delta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(features: &[(u32, u32)]) -> QueryClassSpec {
        QueryClassSpec {
            features: features
                .iter()
                .enumerate()
                .map(|(i, &(alpha, beta))| FeatureComplexity { name: format!("X{i}"), alpha, beta })
                .collect(),
        }
    }

    #[test]
    fn lemma_sum() {
        assert_eq!(vc_dimension_bound(&spec(&[(1, 0)])).unwrap(), 2);
        assert_eq!(vc_dimension_bound(&spec(&[(0, 1)])).unwrap(), 1);
        assert_eq!(vc_dimension_bound(&spec(&[(2, 0), (0, 1)])).unwrap(), 5);
        assert!(matches!(vc_dimension_bound(&spec(&[(0, 0)])), Err(Error::EmptyQueryClass)));
        assert!(matches!(vc_dimension_bound(&spec(&[])), Err(Error::EmptyQueryClass)));
    }

    #[test]
    fn spec_json() {
        let s = QueryClassSpec::from_json(r#"{"features":[{"name":"X1","alpha":1,"beta":0}]}"#).unwrap();
        assert_eq!(vc_dimension_bound(&s).unwrap(), 2);
    }

    #[test]
    fn operator_complexity() {
        let fc = |kind, ops: &[Op]| {
            let f = FeatureComplexity::for_operators("x", kind, ops);
            (f.alpha, f.beta)
        };
        assert_eq!(fc(FeatureKind::DiscreteOrdered, &[Op::Le]), (0, 1));
        assert_eq!(fc(FeatureKind::DiscreteOrdered, &[Op::Le, Op::Lt]), (0, 1));
        assert_eq!(fc(FeatureKind::DiscreteOrdered, &[Op::Le, Op::Ge]), (0, 2));
        assert_eq!(fc(FeatureKind::DiscreteOrdered, &[Op::Eq]), (1, 0));
        assert_eq!(fc(FeatureKind::DiscreteOrdered, &[Op::Ne]), (0, 2));
        assert_eq!(fc(FeatureKind::Categorical, &[Op::Le]), (0, 0));
        assert_eq!(fc(FeatureKind::Categorical, &[Op::Le, Op::Eq]), (1, 0));
    }

    #[test]
    fn epsilon_bar_values() {
        let e = epsilon_bar(4, 0.05, 100_000, 0.5).unwrap();
        assert!((e.value - 0.006451).abs() < 1e-6, "{}", e.value);
        let ln = BoundConfig::new(4, 0.05).unwrap().with_log_base(LogBase::Natural);
        assert!((ln.epsilon_bar(100_000).unwrap().value - 0.005914).abs() < 1e-6);
        let e = epsilon_bar(10, 0.05, 1200, 0.5).unwrap();
        assert!((e.value - 0.07725).abs() < 1e-5, "{}", e.value);
        assert!(matches!(epsilon_bar(4, 0.05, 0, 0.5), Err(Error::EmptySupport)));
        assert!(epsilon_bar(4, 1.0, 10, 0.5).is_err());
        assert!(epsilon_bar(0, 0.5, 10, 0.5).is_err());
    }

    #[test]
    fn epsilon_bar_clamps_for_reporting() {
        let e = epsilon_bar(10, 0.05, 1, 0.5).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.raw > 1.0);
        assert!(epsilon_bar(4, 0.05, u64::MAX / 2, 0.5).unwrap().value < 1e-8);
    }

    #[test]
    fn min_selectivity_values() {
        let g = min_selectivity_threshold(4, 0.05, 100_000).unwrap();
        assert!((g - 4.161e-5).abs() < 1e-8, "{g}");
        let g = min_selectivity_threshold(10, 0.05, 10_000).unwrap();
        assert!((g - 7.161e-4).abs() < 1e-7, "{g}");
        let g = min_selectivity_threshold(4, 1.0 - 1e-12, 1000).unwrap();
        assert!((g - 4.0 / 2000.0).abs() < 1e-9);
    }

    #[test]
    fn max_vc_values() {
        assert_eq!(max_vc_for_requirements(0.2, 0.1, 0.3, 10_000, 0.05).unwrap(), 35);
        assert_eq!(max_vc_for_requirements(1.0, 1.0, 1.0, 100, 0.5).unwrap(), 99);
        assert!(matches!(
            max_vc_for_requirements(0.01, 0.01, 0.01, 1000, 0.05),
            Err(Error::Unsatisfiable(_))
        ));
    }

    #[test]
    fn chernoff_values() {
        assert!((chernoff_tail(1000, 0.05) - (-5.0f64).exp()).abs() < 1e-15);
        assert!((chernoff_tail(1000, 0.05) - 6.738e-3).abs() < 1e-6);
        assert_eq!(chernoff_tail(1000, 0.0), 1.0);
        assert!((chernoff_union_tail(10, 1000, 0.05) - 6.738e-2).abs() < 1e-5);
        assert!((chernoff_tail_two_sided(1000, 0.05) - 2.0 * (-5.0f64).exp()).abs() < 1e-15);
        assert!((chernoff_epsilon(1000, 0.05, 1).unwrap() - 0.03870).abs() < 1e-5);
        assert!((chernoff_epsilon(1000, 0.05, 100).unwrap() - 0.06164).abs() < 1e-5);
        assert!(chernoff_epsilon(1000, 0.05, 200).unwrap() > chernoff_epsilon(1000, 0.05, 100).unwrap());
    }
}
