//! Classical testing baselines: chi-squared goodness of fit, Bonferroni
//! correction, a distance-threshold test on the noncentral chi-squared
//! distribution, and the sample size needed for a chi-squared rejection.

mod chi2;
mod special;

pub use chi2::{
    chi2_cdf, chi2_isf, chi2_quantile, chi2_sf, noncentral_chi2_cdf, noncentral_chi2_sf, NONCENTRAL_TAIL,
};
pub use special::{gamma_p, gamma_q, ln_gamma};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum expected count per bin before the chi-squared approximation is
/// considered reliable.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    /// `p_value < alpha`.
    pub reject: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Per-test level `alpha / hypotheses`.
pub fn bonferroni(alpha: f64, hypotheses: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if hypotheses == 0 {
        return Err(Error::param("number of hypotheses must be at least 1"));
    }
    Ok(alpha / hypotheses as f64)
}

/// Pearson goodness-of-fit test of `observed` counts against `reference`
/// probabilities. Bins with zero reference mass and no observations are
/// ignored; a zero-mass bin that received observations makes the test
/// ill-posed.
pub fn chi_squared_gof(reference: &[f64], observed: &[u64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_reference(reference)?;
    if reference.len() != observed.len() {
        return Err(Error::MisalignedSupports);
    }
    let m: u64 = observed.iter().sum();
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    let m = m as f64;

    let mut statistic = 0.0;
    let mut bins = 0u32;
    let mut sparse = 0usize;
    for (k, (&p, &obs)) in reference.iter().zip(observed).enumerate() {
        if p == 0.0 {
            if obs > 0 {
                return Err(Error::IllPosed(format!(
                    "bin {k} has zero reference probability but {obs} observations"
                )));
            }
            continue;
        }
        let expected = m * p;
        if expected < MIN_EXPECTED_COUNT {
            sparse += 1;
        }
        statistic += (obs as f64 - expected).powi(2) / expected;
        bins += 1;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { chi2_sf(statistic, dof as f64) };
    let mut warnings = Vec::new();
    if sparse > 0 {
        warnings.push(format!(
            "{sparse} bin(s) have expected count below {MIN_EXPECTED_COUNT}; the chi-squared approximation may be poor"
        ));
    }
    Ok(TestResult { statistic, dof, p_value, reject: p_value < alpha, warnings })
}

/// Tests whether the chi-squared distance `sum_k (p_k - q_k)^2 / p_k`
/// between `reference` and the `observed` pmf (estimated from `support`
/// rows) exceeds `threshold`. The statistic `m * distance` is referred to a
/// noncentral chi-squared with noncentrality `m * threshold`; rejecting
/// means the distance is significantly larger than the threshold.
pub fn modified_chi2_test(
    reference: &[f64],
    observed: &[f64],
    support: u64,
    threshold: f64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_reference(reference)?;
    if reference.len() != observed.len() {
        return Err(Error::MisalignedSupports);
    }
    if support == 0 {
        return Err(Error::EmptySupport);
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::param(format!("distance threshold must be non-negative, got {threshold}")));
    }
    if let Some(k) = reference.iter().position(|&p| p == 0.0) {
        return Err(Error::IllPosed(format!("bin {k} has zero reference probability")));
    }
    let m = support as f64;
    let statistic = m * chi2_distance(reference, observed);
    let dof = reference.len().saturating_sub(1) as u32;
    let p_value = if dof == 0 { 1.0 } else { noncentral_chi2_sf(statistic, dof as f64, m * threshold) };
    Ok(TestResult { statistic, dof, p_value, reject: p_value < alpha, warnings: Vec::new() })
}

/// `sum_k (p_k - q_k)^2 / p_k` over bins with `p_k > 0`.
pub fn chi2_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| (a - b).powi(2) / a).sum()
}

/// Smallest sample size at which a perfect estimate with chi-squared
/// distance `distance` over `bins` categories is rejected at level `alpha`:
/// `ceil(q / distance)` where `q` is the upper-`alpha` quantile of a
/// chi-squared with `bins - 1` degrees of freedom.
pub fn min_samples_chi2(distance: f64, bins: u32, alpha: f64) -> Result<u64> {
    check_alpha(alpha)?;
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::param(format!("distance must be positive, got {distance}")));
    }
    if bins < 2 {
        return Err(Error::param("at least two bins are required"));
    }
    let q = chi2_isf(alpha, (bins - 1) as f64);
    Ok((q / distance).ceil() as u64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("significance level must lie in (0, 1), got {alpha}")))
    }
}

fn check_reference(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::param("reference pmf is empty"));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::param("reference probabilities must lie in [0, 1]"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::param(format!("reference pmf sums to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM4: [f64; 4] = [0.25; 4];

    #[test]
    fn gof_examples() {
        let r = chi_squared_gof(&UNIFORM4, &[25, 25, 25, 25], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
        assert_eq!(r.dof, 3);

        let r = chi_squared_gof(&UNIFORM4, &[30, 20, 25, 25], 0.05).unwrap();
        assert!((r.statistic - 2.0).abs() < 1e-12);
        assert!((r.p_value - 0.572_406_7).abs() < 1e-6);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn gof_errors_and_warnings() {
        assert!(matches!(
            chi_squared_gof(&[0.5, 0.5, 0.0], &[1, 1, 1], 0.05),
            Err(Error::IllPosed(_))
        ));
        let r = chi_squared_gof(&[0.5, 0.5, 0.0], &[2, 3, 0], 0.05).unwrap();
        assert_eq!(r.dof, 1);
        assert_eq!(r.warnings.len(), 1);
        assert!(matches!(chi_squared_gof(&UNIFORM4, &[0; 4], 0.05), Err(Error::EmptySupport)));
        assert!(matches!(chi_squared_gof(&UNIFORM4, &[1; 3], 0.05), Err(Error::MisalignedSupports)));
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni(0.05, 1967).unwrap() - 2.542e-5).abs() < 1e-8);
        assert_eq!(bonferroni(0.05, 1).unwrap(), 0.05);
        assert!((bonferroni(0.05, 1_000_000).unwrap() - 5e-8).abs() < 1e-20);
        assert!(bonferroni(0.05, 0).is_err());
        assert!(bonferroni(1.5, 2).is_err());
    }

    #[test]
    fn bonferroni_rejection_limit() {
        let p: f64 = 2.54e-5;
        let largest = (0.05 / p).floor() as u64;
        assert!(p < bonferroni(0.05, largest).unwrap());
        assert!(p >= bonferroni(0.05, largest + 1).unwrap());
        assert!(p < bonferroni(0.05, 1967).unwrap());
    }

    #[test]
    fn modified_reduces_to_gof() {
        let counts = [30u64, 20, 25, 25];
        let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / 100.0).collect();
        let a = chi_squared_gof(&UNIFORM4, &counts, 0.05).unwrap();
        let b = modified_chi2_test(&UNIFORM4, &pmf, 100, 0.0, 0.05).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
        assert!((a.p_value - b.p_value).abs() < 1e-12);

        let same = modified_chi2_test(&UNIFORM4, &UNIFORM4, 1000, 0.01, 0.05).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        assert!(matches!(
            modified_chi2_test(&[1.0, 0.0], &[1.0, 0.0], 10, 0.0, 0.05),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn min_samples_examples() {
        let n = min_samples_chi2(0.1, 2, 5e-8).unwrap();
        assert_eq!(n, 298);
        let half = min_samples_chi2(0.2, 2, 5e-8).unwrap();
        assert!((half as i64 - (n / 2) as i64).abs() <= 1);
        assert!(min_samples_chi2(0.1, 1, 0.05).is_err());
        assert!(min_samples_chi2(0.0, 2, 0.05).is_err());
    }
}
