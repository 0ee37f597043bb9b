//! Central and noncentral chi-squared distributions.

use super::special::{gamma_p, gamma_q, ln_gamma};

/// Poisson mass left unsummed by the noncentral series.
pub const NONCENTRAL_TAIL: f64 = 1e-12;

/// Absolute tolerance on the quantile bracket.
const QUANTILE_TOL: f64 = 1e-10;

pub fn chi2_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_p(dof / 2.0, x / 2.0)
}

/// Upper tail `P(X > x)`.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof / 2.0, x / 2.0)
}

/// `x` with `chi2_sf(x, dof) = p`, found by bisection.
pub fn chi2_isf(p: f64, dof: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    if p <= 0.0 {
        return f64::INFINITY;
    }
    let mut hi = dof.max(1.0);
    while chi2_sf(hi, dof) > p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, dof) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x` with `chi2_cdf(x, dof) = q`.
pub fn chi2_quantile(q: f64, dof: f64) -> f64 {
    chi2_isf(1.0 - q, dof)
}

/// Noncentral chi-squared CDF as a Poisson(`lambda / 2`) mixture of
/// central CDFs with `dof + 2j` degrees of freedom.
pub fn noncentral_chi2_cdf(x: f64, dof: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 || x <= 0.0 {
        return chi2_cdf(x, dof);
    }
    poisson_mixture(lambda, |j| chi2_cdf(x, dof + 2.0 * j as f64)).clamp(0.0, 1.0)
}

pub fn noncentral_chi2_sf(x: f64, dof: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 || x <= 0.0 {
        return chi2_sf(x, dof);
    }
    poisson_mixture(lambda, |j| chi2_sf(x, dof + 2.0 * j as f64)).clamp(0.0, 1.0)
}

/// `sum_j Pois(j; lambda/2) f(j)`, summed outward from the Poisson mode
/// until the unvisited mass drops below [`NONCENTRAL_TAIL`].
fn poisson_mixture(lambda: f64, f: impl Fn(u64) -> f64) -> f64 {
    let mean = lambda / 2.0;
    let weight = |j: u64| (-mean + j as f64 * mean.ln() - ln_gamma(j as f64 + 1.0)).exp();
    let mode = mean.floor() as u64;

    let w0 = weight(mode);
    let mut mass = w0;
    let mut total = w0 * f(mode);
    let (mut down, mut up) = (mode, mode);
    let (mut w_down, mut w_up) = (w0, w0);
    while 1.0 - mass > NONCENTRAL_TAIL {
        // Step toward whichever neighbour carries more weight.
        let next_down = if down > 0 { w_down * down as f64 / mean } else { 0.0 };
        let next_up = w_up * mean / (up + 1) as f64;
        if next_down <= 0.0 && next_up < f64::MIN_POSITIVE {
            break;
        }
        if next_down >= next_up {
            down -= 1;
            w_down = next_down;
            mass += w_down;
            total += w_down * f(down);
        } else {
            up += 1;
            w_up = next_up;
            mass += w_up;
            total += w_up * f(up);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_reference_values() {
        // scipy.stats.chi2.sf
        assert!((chi2_sf(2.0, 3.0) - 0.572_406_7).abs() < 1e-7);
        assert!((chi2_sf(48.0, 15.0) - 2.543e-5).abs() < 1e-8);
        assert!((chi2_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-12);
        assert!((chi2_cdf(2.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn quantiles() {
        assert!((chi2_isf(5e-8, 1.0) - 29.716_785_5).abs() < 1e-5, "{}", chi2_isf(5e-8, 1.0));
        assert!((chi2_quantile(0.95, 1.0) - 3.841_458_8).abs() < 1e-6);
        assert!((chi2_quantile(0.95, 9.0) - 16.918_977_6).abs() < 1e-6);
        assert_eq!(chi2_isf(1.0, 3.0), 0.0);
        assert_eq!(chi2_isf(0.0, 3.0), f64::INFINITY);
    }

    #[test]
    fn noncentral_reduces_to_central_at_zero() {
        for x in [0.5, 2.0, 10.0] {
            assert_eq!(noncentral_chi2_sf(x, 3.0, 0.0), chi2_sf(x, 3.0));
        }
    }

    #[test]
    fn noncentral_reference_values() {
        // scipy.stats.ncx2.sf(x, df, nc)
        assert!((noncentral_chi2_sf(5.0, 3.0, 2.0) - 0.406_594_8).abs() < 1e-6, "{}", noncentral_chi2_sf(5.0, 3.0, 2.0));
        assert!((noncentral_chi2_cdf(100.0, 1.0, 100.0) - 0.5).abs() < 1e-6, "{}", noncentral_chi2_cdf(100.0, 1.0, 100.0));
        let sum = noncentral_chi2_cdf(12.0, 9.0, 10.0) + noncentral_chi2_sf(12.0, 9.0, 10.0);
        assert!((sum - 1.0).abs() < 1e-11);
    }

    #[test]
    fn large_noncentrality_is_finite() {
        let p = noncentral_chi2_sf(1.0e5, 3.0, 1.0e5);
        assert!(p > 0.3 && p < 0.7, "{p}");
    }
}
