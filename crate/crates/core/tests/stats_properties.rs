use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use vizrec_core::experiments::rng;
use vizrec_core::stats::{
    bonferroni, chi2_cdf, chi2_isf, chi2_sf, chi_squared_gof, min_samples_chi2, noncentral_chi2_cdf,
    noncentral_chi2_sf,
};

proptest! {
    #[test]
    fn central_cdf_matches_statrs(dof in 1u32..60, x in 0.01f64..150.0) {
        let oracle = ChiSquared::new(dof as f64).unwrap().cdf(x);
        prop_assert!((chi2_cdf(x, dof as f64) - oracle).abs() < 1e-9, "dof {} x {}", dof, x);
        prop_assert!((chi2_cdf(x, dof as f64) + chi2_sf(x, dof as f64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isf_inverts_sf(dof in 1u32..60, p in 1e-9f64..0.5) {
        let x = chi2_isf(p, dof as f64);
        prop_assert!((chi2_sf(x, dof as f64) - p).abs() / p < 1e-6);
    }

    #[test]
    fn noncentral_reduces_to_central(dof in 1u32..30, x in 0.01f64..80.0) {
        prop_assert!((noncentral_chi2_cdf(x, dof as f64, 0.0) - chi2_cdf(x, dof as f64)).abs() < 1e-12);
    }

    #[test]
    fn noncentral_cdf_decreases_in_lambda(dof in 1u32..20, x in 0.5f64..60.0, lambda in 0.0f64..40.0) {
        prop_assert!(noncentral_chi2_cdf(x, dof as f64, lambda + 1.0) <= noncentral_chi2_cdf(x, dof as f64, lambda) + 1e-12);
    }
}

#[test]
fn noncentral_cdf_agrees_with_monte_carlo() {
    const DRAWS: usize = 1_000_000;
    let mut r = rng(2024);
    for dof in [1usize, 3, 10] {
        for lambda in [0.5f64, 5.0, 20.0] {
            // Put all noncentrality on the first coordinate.
            let shift = lambda.sqrt();
            let mut samples: Vec<f64> = (0..DRAWS)
                .map(|_| {
                    (0..dof)
                        .map(|i| {
                            let z: f64 = StandardNormal.sample(&mut r);
                            let z = if i == 0 { z + shift } else { z };
                            z * z
                        })
                        .sum()
                })
                .collect();
            samples.sort_by(f64::total_cmp);
            let mean = dof as f64 + lambda;
            for x in [mean] {
                let empirical = samples.partition_point(|&s| s <= x) as f64 / DRAWS as f64;
                let exact = noncentral_chi2_cdf(x, dof as f64, lambda);
                let se = (exact * (1.0 - exact) / DRAWS as f64).sqrt().max(1.0 / DRAWS as f64);
                assert!(
                    (empirical - exact).abs() <= 3.0 * se,
                    "dof {dof} lambda {lambda} x {x}: exact {exact} empirical {empirical} se {se}"
                );
            }
        }
    }
}

#[test]
fn noncentral_reference_values() {
    assert!((noncentral_chi2_sf(5.0, 3.0, 2.0) - 0.406_594_8).abs() < 1e-6);
    // (dof, lambda, x, cdf) computed with scipy.stats.ncx2.
    let table = [
        (1.0, 0.5, 0.75, 0.505_289_398_852_911),
        (1.0, 20.0, 52.5, 0.997_227_604_662_154),
        (3.0, 5.0, 4.0, 0.233_191_486_110_309_76),
        (3.0, 20.0, 34.5, 0.886_064_582_041_698_4),
        (10.0, 5.0, 22.5, 0.877_850_942_029_757_1),
        (10.0, 20.0, 15.0, 0.045_644_426_336_193_096),
    ];
    for (dof, lambda, x, cdf) in table {
        assert!((noncentral_chi2_cdf(x, dof, lambda) - cdf).abs() < 1e-10, "{dof} {lambda} {x}");
    }
}

#[test]
fn min_samples_matches_quantile_oracle() {
    let q = ChiSquared::new(1.0).unwrap().inverse_cdf(1.0 - 5e-8);
    let oracle = (q / 0.1).ceil() as i64;
    let got = min_samples_chi2(0.1, 2, 5e-8).unwrap() as i64;
    assert!((got - oracle).abs() <= 2, "{got} vs {oracle}");
    assert!((got - 297).abs() <= 2);
}

#[test]
fn gof_is_calibrated_under_the_null() {
    let reference = [0.4, 0.3, 0.2, 0.1];
    let alpha = 0.05;
    let mut r = rng(99);
    let trials = 10_000;
    let mut rejections = 0;
    for _ in 0..trials {
        let mut counts = [0u64; 4];
        for _ in 0..200 {
            let u: f64 = r.random();
            let mut acc = 0.0;
            let bin = reference.iter().position(|&p| {
                acc += p;
                u < acc
            });
            counts[bin.unwrap_or(3)] += 1;
        }
        if chi_squared_gof(&reference, &counts, alpha).unwrap().reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!(rate <= alpha + 0.02, "{rate}");
}

#[test]
fn bonferroni_anchor() {
    assert!((bonferroni(0.05, 1967).unwrap() - 2.542e-5).abs() < 5e-9);
    let m = (0.05f64 / 2.54e-5).floor() as i64;
    assert!((m - 1968).abs() <= 1);
}
