use super::*;

#[test]
fn random_data_recommends_nothing() {
    let r = run_random_data_experiment(100_000, 7, None, 0.05, LogBase::Two).unwrap();
    assert_eq!(r.summary["recommendations"], json!(0));
    assert_eq!(r.summary["d"], json!(4));
    assert!((r.summary_f64("eps_min").unwrap() - 0.00645).abs() < 1e-5);
    assert!((r.summary_f64("eps_min_ln").unwrap() - 0.00592).abs() < 1e-5);
    assert_eq!(r.summary["raw_predicates"], json!(1000));
    let scatter = r.series("candidates").unwrap();
    assert!(!scatter.rows.is_empty());
    assert!(scatter.column("safe").unwrap().iter().all(|&s| s == 0.0));
}

#[test]
fn threshold_curve_is_convex_and_decreasing() {
    let r = run_random_data_experiment(20_000, 1, None, 0.05, LogBase::Two).unwrap();
    let curve = r.series("threshold").unwrap();
    let g = curve.column("selectivity").unwrap();
    let e = curve.column("epsilon_candidate").unwrap();
    for i in 1..e.len() {
        assert!(e[i] <= e[i - 1]);
    }
    for i in 1..e.len() - 1 {
        let left = (e[i] - e[i - 1]) / (g[i] - g[i - 1]);
        let right = (e[i + 1] - e[i]) / (g[i + 1] - g[i]);
        assert!(right >= left - 1e-12, "not convex at {i}");
    }
}

#[test]
fn chi2_and_vc_disagree_on_the_fixture() {
    let r = run_chi2_vs_vc_example(1200, 10_000, 10, 0.05).unwrap();
    assert!((r.summary_f64("gap").unwrap() - 0.1).abs() < 1e-12);
    let p = r.summary_f64("p_value").unwrap();
    assert!((p - 2.543e-5).abs() / 2.54e-5 < 0.2, "{p}");
    let max_m = r.summary_f64("max_hypotheses").unwrap();
    assert!((max_m - 1967.0).abs() <= 2.0, "{max_m}");
    assert_eq!(r.summary["chi2_rejects_at_max_hypotheses"], json!(true));
    assert_eq!(r.summary["chi2_rejects_above_max_hypotheses"], json!(false));
    assert_eq!(r.summary["vc_safe"], json!(false));
    assert_eq!(r.summary["vc_safe_doubled"], json!(true));
    assert!((r.summary_f64("epsilon_candidate").unwrap() - 0.07725).abs() < 1e-5);
    let sweep = r.series("gap-sweep").unwrap();
    let safe = sweep.column("vc_safe").unwrap();
    let gaps = sweep.column("gap").unwrap();
    for (g, s) in gaps.iter().zip(&safe) {
        assert_eq!(*s == 1.0, *g > r.summary_f64("uncertainty").unwrap());
    }
}

#[test]
fn min_samples_surface() {
    let bins: Vec<u32> = (2..=100).collect();
    let r = run_min_samples_curve(&bins, &DEFAULT_DISTANCE_GRID, 5e-8).unwrap();
    assert_eq!(r.summary["n_min_k2_d0.1"], json!(298));
    let s = &r.series[0];
    for k in &bins {
        let row: Vec<&Vec<f64>> = s.rows.iter().filter(|row| row[0] == *k as f64).collect();
        for w in row.windows(2) {
            assert!(w[1][2] <= w[0][2], "n_min must not grow with distance");
        }
    }
    let at = |k: f64, d: f64| s.rows.iter().find(|r| r[0] == k && r[1] == d).unwrap()[2];
    assert!(at(100.0, 0.1) >= at(50.0, 0.1));
    assert!(at(10.0, 0.3) < 1000.0, "hundreds of samples suffice");
}

#[test]
fn chernoff_and_vc_curves() {
    let r = run_chernoff_vs_vc(100_000, 3, 5, 0.05).unwrap();
    let s = &r.series[0];
    assert_eq!(s.columns.len(), 9);
    assert!(r.summary_f64("max_ratio_vc_d1_to_chernoff_k1").unwrap() < 1.35);
    assert!(r.summary_f64("min_ratio_chernoff_k1000_to_vc_d5").unwrap() > 1.0);
    assert_eq!(r.summary["observed_above_vc"], json!(0));
    let m = s.column("m").unwrap();
    assert_eq!(m[0], 10.0);
    assert_eq!(*m.last().unwrap(), 100_000.0);
}

#[test]
fn restriction_helps() {
    let table = gen_restriction_dataset(10_000, 5, 0.09);
    let r = run_search_space_restriction(&table, "agg", 5, 0.05).unwrap();
    assert_eq!(r.summary["d_before"], json!(8));
    assert_eq!(r.summary["d_after"], json!(4));
    let before = r.summary["recommendations_before"].as_u64().unwrap();
    let after = r.summary["recommendations_after"].as_u64().unwrap();
    assert!(after >= before);
    let c = &r.series[0];
    for row in &c.rows {
        assert!(row[2] <= row[1]);
    }
    let dropped: Vec<&str> =
        r.summary["dropped"].as_array().unwrap().iter().map(|d| d["feature"].as_str().unwrap()).collect();
    assert_eq!(dropped, vec!["row_id", "const_a", "const_b", "x2_scaled"]);
}

#[test]
fn reruns_are_identical() {
    for name in EXPERIMENTS {
        let opts = RunOptions { n: Some(3000), ..Default::default() };
        let a = run_named(name, &opts).unwrap();
        let b = run_named(name, &opts).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{name}");
        assert_eq!(a.to_csv(), b.to_csv(), "{name}");
    }
    assert!(run_named("nope", &RunOptions::default()).is_err());
}
