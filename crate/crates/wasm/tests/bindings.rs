use vizrec_core::vc::BoundConfig;
use vizrec_wasm::{bound_comparison_curves, epsilon_curve_points, recommend_from_csv, sample_dataset};

#[test]
fn epsilon_curve_matches_direct_bound() {
    let points = epsilon_curve_points(100_000, 4, 0.05, false, 20).unwrap();
    assert_eq!(points.len(), 20);
    let bound = BoundConfig::new(4, 0.05).unwrap();
    let reference = bound.epsilon_bar(100_000).unwrap().value;
    for p in &points {
        let eps = bound.epsilon_bar(p.support).unwrap().value;
        assert_eq!(p.epsilon_candidate, eps);
        assert!((p.uncertainty - reference - eps).abs() < 1e-15);
    }
    // full selectivity: both radii are the table radius
    let last = points.last().unwrap();
    assert_eq!(last.support, 100_000);
    assert!((last.uncertainty - 2.0 * 0.006451).abs() < 1e-5);
    for w in points.windows(2) {
        assert!(w[1].uncertainty <= w[0].uncertainty);
    }
}

#[test]
fn natural_log_curve_is_tighter() {
    let two = epsilon_curve_points(10_000, 3, 0.05, false, 10).unwrap();
    let ln = epsilon_curve_points(10_000, 3, 0.05, true, 10).unwrap();
    for (a, b) in two.iter().zip(&ln) {
        assert!(b.uncertainty < a.uncertainty);
    }
}

#[test]
fn bound_comparison_columns_and_order() {
    let curves = bound_comparison_curves(100_000, 5, 0.05).unwrap();
    assert_eq!(curves.columns.last().unwrap(), "vc_d5");
    assert_eq!(curves.rows.first().unwrap()[0], 10.0);
    assert_eq!(curves.rows.last().unwrap()[0], 100_000.0);
    for row in &curves.rows {
        assert_eq!(row.len(), curves.columns.len());
        // Chernoff grows with the number of hypotheses, VC with d
        assert!(row[1] < row[2] && row[2] < row[3] && row[3] < row[4]);
        assert!(row[5] < row[6]);
    }
    assert!(bound_comparison_curves(5, 5, 0.05).is_err());
}

#[test]
fn recommend_on_planted_sample_finds_flag() {
    let csv = sample_dataset("planted", 20_000, 3).unwrap();
    let set = recommend_from_csv(&csv, "agg", "", 0.05, None, "<=,>=").unwrap();
    assert!(!set.recommendations.is_empty());
    assert!(set.recommendations[0].description.contains("flag"));
    for r in &set.recommendations {
        assert!(r.distance > r.uncertainty);
    }
}

#[test]
fn recommend_on_uniform_sample_is_empty() {
    let csv = sample_dataset("uniform", 20_000, 3).unwrap();
    let set = recommend_from_csv(&csv, "agg", "", 0.05, None, "<=").unwrap();
    assert!(set.recommendations.is_empty());
}

#[test]
fn bad_inputs_are_errors() {
    assert!(sample_dataset("nope", 10, 1).is_err());
    let csv = sample_dataset("uniform", 100, 1).unwrap();
    assert!(recommend_from_csv(&csv, "agg", "", 0.05, None, "~").is_err());
    assert!(recommend_from_csv(&csv, "agg", "{not json", 0.05, None, "<=").is_err());
    assert!(recommend_from_csv(&csv, "missing", "", 0.05, None, "<=").is_err());
    assert!(epsilon_curve_points(0, 4, 0.05, false, 10).is_err());
}
