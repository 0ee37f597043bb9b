use serde_json::json;
use vizrec_core::recommend::{BaselineSet, RecommendationSet};
use vizrec_core::table::Table;

type CliResult<T> = Result<T, String>;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".into())
}

/// Left-aligned text columns separated by two spaces.
fn grid(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

pub fn ingest(table: &Table, as_json: bool) -> CliResult<String> {
    if as_json {
        let columns: Vec<_> = table
            .columns()
            .map(|c| {
                let s = c.stats();
                json!({"name": c.name(), "kind": c.kind(), "distinct": s.distinct, "nulls": s.nulls, "min": s.min, "max": s.max})
            })
            .collect();
        let doc = json!({"name": table.name(), "n": table.row_count(), "columns": columns});
        return serde_json::to_string_pretty(&doc).map(|s| s + "\n").map_err(|e| e.to_string());
    }
    let rows: Vec<Vec<String>> = table
        .columns()
        .map(|c| {
            let s = c.stats();
            vec![c.name().into(), c.kind().to_string(), s.distinct.to_string(), s.nulls.to_string(), opt(s.min), opt(s.max)]
        })
        .collect();
    Ok(format!("n={}, {} columns\n", table.row_count(), table.columns().len())
        + &grid(&["column", "kind", "distinct", "nulls", "min", "max"], &rows))
}

pub fn recommendations_table(set: &RecommendationSet) -> String {
    let mut out = format!(
        "reference: {} (support {}, epsilon {:.5})\nd = {}, delta = {}, gamma_min = {:.6}\n{} safe recommendations\n",
        set.reference.description,
        set.reference.pmf.support,
        set.reference.epsilon,
        set.bound.d,
        set.bound.delta,
        set.gamma_min,
        set.recommendations.len()
    );
    if set.recommendations.is_empty() {
        return out;
    }
    let rows: Vec<Vec<String>> = set
        .recommendations
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                format!("{:.5}", r.distance),
                format!("{:.5}", r.uncertainty),
                format!("{:.5}", r.interest),
                r.support.to_string(),
                r.description.clone(),
            ]
        })
        .collect();
    out.push_str(&grid(&["rank", "dist", "eps_sum", "interest", "support", "predicate"], &rows));
    out
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for row in rows {
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

pub fn recommendations_csv(set: &RecommendationSet) -> CliResult<String> {
    write_csv(
        &[
            "rank",
            "description",
            "predicate",
            "distance",
            "epsilon_reference",
            "epsilon_candidate",
            "uncertainty",
            "interest",
            "support",
            "selectivity",
        ],
        set.recommendations.iter().enumerate().map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.description.clone(),
                r.predicate.canonical_json(),
                r.distance.to_string(),
                r.epsilon_reference.to_string(),
                r.epsilon_candidate.to_string(),
                r.uncertainty.to_string(),
                r.interest.to_string(),
                r.support.to_string(),
                r.selectivity.to_string(),
            ]
        }),
    )
}

pub fn baseline_table(set: &BaselineSet) -> String {
    let mut out = format!(
        "reference: {}\n{} hypotheses, per-test level {:e}, {} ill-posed\n{} rejections\n",
        set.reference.description,
        set.hypotheses,
        set.level,
        set.ill_posed,
        set.discoveries.len()
    );
    if set.discoveries.is_empty() {
        return out;
    }
    let rows: Vec<Vec<String>> = set
        .discoveries
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                format!("{:.4}", r.statistic),
                format!("{:.3e}", r.p_value),
                format!("{:.5}", r.distance),
                r.support.to_string(),
                r.description.clone(),
            ]
        })
        .collect();
    out.push_str(&grid(&["rank", "statistic", "p_value", "dist", "support", "predicate"], &rows));
    out
}

pub fn baseline_csv(set: &BaselineSet) -> CliResult<String> {
    write_csv(
        &["rank", "description", "predicate", "statistic", "dof", "p_value", "distance", "support", "selectivity"],
        set.discoveries.iter().enumerate().map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.description.clone(),
                r.predicate.canonical_json(),
                r.statistic.to_string(),
                r.dof.to_string(),
                r.p_value.to_string(),
                r.distance.to_string(),
                r.support.to_string(),
                r.selectivity.to_string(),
            ]
        }),
    )
}
