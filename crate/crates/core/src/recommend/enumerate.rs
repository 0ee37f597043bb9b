//! Tree enumeration of candidate filters.
//!
//! Rows are first compressed into cells: one cell per distinct combination
//! of predicate-feature values and group-by bar, weighted by its row count.
//! Every predicate in the class is decided by those values alone, so a
//! predicate's row set is exactly a set of cells and all work below runs on
//! cell lists instead of rows.
//!
//! The tree assigns one clause per feature, level by level. A node whose
//! support is zero is excluded with all its refinements; a node whose
//! support is too small for any refinement to be safe is cut likewise.
//! Leaves selecting the same cells are merged into one candidate.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::{Clause, Connection, GroupBinning, Op, Predicate, DEFAULT_BUCKETS};
use crate::table::{canonical_bits, Column, FeatureKind, Table};

/// Candidate counts at each stage of the enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Predicates in the class before any exclusion.
    pub raw: u64,
    /// Predicates under a branch cut for too-small selectivity.
    pub pruned: u64,
    /// Predicates selecting no rows.
    pub zero_support: u64,
    /// Predicates folded into an equivalent candidate.
    pub equivalence_merged: u64,
    /// Distinct candidates left.
    pub candidates: u64,
}

/// Row data grouped by predicate-feature values and group-by bar.
#[derive(Debug, Clone)]
pub struct CellIndex {
    features: Vec<String>,
    /// `values[cell * features.len() + f]`.
    values: Vec<Option<f64>>,
    bins: Vec<Option<u32>>,
    counts: Vec<u64>,
    bin_labels: Vec<String>,
    rows: u64,
}

impl CellIndex {
    pub fn build(table: &Table, features: &[&str], group_by: &str, buckets: Option<usize>) -> Result<Self> {
        let columns: Vec<&Column> = features.iter().map(|f| table.column(f)).collect::<Result<_>>()?;
        let group = table.column(group_by)?;
        let binning = GroupBinning::for_column(group, buckets)?;

        let k = columns.len();
        let mut lookup: HashMap<(Vec<Option<u64>>, Option<u32>), u32> = HashMap::new();
        let mut index = CellIndex {
            features: features.iter().map(|s| s.to_string()).collect(),
            values: Vec::new(),
            bins: Vec::new(),
            counts: Vec::new(),
            bin_labels: binning.labels().to_vec(),
            rows: table.row_count() as u64,
        };
        for row in 0..table.row_count() {
            let key: Vec<Option<u64>> = columns.iter().map(|c| c.values()[row].map(canonical_bits)).collect();
            let bin = binning.bin(group.values()[row]).map(|b| b as u32);
            let next = index.counts.len() as u32;
            let cell = *lookup.entry((key, bin)).or_insert(next);
            if cell == next {
                index.values.extend(columns.iter().map(|c| c.values()[row]));
                index.bins.push(bin);
                index.counts.push(0);
            }
            index.counts[cell as usize] += 1;
        }
        debug_assert_eq!(index.values.len(), index.counts.len() * k);
        Ok(index)
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn cell_count(&self) -> usize {
        self.counts.len()
    }

    pub fn row_count(&self) -> u64 {
        self.rows
    }

    pub fn bin_labels(&self) -> &[String] {
        &self.bin_labels
    }

    pub fn all_cells(&self) -> Vec<u32> {
        (0..self.counts.len() as u32).collect()
    }

    fn value(&self, cell: u32, feature: usize) -> Option<f64> {
        self.values[cell as usize * self.features.len() + feature]
    }

    /// Rows covered by `cells`.
    pub fn rows(&self, cells: &[u32]) -> u64 {
        cells.iter().map(|&c| self.counts[c as usize]).sum()
    }

    /// Bar counts over `cells`; rows with a null group-by value are skipped.
    pub fn bar_counts(&self, cells: &[u32]) -> Vec<u64> {
        let mut out = vec![0u64; self.bin_labels.len()];
        for &c in cells {
            if let Some(b) = self.bins[c as usize] {
                out[b as usize] += self.counts[c as usize];
            }
        }
        out
    }

    /// Cells selected by `predicate`; every feature it names must be indexed.
    pub fn select(&self, predicate: &Predicate) -> Result<Vec<u32>> {
        let mut cells = self.all_cells();
        for conn in &predicate.connections {
            let f = self
                .features
                .iter()
                .position(|x| *x == conn.feature)
                .ok_or_else(|| Error::OutsideQueryClass(format!("feature `{}` is not in the class", conn.feature)))?;
            cells.retain(|&c| conn.matches(self.value(c, f)));
        }
        Ok(cells)
    }

    fn filter(&self, cells: &[u32], feature: usize, clause: &Clause) -> Vec<u32> {
        cells.iter().copied().filter(|&c| clause.matches(self.value(c, feature))).collect()
    }
}

/// Clause options for one feature, sentinel first.
pub fn clause_options(column: &Column, ops: &[Op], thresholds: Option<usize>) -> Vec<Clause> {
    let mut out = vec![Clause::sentinel()];
    let values: Vec<f64> = if column.kind() == FeatureKind::ContinuousOrdered {
        let stats = column.stats();
        match (stats.min, stats.max) {
            (Some(lo), Some(hi)) if hi > lo => {
                let k = thresholds.unwrap_or(DEFAULT_BUCKETS).max(2);
                let width = (hi - lo) / k as f64;
                (1..k).map(|i| lo + width * i as f64).collect()
            }
            _ => column.distinct_values(),
        }
    } else {
        column.distinct_values()
    };
    for &op in ops {
        if !column.kind().is_ordered() && !op.is_equality() {
            continue;
        }
        for &v in &values {
            let clause = Clause::new(op, v);
            if !out.contains(&clause) {
                out.push(clause);
            }
        }
    }
    out
}

/// A set of equivalent predicates and the cells they select.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub predicate: Predicate,
    pub cells: Vec<u32>,
    pub rows: u64,
    /// Number of enumerated predicates selecting these cells.
    pub equivalents: u64,
}

pub struct EnumerationPlan<'a> {
    pub index: &'a CellIndex,
    /// Clause options per indexed feature, sentinel first.
    pub options: Vec<Vec<Clause>>,
    /// Largest number of non-sentinel clauses per predicate.
    pub max_features: Option<usize>,
    /// Branches with at most this many rows are cut.
    pub prune_rows: Option<f64>,
    /// Upper limit on distinct candidates kept in memory.
    pub max_candidates: usize,
}

impl EnumerationPlan<'_> {
    /// Number of completions below a node at `level` with `budget` clauses left.
    fn completions(&self, level: usize, budget: usize, memo: &mut HashMap<(usize, usize), u64>) -> u64 {
        if level == self.options.len() {
            return 1;
        }
        if let Some(&v) = memo.get(&(level, budget)) {
            return v;
        }
        let mut total = self.completions(level + 1, budget, memo);
        if budget > 0 {
            let choices = (self.options[level].len() - 1) as u64;
            total = total.saturating_add(choices.saturating_mul(self.completions(level + 1, budget - 1, memo)));
        }
        memo.insert((level, budget), total);
        total
    }

    pub fn run(&self) -> Result<(Vec<Candidate>, EnumerationStats)> {
        let budget = self.max_features.unwrap_or(self.options.len()).min(self.options.len());
        let mut walk = Walk {
            plan: self,
            memo: HashMap::new(),
            stats: EnumerationStats::default(),
            classes: HashMap::new(),
            out: Vec::new(),
            choice: vec![0; self.options.len()],
        };
        walk.stats.raw = self.completions(0, budget, &mut walk.memo);
        let root = self.index.all_cells();
        let rows = self.index.rows(&root);
        walk.visit(0, budget, root, rows)?;

        let mut stats = walk.stats;
        let mut out = walk.out;
        stats.candidates = out.len() as u64;
        stats.equivalence_merged = out.iter().map(|c| c.equivalents - 1).sum();
        for c in &mut out {
            c.predicate = c.predicate.canonical();
        }
        Ok((out, stats))
    }
}

struct Walk<'p, 'a> {
    plan: &'p EnumerationPlan<'a>,
    memo: HashMap<(usize, usize), u64>,
    stats: EnumerationStats,
    /// Fingerprint of a cell list to candidates with that fingerprint.
    classes: HashMap<u64, Vec<usize>>,
    out: Vec<Candidate>,
    choice: Vec<usize>,
}

impl Walk<'_, '_> {
    fn visit(&mut self, level: usize, budget: usize, cells: Vec<u32>, rows: u64) -> Result<()> {
        let plan = self.plan;
        if level == plan.options.len() {
            return self.emit(cells, rows);
        }
        // Sentinel child: same cells, same budget.
        self.choice[level] = 0;
        self.visit(level + 1, budget, cells.clone(), rows)?;
        if budget == 0 {
            return Ok(());
        }
        for opt in 1..plan.options[level].len() {
            let child = plan.index.filter(&cells, level, &plan.options[level][opt]);
            let child_rows = plan.index.rows(&child);
            let below = plan.completions(level + 1, budget - 1, &mut self.memo);
            if child_rows == 0 {
                self.stats.zero_support += below;
                continue;
            }
            if matches!(plan.prune_rows, Some(limit) if child_rows as f64 <= limit) {
                self.stats.pruned += below;
                continue;
            }
            self.choice[level] = opt;
            self.visit(level + 1, budget - 1, child, child_rows)?;
        }
        self.choice[level] = 0;
        Ok(())
    }

    fn emit(&mut self, cells: Vec<u32>, rows: u64) -> Result<()> {
        let predicate = self.current_predicate();
        let mut hasher = DefaultHasher::new();
        cells.hash(&mut hasher);
        let key = hasher.finish();
        let bucket = self.classes.entry(key).or_default();
        if let Some(&i) = bucket.iter().find(|&&i| self.out[i].cells == cells) {
            let existing = &mut self.out[i];
            existing.equivalents += 1;
            if prefer(&predicate, &existing.predicate) {
                existing.predicate = predicate;
            }
            return Ok(());
        }
        if self.out.len() >= self.plan.max_candidates {
            return Err(Error::InstanceTooLarge(format!(
                "more than {} distinct candidates; restrict the query class",
                self.plan.max_candidates
            )));
        }
        bucket.push(self.out.len());
        self.out.push(Candidate { predicate, cells, rows, equivalents: 1 });
        Ok(())
    }

    fn current_predicate(&self) -> Predicate {
        let index = self.plan.index;
        Predicate::new(
            self.choice
                .iter()
                .enumerate()
                .filter(|(_, &opt)| opt != 0)
                .map(|(f, &opt)| Connection::new(index.features[f].clone(), vec![self.plan.options[f][opt]]))
                .collect(),
        )
        .canonical()
    }
}

/// Representative order: fewer clauses, then canonical JSON.
fn prefer(a: &Predicate, b: &Predicate) -> bool {
    (a.clause_count(), a.canonical_json()) < (b.clause_count(), b.canonical_json())
}
