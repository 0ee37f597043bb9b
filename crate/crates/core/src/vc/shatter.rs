//! Exhaustive shattering check for small point sets.
//!
//! Used as an independent check on the closed-form VC bound: the labelings a
//! query class induces on a handful of points are enumerated directly, and
//! the largest shattered subset is found by brute force.

use crate::error::{Error, Result};

use super::QueryClassSpec;

/// Point sets larger than this are rejected.
pub const MAX_ORACLE_POINTS: usize = 12;

/// Labelings as a bitset over all `2^n` masks.
struct MaskSet {
    bits: Vec<u64>,
}

impl MaskSet {
    fn new(n: usize) -> Self {
        MaskSet { bits: vec![0; ((1usize << n) + 63) / 64] }
    }

    fn insert(&mut self, m: u32) {
        self.bits[(m / 64) as usize] |= 1 << (m % 64);
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| (w * 64 + b) as u32)
        })
    }
}

/// Size of the largest subset of `points` shattered by the class.
///
/// `points[i][j]` is the coordinate of point `i` on the `j`-th feature of
/// `class`. A feature with `alpha` intervals and `beta` rays admits any
/// union of at most `alpha` closed intervals, a left ray when `beta >= 1`,
/// and a right ray when `beta >= 2`. A feature with no complexity places no
/// constraint.
pub fn shattering_oracle(class: &QueryClassSpec, points: &[Vec<f64>]) -> Result<u32> {
    let n = points.len();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::InstanceTooLarge(format!(
            "{n} points, oracle accepts at most {MAX_ORACLE_POINTS}"
        )));
    }
    let k = class.features.len();
    if let Some(p) = points.iter().find(|p| p.len() != k) {
        return Err(Error::param(format!("point has {} coordinates, class has {k} features", p.len())));
    }
    if n == 0 {
        return Ok(0);
    }
    let full = (1u32 << n) - 1;

    let mut hypotheses = vec![full];
    for (j, feature) in class.features.iter().enumerate() {
        let coords: Vec<f64> = points.iter().map(|p| p[j]).collect();
        let labels = feature_labelings(&coords, feature.alpha, feature.beta);
        let mut next = MaskSet::new(n);
        for &h in &hypotheses {
            for &l in &labels {
                next.insert(h & l);
            }
        }
        hypotheses = next.iter().collect();
    }

    let mut best = 0;
    let mut seen = MaskSet::new(n);
    for subset in 1..=full {
        let size = subset.count_ones();
        if size <= best {
            continue;
        }
        seen.bits.iter_mut().for_each(|w| *w = 0);
        let mut distinct = 0u32;
        for &h in &hypotheses {
            let trace = h & subset;
            let (w, b) = ((trace / 64) as usize, trace % 64);
            if seen.bits[w] >> b & 1 == 0 {
                seen.bits[w] |= 1 << b;
                distinct += 1;
            }
        }
        if distinct == 1 << size {
            best = size;
        }
    }
    Ok(best)
}

/// Distinct labelings of `coords` by a single feature's class.
fn feature_labelings(coords: &[f64], alpha: u32, beta: u32) -> Vec<u32> {
    let full = (1u32 << coords.len()) - 1;
    if alpha == 0 && beta == 0 {
        return vec![full];
    }
    let mut values: Vec<f64> = coords.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let v = values.len();

    let mut out = Vec::new();
    for selected in 0u32..(1 << v) {
        if !expressible(selected, v, alpha, beta) {
            continue;
        }
        let mask = coords.iter().enumerate().fold(0u32, |acc, (i, c)| {
            let rank = values.iter().position(|x| x == c).unwrap_or(0);
            if selected >> rank & 1 == 1 {
                acc | 1 << i
            } else {
                acc
            }
        });
        out.push(mask);
    }
    out
}

/// Whether a selection of sorted distinct values is a union of at most
/// `alpha` intervals plus the permitted rays.
fn expressible(selected: u32, v: usize, alpha: u32, beta: u32) -> bool {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < v {
        if selected >> i & 1 == 1 {
            let start = i;
            while i < v && selected >> i & 1 == 1 {
                i += 1;
            }
            runs.push((start, i - 1));
        } else {
            i += 1;
        }
    }
    let mut intervals = runs.len() as u32;
    let mut left_used = false;
    if beta >= 1 {
        if let Some(&(s, _)) = runs.first() {
            if s == 0 {
                intervals -= 1;
                left_used = true;
            }
        }
    }
    if beta >= 2 {
        if let Some(&(_, e)) = runs.last() {
            if e == v - 1 && !(left_used && runs.len() == 1) {
                intervals -= 1;
            }
        }
    }
    intervals <= alpha
}
