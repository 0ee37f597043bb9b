//! Reduction of OR-connected clauses to a minimal set of intervals.
//!
//! Each clause selects an interval (or two rays for `!=`) of the real line.
//! Sorting by left endpoint and sweeping once merges every pair of intervals
//! that overlap or touch, which yields the unique minimal representation of
//! the union: disjoint, non-adjacent intervals in ascending order. When the
//! leftmost ray and the rightmost ray meet, the union is the whole line.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::query::{Clause, Connection, Op};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Bound {
    Unbounded,
    Closed(f64),
    Open(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn closed(a: f64, b: f64) -> Self {
        Interval { lo: Bound::Closed(a), hi: Bound::Closed(b) }
    }

    pub fn open(a: f64, b: f64) -> Self {
        Interval { lo: Bound::Open(a), hi: Bound::Open(b) }
    }

    pub fn all() -> Self {
        Interval { lo: Bound::Unbounded, hi: Bound::Unbounded }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = match self.lo {
            Bound::Unbounded => true,
            Bound::Closed(a) => x >= a,
            Bound::Open(a) => x > a,
        };
        let below = match self.hi {
            Bound::Unbounded => true,
            Bound::Closed(b) => x <= b,
            Bound::Open(b) => x < b,
        };
        above && below
    }

    pub fn is_ray(&self) -> bool {
        matches!(self.lo, Bound::Unbounded) != matches!(self.hi, Bound::Unbounded)
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.lo, Bound::Unbounded) && !matches!(self.hi, Bound::Unbounded)
    }

    fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Bound::Unbounded, _) | (_, Bound::Unbounded) => false,
            (Bound::Closed(a), Bound::Closed(b)) => a > b,
            (Bound::Closed(a), Bound::Open(b))
            | (Bound::Open(a), Bound::Closed(b))
            | (Bound::Open(a), Bound::Open(b)) => a >= b,
        }
    }
}

/// Intervals selected by a single clause.
pub fn clause_intervals(clause: &Clause) -> Vec<Interval> {
    use Bound::*;
    if clause.is_sentinel() {
        return vec![Interval::all()];
    }
    let v = clause.value;
    match clause.op {
        Op::Le => vec![Interval { lo: Unbounded, hi: Closed(v) }],
        Op::Lt => vec![Interval { lo: Unbounded, hi: Open(v) }],
        Op::Ge => vec![Interval { lo: Closed(v), hi: Unbounded }],
        Op::Gt => vec![Interval { lo: Open(v), hi: Unbounded }],
        Op::Eq => vec![Interval::closed(v, v)],
        Op::Ne => vec![
            Interval { lo: Unbounded, hi: Open(v) },
            Interval { lo: Open(v), hi: Unbounded },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "intervals", rename_all = "lowercase")]
pub enum IntervalSet {
    /// The union covers the whole real line.
    Tautology,
    /// Disjoint, non-adjacent intervals sorted by left endpoint.
    Intervals(Vec<Interval>),
}

impl IntervalSet {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            IntervalSet::Tautology => true,
            IntervalSet::Intervals(iv) => iv.iter().any(|i| i.contains(x)),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        match self {
            IntervalSet::Tautology => &[],
            IntervalSet::Intervals(iv) => iv,
        }
    }

    /// `(alpha, beta)`: bounded intervals (open ones counted as closed) and rays.
    pub fn complexity(&self) -> (u32, u32) {
        let iv = self.intervals();
        let rays = iv.iter().filter(|i| i.is_ray()).count() as u32;
        (iv.len() as u32 - rays, rays)
    }
}

pub fn reduce_connection(connection: &Connection) -> IntervalSet {
    reduce_intervals(connection.clauses.iter().flat_map(clause_intervals))
}

pub fn reduce_intervals(intervals: impl IntoIterator<Item = Interval>) -> IntervalSet {
    let mut items: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
    items.sort_by(|a, b| cmp_lower(a.lo, b.lo));

    let mut out: Vec<Interval> = Vec::with_capacity(items.len());
    for next in items {
        match out.last_mut() {
            Some(cur) if joins(cur.hi, next.lo) => {
                if cmp_upper(next.hi, cur.hi) == Ordering::Greater {
                    cur.hi = next.hi;
                }
            }
            _ => out.push(next),
        }
    }
    if out.len() == 1 && out[0] == Interval::all() {
        IntervalSet::Tautology
    } else {
        IntervalSet::Intervals(out)
    }
}

fn cmp_lower(a: Bound, b: Bound) -> Ordering {
    use Bound::*;
    match (a, b) {
        (Unbounded, Unbounded) => Ordering::Equal,
        (Unbounded, _) => Ordering::Less,
        (_, Unbounded) => Ordering::Greater,
        (Closed(x), Closed(y)) | (Open(x), Open(y)) => x.total_cmp(&y),
        (Closed(x), Open(y)) => x.total_cmp(&y).then(Ordering::Less),
        (Open(x), Closed(y)) => x.total_cmp(&y).then(Ordering::Greater),
    }
}

fn cmp_upper(a: Bound, b: Bound) -> Ordering {
    use Bound::*;
    match (a, b) {
        (Unbounded, Unbounded) => Ordering::Equal,
        (Unbounded, _) => Ordering::Greater,
        (_, Unbounded) => Ordering::Less,
        (Closed(x), Closed(y)) | (Open(x), Open(y)) => x.total_cmp(&y),
        (Closed(x), Open(y)) => x.total_cmp(&y).then(Ordering::Greater),
        (Open(x), Closed(y)) => x.total_cmp(&y).then(Ordering::Less),
    }
}

/// Whether an interval starting at `lo` overlaps or touches one ending at `hi`.
fn joins(hi: Bound, lo: Bound) -> bool {
    use Bound::*;
    match (hi, lo) {
        (Unbounded, _) | (_, Unbounded) => true,
        (Open(b), Open(a)) => a < b,
        (Closed(b), Closed(a)) | (Closed(b), Open(a)) | (Open(b), Closed(a)) => a <= b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn(clauses: &[(Op, f64)]) -> Connection {
        Connection::new("x", clauses.iter().map(|&(op, v)| Clause::new(op, v)).collect())
    }

    #[test]
    fn nested_rays_collapse() {
        let r = reduce_connection(&conn(&[(Op::Le, 5.0), (Op::Le, 8.0)]));
        assert_eq!(
            r,
            IntervalSet::Intervals(vec![Interval { lo: Bound::Unbounded, hi: Bound::Closed(8.0) }])
        );
        assert_eq!(r.complexity(), (0, 1));
    }

    #[test]
    fn overlapping_intervals_merge() {
        let r = reduce_intervals([Interval::closed(3.0, 6.0), Interval::closed(5.0, 9.0)]);
        assert_eq!(r, IntervalSet::Intervals(vec![Interval::closed(3.0, 9.0)]));
        assert_eq!(r.complexity(), (1, 0));
    }

    #[test]
    fn crossing_rays_are_a_tautology() {
        assert_eq!(reduce_connection(&conn(&[(Op::Le, 4.0), (Op::Ge, 2.0)])), IntervalSet::Tautology);
        assert_eq!(reduce_connection(&conn(&[(Op::Le, 3.0), (Op::Ge, 3.0)])), IntervalSet::Tautology);
        assert_eq!(reduce_connection(&conn(&[(Op::Le, 3.0), (Op::Gt, 3.0)])), IntervalSet::Tautology);
        assert_eq!(reduce_connection(&Connection::new("x", vec![Clause::sentinel()])), IntervalSet::Tautology);
    }

    #[test]
    fn open_rays_meeting_at_a_point_leave_a_gap() {
        let r = reduce_connection(&conn(&[(Op::Lt, 3.0), (Op::Gt, 3.0)]));
        assert_eq!(r.intervals().len(), 2);
        assert!(!r.contains(3.0));
        assert_eq!(r, reduce_connection(&conn(&[(Op::Ne, 3.0)])));
        assert_eq!(r.complexity(), (0, 2));
    }

    #[test]
    fn point_fills_gap_between_open_rays() {
        let r = reduce_connection(&conn(&[(Op::Lt, 3.0), (Op::Gt, 3.0), (Op::Eq, 3.0)]));
        assert_eq!(r, IntervalSet::Tautology);
    }

    #[test]
    fn touching_closed_and_open_endpoints_merge() {
        let r = reduce_intervals([
            Interval { lo: Bound::Closed(1.0), hi: Bound::Open(2.0) },
            Interval { lo: Bound::Closed(2.0), hi: Bound::Closed(3.0) },
            Interval::closed(5.0, 6.0),
        ]);
        assert_eq!(
            r,
            IntervalSet::Intervals(vec![Interval::closed(1.0, 3.0), Interval::closed(5.0, 6.0)])
        );
    }

    #[test]
    fn ray_swallows_intervals() {
        let r = reduce_connection(&conn(&[(Op::Eq, 1.0), (Op::Le, 4.0), (Op::Eq, 9.0), (Op::Eq, 4.0)]));
        assert_eq!(
            r,
            IntervalSet::Intervals(vec![
                Interval { lo: Bound::Unbounded, hi: Bound::Closed(4.0) },
                Interval::closed(9.0, 9.0),
            ])
        );
        assert_eq!(r.complexity(), (1, 1));
    }
}
