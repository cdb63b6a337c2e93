//! Duplicate-free ranked enumeration of a union by merging one cursor per
//! disjunct.
//!
//! Each disjunct scores its outputs independently, so a tuple produced by
//! two disjuncts is only recognized as a duplicate when both give it the
//! same score. Rankings that depend only on the output values (vertex and
//! lexicographic) always satisfy this; tuple rankings do when the disjuncts
//! read the same weights.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::engine::{OutputTuple, PullStats, RankedCursor};

/// Orders by score, then by values compared coordinate by coordinate from
/// the first head variable.
pub fn compare_with_tiebreak(a: &OutputTuple, b: &OutputTuple) -> Ordering {
    a.score.cmp(&b.score).then_with(|| {
        a.values.iter().zip(&b.values).map(|(x, y)| x.cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

#[derive(Debug, PartialEq, Eq)]
struct Pending(OutputTuple, usize);

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_with_tiebreak(&self.0, &other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug)]
pub struct UnionCursor {
    cursors: Vec<RankedCursor>,
    last_from: Vec<Option<OutputTuple>>,
    merge: BinaryHeap<Reverse<Pending>>,
    last_emitted: Option<OutputTuple>,
    /// Merge-queue pops of the most recent pull.
    last_merge_pops: u64,
}

impl UnionCursor {
    pub fn new(cursors: Vec<RankedCursor>) -> Self {
        let n = cursors.len();
        let mut u = UnionCursor {
            cursors,
            last_from: vec![None; n],
            merge: BinaryHeap::with_capacity(n),
            last_emitted: None,
            last_merge_pops: 0,
        };
        for i in 0..n {
            u.refill(i);
        }
        u
    }

    fn refill(&mut self, i: usize) {
        if let Some(t) = self.cursors[i].next() {
            if let Some(prev) = &self.last_from[i] {
                assert_eq!(
                    compare_with_tiebreak(prev, &t),
                    Ordering::Less,
                    "disjunct {i} emitted out of order"
                );
            }
            self.last_from[i] = Some(t.clone());
            self.merge.push(Reverse(Pending(t, i)));
        }
    }

    pub fn cursors(&self) -> &[RankedCursor] {
        &self.cursors
    }

    pub fn last_merge_pops(&self) -> u64 {
        self.last_merge_pops
    }

    /// Sum of the disjunct cursors' totals.
    pub fn totals(&self) -> PullStats {
        let mut t = PullStats::default();
        for c in &self.cursors {
            let s = c.totals();
            t.pops += s.pops;
            t.inserts += s.inserts;
            t.cells_created += s.cells_created;
            t.comparisons += s.comparisons;
            t.memo_hits += s.memo_hits;
        }
        t
    }
}

impl Iterator for UnionCursor {
    type Item = OutputTuple;

    fn next(&mut self) -> Option<OutputTuple> {
        let Reverse(Pending(out, i)) = self.merge.pop()?;
        let mut pops = 1;
        self.refill(i);
        while self.merge.peek().is_some_and(|Reverse(Pending(t, _))| t.values == out.values) {
            let Reverse(Pending(_, j)) = self.merge.pop().expect("peeked");
            pops += 1;
            self.refill(j);
        }
        self.last_merge_pops = pops;
        if let Some(prev) = &self.last_emitted {
            debug_assert_eq!(compare_with_tiebreak(prev, &out), Ordering::Less);
        }
        self.last_emitted = Some(out.clone());
        Some(out)
    }
}
