//! Exact neighbor search over a sorted one-axis projection.
//!
//! Points are sorted by their coordinate on the highest-variance axis. Since
//! a single coordinate difference never exceeds the L2 distance, a query only
//! needs to scan the slab around its own coordinate. Candidates are then
//! checked with the same distance function brute force uses, so result sets
//! are identical to an exhaustive scan.

use crate::encoder::{euclidean, EncodedMatrix, Space};

/// Relative widening of the slab; covers rounding in the distance kernel.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ProjectionIndex<'a> {
    points: &'a EncodedMatrix,
    axis: usize,
    /// (coordinate on `axis`, row index), sorted.
    order: Vec<(f64, usize)>,
}

impl<'a> ProjectionIndex<'a> {
    /// Returns `None` for non-Euclidean spaces.
    pub fn build(points: &'a EncodedMatrix) -> Option<Self> {
        if !matches!(points.space(), Space::Euclidean) || points.dim() == 0 {
            return None;
        }
        let n = points.len() as f64;
        let mut best = (0, f64::NEG_INFINITY);
        for axis in 0..points.dim() {
            let mean = points.rows().map(|r| r[axis]).sum::<f64>() / n;
            let var = points.rows().map(|r| (r[axis] - mean).powi(2)).sum::<f64>();
            if var > best.1 {
                best = (axis, var);
            }
        }
        let axis = best.0;
        let mut order: Vec<(f64, usize)> = points
            .rows()
            .enumerate()
            .map(|(i, r)| (r[axis], i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Some(ProjectionIndex {
            points,
            axis,
            order,
        })
    }

    fn widen(r: f64) -> f64 {
        r * (1.0 + SLACK) + f64::MIN_POSITIVE
    }

    /// Indices of all points within `radius` (inclusive) of `query`,
    /// ascending.
    pub fn within(&self, query: &[f64], radius: f64) -> Vec<usize> {
        let q = query[self.axis];
        let w = Self::widen(radius);
        let start = self.order.partition_point(|(v, _)| *v < q - w);
        let mut out: Vec<usize> = self.order[start..]
            .iter()
            .take_while(|(v, _)| *v <= q + w)
            .filter(|(_, i)| euclidean(self.points.row(*i), query) <= radius)
            .map(|(_, i)| *i)
            .collect();
        out.sort_unstable();
        out
    }

    /// Number of points within `radius` of `query`.
    pub fn count_within(&self, query: &[f64], radius: f64) -> usize {
        let q = query[self.axis];
        let w = Self::widen(radius);
        let start = self.order.partition_point(|(v, _)| *v < q - w);
        self.order[start..]
            .iter()
            .take_while(|(v, _)| *v <= q + w)
            .filter(|(_, i)| euclidean(self.points.row(*i), query) <= radius)
            .count()
    }

    /// Distance from `query` to its `k`-th nearest point (1-based, the query
    /// itself counts if it is in the set).
    pub fn kth_distance(&self, query: &[f64], k: usize) -> f64 {
        assert!(k >= 1 && k <= self.order.len());
        let q = query[self.axis];
        let pos = self.order.partition_point(|(v, _)| *v < q);
        // max-heap of the k smallest distances seen so far
        let mut heap: std::collections::BinaryHeap<OrdF64> =
            std::collections::BinaryHeap::with_capacity(k + 1);
        let bound = |heap: &std::collections::BinaryHeap<OrdF64>| {
            if heap.len() < k {
                f64::INFINITY
            } else {
                Self::widen(heap.peek().unwrap().0)
            }
        };
        let push = |heap: &mut std::collections::BinaryHeap<OrdF64>, i: usize| {
            let d = euclidean(self.points.row(i), query);
            if heap.len() < k {
                heap.push(OrdF64(d));
            } else if d < heap.peek().unwrap().0 {
                heap.pop();
                heap.push(OrdF64(d));
            }
        };
        let (mut left, mut right) = (pos, pos);
        let (mut left_open, mut right_open) = (true, true);
        while left_open || right_open {
            if right_open {
                if right < self.order.len() && self.order[right].0 - q <= bound(&heap) {
                    push(&mut heap, self.order[right].1);
                    right += 1;
                } else {
                    right_open = false;
                }
            }
            if left_open {
                if left > 0 && q - self.order[left - 1].0 <= bound(&heap) {
                    push(&mut heap, self.order[left - 1].1);
                    left -= 1;
                } else {
                    left_open = false;
                }
            }
        }
        heap.peek().unwrap().0
    }

    /// Nearest point to `query` as (index, distance); ties go to the lowest
    /// index.
    pub fn nearest(&self, query: &[f64]) -> (usize, f64) {
        let q = query[self.axis];
        let pos = self.order.partition_point(|(v, _)| *v < q);
        let mut best = (usize::MAX, f64::INFINITY);
        let consider = |best: &mut (usize, f64), i: usize| {
            let d = euclidean(self.points.row(i), query);
            if d < best.1 || (d == best.1 && i < best.0) {
                *best = (i, d);
            }
        };
        let (mut left, mut right) = (pos, pos);
        let (mut left_open, mut right_open) = (true, true);
        while left_open || right_open {
            if right_open {
                if right < self.order.len() && self.order[right].0 - q <= Self::widen(best.1) {
                    consider(&mut best, self.order[right].1);
                    right += 1;
                } else {
                    right_open = false;
                }
            }
            if left_open {
                if left > 0 && q - self.order[left - 1].0 <= Self::widen(best.1) {
                    consider(&mut best, self.order[left - 1].1);
                    left -= 1;
                } else {
                    left_open = false;
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
