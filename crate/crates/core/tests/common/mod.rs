//! Shared test support: a tiny deterministic generator and random-metric
//! builders. Frozen seeds keep every expected value reproducible.

#![allow(dead_code)]

use median_adversary::metric::{canonical_pair, DenseMetric, Dist, PointId};
use median_adversary::recovery::{shortest_path_completion, PathDist, QuerySet};

/// SplitMix64: deterministic, dependency-free, stable across platforms.
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform value in `[lo, hi]`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }
}

/// A random integer metric: symmetric entries in `[1, max_d]` clamped into
/// a metric by shortest-path completion over the complete graph.
pub fn random_metric(rng: &mut SplitMix64, n: usize, max_d: u64) -> DenseMetric {
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for x in 0..n as PointId {
        for y in x + 1..n as PointId {
            edges.push((
                canonical_pair(x, y).expect("distinct"),
                rng.range(1, max_d) as Dist,
            ));
        }
    }
    let q = QuerySet::new(n, edges).expect("fresh pairs");
    let dq = shortest_path_completion(&q);
    let mut m = DenseMetric::zeroed(n);
    for x in 0..n as PointId {
        for y in 0..n as PointId {
            if x == y {
                continue;
            }
            match dq.get(x, y) {
                PathDist::Finite(d) => m.set_raw(x, y, d as Dist),
                PathDist::Unreachable => unreachable!("complete graphs are connected"),
            }
        }
    }
    m
}

/// A random symmetric {2,3,4}-valued matrix with zero diagonal. Always a
/// valid metric: the smallest two-side sum (2+2) matches the largest side.
pub fn random_band_matrix(rng: &mut SplitMix64, n: usize) -> DenseMetric {
    let mut m = DenseMetric::zeroed(n);
    for x in 0..n as PointId {
        for y in x + 1..n as PointId {
            m.set_pair(x, y, rng.range(2, 4) as Dist);
        }
    }
    m
}

/// Overwrites one symmetric entry with a random value in {1,2,3,4}.
pub fn corrupt_one_entry(rng: &mut SplitMix64, m: &mut DenseMetric, n: usize) {
    let x = rng.below(n as u64) as PointId;
    let mut y = rng.below(n as u64) as PointId;
    while y == x {
        y = rng.below(n as u64) as PointId;
    }
    m.set_pair(x, y, rng.range(1, 4) as Dist);
}
