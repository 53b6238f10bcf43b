//! Shortest-path completion of a partially observed metric.
//!
//! Given the set `Q` of observed pairs with their true lengths, `d_Q(x,y)`
//! is the shortest-path distance in the weighted graph `([n], Q)`. It
//! dominates the underlying metric pointwise, and selecting a median through
//! the completion obeys an exact inequality chain that `ChainAudit` checks
//! per instance with integer arithmetic.

use std::collections::BinaryHeap;
use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::metric::{
    canonical_pair, exact_median, point_cost, Dist, Metric, MetricError, PairKey, PointId,
    TextFormatError,
};
use crate::rational::Ratio;

const UNREACHED: u64 = u64::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecoveryError {
    #[error("query graph leaves ({x},{y}) unreachable; the completion is not total")]
    Disconnected { x: PointId, y: PointId },
    #[error("duplicate edge ({0},{1}) in query set")]
    DuplicateEdge(PointId, PointId),
    #[error("edge ({0},{1}) has zero length")]
    ZeroLength(PointId, PointId),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Format(#[from] TextFormatError),
    #[error("the distance norm is zero; relative error undefined")]
    DegenerateNorm,
    #[error("l1 norms exceed the representable range")]
    NormOverflow,
}

/// An undirected graph of observed pairs with positive integer lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySet {
    n: usize,
    edges: Vec<(PairKey, Dist)>,
}

impl QuerySet {
    /// Builds a query set, canonicalizing and rejecting duplicates, self
    /// loops and zero lengths.
    pub fn new(n: usize, edges: Vec<(PairKey, Dist)>) -> Result<Self, RecoveryError> {
        let mut edges = edges;
        edges.sort_unstable_by_key(|&(k, _)| k);
        let mut seen = HashSet::with_capacity(edges.len());
        for &(k, d) in &edges {
            assert!((k.hi() as usize) < n, "edge endpoint out of range");
            if !seen.insert(k.packed()) {
                return Err(RecoveryError::DuplicateEdge(k.lo(), k.hi()));
            }
            if d == 0 {
                return Err(RecoveryError::ZeroLength(k.lo(), k.hi()));
            }
        }
        Ok(QuerySet { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(PairKey, Dist)] {
        &self.edges
    }

    /// File format: first line `n m`, then `m` lines `lo hi length`.
    pub fn parse_text(input: &str) -> Result<Self, RecoveryError> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| TextFormatError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let mut it = header.split_whitespace();
        let parse_num = |tok: Option<&str>, line: usize| -> Result<usize, RecoveryError> {
            tok.ok_or_else(|| TextFormatError::Parse {
                line,
                msg: "expected \"n m\"".into(),
            })?
            .parse::<usize>()
            .map_err(|e| {
                TextFormatError::Parse {
                    line,
                    msg: format!("bad count: {e}"),
                }
                .into()
            })
        };
        let n = parse_num(it.next(), 1)?;
        let m = parse_num(it.next(), 1)?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (idx, line) = lines.next().ok_or_else(|| TextFormatError::Parse {
                line: m + 1,
                msg: "missing edge line".into(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(TextFormatError::Parse {
                    line: idx + 1,
                    msg: format!("expected \"lo hi length\", found {} fields", fields.len()),
                }
                .into());
            }
            let bad = |e: std::num::ParseIntError| TextFormatError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            };
            let lo: PointId = fields[0].parse().map_err(bad)?;
            let hi: PointId = fields[1].parse().map_err(bad)?;
            let w: Dist = fields[2].parse().map_err(bad)?;
            edges.push((canonical_pair(lo, hi)?, w));
        }
        QuerySet::new(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (k, w) in &self.edges {
            out.push_str(&format!("{} {} {}\n", k.lo(), k.hi(), w));
        }
        out
    }
}

/// Copies edge lengths for `pairs` out of `m`. Duplicate pairs collapse.
pub fn build_query_graph<M: Metric + ?Sized>(m: &M, pairs: &[PairKey]) -> QuerySet {
    let mut edges: Vec<(PairKey, Dist)> =
        pairs.iter().map(|&k| (k, m.dist(k.lo(), k.hi()))).collect();
    edges.sort_unstable_by_key(|&(k, _)| k);
    edges.dedup_by_key(|&mut (k, _)| k);
    QuerySet::new(m.n(), edges).expect("lengths from a positive metric")
}

/// The query set containing every pair of `m`.
pub fn all_pairs<M: Metric + ?Sized>(m: &M) -> QuerySet {
    let n = m.n();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for x in 0..n as PointId {
        for y in x + 1..n as PointId {
            edges.push((canonical_pair(x, y).expect("distinct"), m.dist(x, y)));
        }
    }
    QuerySet::new(n, edges).expect("all pairs are distinct")
}

/// Shortest-path distance, with disconnection explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathDist {
    Finite(u64),
    Unreachable,
}

/// Materialized all-pairs shortest-path completion: O(n^2) memory.
#[derive(Clone, Debug)]
pub struct CompletedMetric {
    n: usize,
    rows: Vec<u64>,
}

impl CompletedMetric {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: PointId, y: PointId) -> PathDist {
        match self.rows[x as usize * self.n + y as usize] {
            UNREACHED => PathDist::Unreachable,
            d => PathDist::Finite(d),
        }
    }

    /// Whether every pair is reachable.
    pub fn connected(&self) -> bool {
        !self.rows.contains(&UNREACHED)
    }

    fn first_unreachable(&self) -> Option<(PointId, PointId)> {
        let pos = self.rows.iter().position(|&d| d == UNREACHED)?;
        Some(((pos / self.n) as PointId, (pos % self.n) as PointId))
    }
}

struct Csr {
    n: usize,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<u32>,
    max_weight: u32,
}

impl Csr {
    fn build(q: &QuerySet) -> Csr {
        let n = q.n();
        let mut deg = vec![0u32; n];
        for (k, _) in q.edges() {
            deg[k.lo() as usize] += 1;
            deg[k.hi() as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; 2 * q.len()];
        let mut weights = vec![0u32; 2 * q.len()];
        let mut max_weight = 0;
        for (k, w) in q.edges() {
            let (a, b) = (k.lo() as usize, k.hi() as usize);
            targets[cursor[a] as usize] = k.hi();
            weights[cursor[a] as usize] = *w;
            cursor[a] += 1;
            targets[cursor[b] as usize] = k.lo();
            weights[cursor[b] as usize] = *w;
            cursor[b] += 1;
            max_weight = max_weight.max(*w);
        }
        Csr {
            n,
            offsets,
            targets,
            weights,
            max_weight,
        }
    }

    fn neighbors(&self, x: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
        let s = self.offsets[x] as usize;
        let e = self.offsets[x + 1] as usize;
        self.targets[s..e]
            .iter()
            .copied()
            .zip(self.weights[s..e].iter().copied())
    }
}

/// Scratch for repeated single-source runs; bucket queue for small integer
/// weights, binary heap otherwise.
struct SsspScratch {
    buckets: Vec<Vec<u32>>,
}

impl SsspScratch {
    fn new() -> Self {
        SsspScratch {
            buckets: Vec::new(),
        }
    }

    fn run(&mut self, csr: &Csr, src: PointId, dist: &mut [u64]) {
        dist.fill(UNREACHED);
        dist[src as usize] = 0;
        if csr.max_weight <= 64 {
            self.run_buckets(csr, src, dist);
        } else {
            run_heap(csr, src, dist);
        }
    }

    fn run_buckets(&mut self, csr: &Csr, src: PointId, dist: &mut [u64]) {
        let horizon = csr.max_weight as usize * csr.n.saturating_sub(1) + 1;
        if self.buckets.len() < horizon {
            self.buckets.resize_with(horizon, Vec::new);
        }
        self.buckets[0].push(src);
        let mut pending = 1usize;
        let mut d = 0usize;
        while pending > 0 {
            while self.buckets[d].is_empty() {
                d += 1;
            }
            let v = self.buckets[d].pop().expect("bucket nonempty");
            pending -= 1;
            if dist[v as usize] != d as u64 {
                continue; // stale entry
            }
            for (to, w) in csr.neighbors(v as usize) {
                let nd = d as u64 + w as u64;
                if nd < dist[to as usize] {
                    dist[to as usize] = nd;
                    self.buckets[nd as usize].push(to);
                    pending += 1;
                }
            }
        }
        // Buckets drained during the scan are already empty again.
    }
}

fn run_heap(csr: &Csr, src: PointId, dist: &mut [u64]) {
    let mut heap = BinaryHeap::new();
    heap.push(std::cmp::Reverse((0u64, src)));
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (to, w) in csr.neighbors(v as usize) {
            let nd = d + w as u64;
            if nd < dist[to as usize] {
                dist[to as usize] = nd;
                heap.push(std::cmp::Reverse((nd, to)));
            }
        }
    }
}

/// Exact all-pairs shortest paths over the query graph; unreachable pairs
/// are explicit.
pub fn shortest_path_completion(q: &QuerySet) -> CompletedMetric {
    let n = q.n();
    let csr = Csr::build(q);
    let mut rows = vec![UNREACHED; n * n];
    rows.par_chunks_mut(n)
        .enumerate()
        .for_each_init(SsspScratch::new, |scratch, (src, row)| {
            scratch.run(&csr, src as PointId, row);
        });
    CompletedMetric { n, rows }
}

/// `sum |d_Q - d| / sum d` over all ordered pairs, exact.
pub fn l1_relative_error<M: Metric + ?Sized>(
    dq: &CompletedMetric,
    m: &M,
) -> Result<Ratio, RecoveryError> {
    assert_eq!(dq.n(), m.n());
    if let Some((x, y)) = dq.first_unreachable() {
        return Err(RecoveryError::Disconnected { x, y });
    }
    let n = dq.n();
    let mut num: u128 = 0;
    let mut den: u128 = 0;
    let mut row = vec![0; n];
    for x in 0..n {
        m.fill_row(x as PointId, &mut row);
        for (y, &d) in row.iter().enumerate() {
            let d = d as u64;
            let dqv = dq.rows[x * n + y];
            num += dqv.abs_diff(d) as u128;
            den += d as u128;
        }
    }
    if den == 0 {
        return Err(RecoveryError::DegenerateNorm);
    }
    Ratio::from_u128(num, den).ok_or(RecoveryError::NormOverflow)
}

/// Argmin over `z` of the completed row sum, smallest index on ties.
pub fn median_from_completion(dq: &CompletedMetric) -> Result<PointId, RecoveryError> {
    if let Some((x, y)) = dq.first_unreachable() {
        return Err(RecoveryError::Disconnected { x, y });
    }
    let n = dq.n();
    let mut best = (0usize, u128::MAX);
    for z in 0..n {
        let sum: u128 = dq.rows[z * n..(z + 1) * n].iter().map(|&d| d as u128).sum();
        if sum < best.1 {
            best = (z, sum);
        }
    }
    Ok(best.0 as PointId)
}

/// One-pass audit of the completion against the true metric. Streams rows,
/// so it is safe at sizes where materializing `d_Q` is not.
#[derive(Clone, Debug)]
pub struct ChainAudit {
    pub n: usize,
    /// `d_Q(x,y) >= d(x,y)` for every pair.
    pub dominates: bool,
    pub z_tilde: PointId,
    pub cost_d_ztilde: u64,
    pub cost_dq_ztilde: u64,
    pub z_star: PointId,
    pub cost_d_zstar: u64,
    pub l1_dq: u128,
    pub l1_d: u128,
    pub l1_abs_diff: u128,
}

impl ChainAudit {
    /// `cost_d(z_tilde) <= cost_dq(z_tilde)`.
    pub fn median_cost_dominated(&self) -> bool {
        self.cost_d_ztilde <= self.cost_dq_ztilde
    }

    /// `n * cost_dq(z_tilde) <= ||d_Q||_1`.
    pub fn mean_bound_ok(&self) -> bool {
        self.n as u128 * self.cost_dq_ztilde as u128 <= self.l1_dq
    }

    /// `||d||_1 <= 2n * cost_d(z_star)`.
    pub fn norm_bound_ok(&self) -> bool {
        self.l1_d <= 2 * self.n as u128 * self.cost_d_zstar as u128
    }

    pub fn all_ok(&self) -> bool {
        self.dominates
            && self.median_cost_dominated()
            && self.mean_bound_ok()
            && self.norm_bound_ok()
    }

    pub fn l1_relative_error(&self) -> Result<Ratio, RecoveryError> {
        if self.l1_d == 0 {
            return Err(RecoveryError::DegenerateNorm);
        }
        Ratio::from_u128(self.l1_abs_diff, self.l1_d).ok_or(RecoveryError::NormOverflow)
    }
}

pub fn chain_audit<M: Metric + Sync + ?Sized>(
    m: &M,
    q: &QuerySet,
) -> Result<ChainAudit, RecoveryError> {
    let n = m.n();
    assert_eq!(q.n(), n);
    let csr = Csr::build(q);

    struct RowStat {
        row_sum: u64,
        l1_dq: u128,
        l1_d: u128,
        diff: u128,
        dominates: bool,
        unreachable: Option<PointId>,
    }
    let stats: Vec<RowStat> = (0..n)
        .into_par_iter()
        .map_init(
            || (SsspScratch::new(), vec![0u64; n], vec![0; n]),
            |(scratch, dq_row, d_row), src| {
                scratch.run(&csr, src as PointId, dq_row);
                m.fill_row(src as PointId, d_row);
                let mut stat = RowStat {
                    row_sum: 0,
                    l1_dq: 0,
                    l1_d: 0,
                    diff: 0,
                    dominates: true,
                    unreachable: None,
                };
                for y in 0..n {
                    let dqv = dq_row[y];
                    if dqv == UNREACHED {
                        stat.unreachable = Some(y as PointId);
                        return stat;
                    }
                    let d = d_row[y] as u64;
                    stat.row_sum += dqv;
                    stat.l1_dq += dqv as u128;
                    stat.l1_d += d as u128;
                    stat.diff += dqv.abs_diff(d) as u128;
                    stat.dominates &= dqv >= d;
                }
                stat
            },
        )
        .collect();

    for (x, stat) in stats.iter().enumerate() {
        if let Some(y) = stat.unreachable {
            return Err(RecoveryError::Disconnected { x: x as PointId, y });
        }
    }
    let mut z_tilde = (0usize, u64::MAX);
    for (z, stat) in stats.iter().enumerate() {
        if stat.row_sum < z_tilde.1 {
            z_tilde = (z, stat.row_sum);
        }
    }
    let (z_star, cost_d_zstar) = exact_median(m);
    Ok(ChainAudit {
        n,
        dominates: stats.iter().all(|s| s.dominates),
        z_tilde: z_tilde.0 as PointId,
        cost_d_ztilde: point_cost(m, z_tilde.0 as PointId),
        cost_dq_ztilde: z_tilde.1,
        z_star,
        cost_d_zstar,
        l1_dq: stats.iter().map(|s| s.l1_dq).sum(),
        l1_d: stats.iter().map(|s| s.l1_d).sum(),
        l1_abs_diff: stats.iter().map(|s| s.diff).sum(),
    })
}
