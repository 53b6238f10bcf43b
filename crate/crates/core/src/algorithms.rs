//! Deterministic 1-median algorithms behind a query-counting oracle.
//!
//! Algorithms see only `n` and the oracle; planted sets, density parameters
//! and other adversary internals are invisible to them. Every registered
//! algorithm is deterministic: identical oracle answers imply an identical
//! query sequence and output.

use serde::Serialize;
use thiserror::Error;

use crate::adversary::Adversary;
use crate::metric::PairSet;
use crate::metric::{canonical_pair, Dist, Metric, MetricError, PairKey, PointId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("query budget {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
}

/// Something that can answer fresh distance queries and recall cached ones.
pub trait AnswerSource {
    fn n(&self) -> usize;

    /// The answer previously given for `key`, if it was asked before.
    fn cached(&self, key: PairKey) -> Option<Dist>;

    /// Answers a fresh query.
    fn answer(&mut self, key: PairKey) -> Result<Dist, MetricError>;
}

impl AnswerSource for Adversary {
    fn n(&self) -> usize {
        self.n()
    }

    fn cached(&self, key: PairKey) -> Option<Dist> {
        self.frozen_lookup(key)
    }

    fn answer(&mut self, key: PairKey) -> Result<Dist, MetricError> {
        self.answer_query(key.lo(), key.hi())
    }
}

/// Read-only oracle over an explicit metric, used for replay and baselines.
#[derive(Debug)]
pub struct PassiveSource<'a, M: Metric + ?Sized> {
    metric: &'a M,
    seen: PairSet,
}

impl<'a, M: Metric + ?Sized> PassiveSource<'a, M> {
    pub fn new(metric: &'a M) -> Self {
        PassiveSource {
            metric,
            seen: PairSet::default(),
        }
    }
}

impl<M: Metric + ?Sized> AnswerSource for PassiveSource<'_, M> {
    fn n(&self) -> usize {
        self.metric.n()
    }

    fn cached(&self, key: PairKey) -> Option<Dist> {
        self.seen
            .contains(&key.packed())
            .then(|| self.metric.dist(key.lo(), key.hi()))
    }

    fn answer(&mut self, key: PairKey) -> Result<Dist, MetricError> {
        self.seen.insert(key.packed());
        Ok(self.metric.dist(key.lo(), key.hi()))
    }
}

/// Query-counting front end: canonicalizes pairs, serves repeats from the
/// source's cache (they do not advance the source or count against the
/// budget), and records the distinct-query trace.
pub struct Oracle<S: AnswerSource> {
    source: S,
    budget: Option<u64>,
    distinct: u64,
    redundant: u64,
    trace: Vec<(PairKey, Dist)>,
}

impl<S: AnswerSource> Oracle<S> {
    pub fn new(source: S) -> Self {
        Oracle {
            source,
            budget: None,
            distinct: 0,
            redundant: 0,
            trace: Vec::new(),
        }
    }

    pub fn with_budget(source: S, budget: u64) -> Self {
        let mut o = Oracle::new(source);
        o.budget = Some(budget);
        o
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn query(&mut self, x: PointId, y: PointId) -> Result<Dist, OracleError> {
        let key = canonical_pair(x, y)?;
        if let Some(d) = self.source.cached(key) {
            self.redundant += 1;
            return Ok(d);
        }
        if let Some(budget) = self.budget {
            if self.distinct >= budget {
                return Err(OracleError::BudgetExceeded { budget });
            }
        }
        let d = self.source.answer(key)?;
        self.distinct += 1;
        self.trace.push((key, d));
        Ok(d)
    }

    pub fn distinct_queries(&self) -> u64 {
        self.distinct
    }

    pub fn redundant_queries(&self) -> u64 {
        self.redundant
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    fn into_parts(self) -> (S, Vec<(PairKey, Dist)>, u64, u64) {
        (self.source, self.trace, self.distinct, self.redundant)
    }
}

/// Identifier of a registered deterministic algorithm.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    /// Queries every pair; exact baseline.
    Exhaustive,
    /// Nonadaptive scheme with `ceil(sqrt(n))` evenly spaced pivots.
    Pivot,
    /// Pivot family with `ceil(n^(1/h))` pivots, h >= 2.
    PivotH { h: u32 },
    /// Adaptive elimination over an expanding sample schedule.
    GreedyProbe,
}

impl AlgorithmId {
    /// Parses a registry name: `exhaustive`, `pivot`, `pivot_h`,
    /// `pivot_h:<h>` or `greedy_probe`.
    pub fn parse(name: &str) -> Result<Self, OracleError> {
        match name {
            "exhaustive" => Ok(AlgorithmId::Exhaustive),
            "pivot" => Ok(AlgorithmId::Pivot),
            "greedy_probe" => Ok(AlgorithmId::GreedyProbe),
            "pivot_h" => Ok(AlgorithmId::PivotH { h: 3 }),
            _ => match name.strip_prefix("pivot_h:") {
                Some(h) => {
                    let h: u32 = h
                        .parse()
                        .map_err(|_| OracleError::UnknownAlgorithm(name.to_string()))?;
                    if h < 2 {
                        return Err(OracleError::UnknownAlgorithm(name.to_string()));
                    }
                    Ok(AlgorithmId::PivotH { h })
                }
                None => Err(OracleError::UnknownAlgorithm(name.to_string())),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            AlgorithmId::Exhaustive => "exhaustive".into(),
            AlgorithmId::Pivot => "pivot".into(),
            AlgorithmId::PivotH { h } => format!("pivot_h:{h}"),
            AlgorithmId::GreedyProbe => "greedy_probe".into(),
        }
    }

    /// The algorithms the harness exercises by default.
    pub fn builtin_roster() -> Vec<AlgorithmId> {
        vec![
            AlgorithmId::Exhaustive,
            AlgorithmId::Pivot,
            AlgorithmId::PivotH { h: 3 },
            AlgorithmId::PivotH { h: 4 },
            AlgorithmId::GreedyProbe,
        ]
    }
}

/// Complete record of one run: the distinct queries in order with their
/// answers, the output point, and the counters.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub queries: Vec<(PairKey, Dist)>,
    pub output: PointId,
    pub distinct_queries: u64,
    pub redundant_queries: u64,
}

/// Runs `alg` to completion against the oracle, returning the trace and the
/// exhausted answer source.
pub fn run<S: AnswerSource>(
    alg: &AlgorithmId,
    mut oracle: Oracle<S>,
) -> Result<(RunTrace, S), OracleError> {
    let n = oracle.n();
    let output = match alg {
        AlgorithmId::Exhaustive => exhaustive(&mut oracle)?,
        AlgorithmId::Pivot => pivot_scheme(&mut oracle, isqrt_ceil(n))?,
        AlgorithmId::PivotH { h } => pivot_scheme(&mut oracle, root_ceil(n, *h))?,
        AlgorithmId::GreedyProbe => greedy_probe(&mut oracle)?,
    };
    let (source, queries, distinct, redundant) = oracle.into_parts();
    Ok((
        RunTrace {
            queries,
            output,
            distinct_queries: distinct,
            redundant_queries: redundant,
        },
        source,
    ))
}

/// Smallest `k` with `k*k >= n`.
pub fn isqrt_ceil(n: usize) -> usize {
    let mut k = (n as f64).sqrt() as usize;
    while k * k < n {
        k += 1;
    }
    while k > 1 && (k - 1) * (k - 1) >= n {
        k -= 1;
    }
    k
}

/// Smallest `k` with `k^h >= n`.
pub fn root_ceil(n: usize, h: u32) -> usize {
    assert!(h >= 1);
    let mut k = 1usize;
    while (k as u128).pow(h) < n as u128 {
        k += 1;
    }
    k
}

/// Queries every pair once and returns the exact cost minimizer, smallest
/// index on ties.
fn exhaustive<S: AnswerSource>(oracle: &mut Oracle<S>) -> Result<PointId, OracleError> {
    let n = oracle.n();
    let mut cost = vec![0u64; n];
    for x in 0..n as PointId {
        for y in x + 1..n as PointId {
            let d = oracle.query(x, y)? as u64;
            cost[x as usize] += d;
            cost[y as usize] += d;
        }
    }
    Ok(argmin(&cost))
}

/// Nonadaptive pivot scan: `k` evenly spaced pivots each query every point;
/// the pivot with the smallest distance sum wins. The query set depends only
/// on `n` and `k`, never on answers.
fn pivot_scheme<S: AnswerSource>(oracle: &mut Oracle<S>, k: usize) -> Result<PointId, OracleError> {
    let n = oracle.n();
    let k = k.clamp(1, n);
    let step = n / k;
    let mut best: Option<(u64, PointId)> = None;
    for j in 0..k {
        let u = (j * step) as PointId;
        let mut sum = 0u64;
        for v in 0..n as PointId {
            if v == u {
                continue;
            }
            sum += oracle.query(u, v)? as u64;
        }
        if best.is_none_or(|(s, _)| sum < s) {
            best = Some((sum, u));
        }
    }
    Ok(best.expect("k >= 1").1)
}

/// Adaptive contrast to the pivot scan: every point starts as a candidate,
/// each round scores candidates against a deterministic sample set, the
/// best quarter survives, and the sample doubles. Total distinct queries
/// stay below `2n(sqrt(n)+1) <= 4n^(3/2)`.
fn greedy_probe<S: AnswerSource>(oracle: &mut Oracle<S>) -> Result<PointId, OracleError> {
    let n = oracle.n();
    let mut candidates: Vec<PointId> = (0..n as PointId).collect();
    let mut sample_size = isqrt_ceil(n).min(n);
    loop {
        let sample = spread_sample(n, sample_size);
        let mut scored: Vec<(u64, PointId)> = Vec::with_capacity(candidates.len());
        for &c in &candidates {
            let mut sum = 0u64;
            for &t in &sample {
                if t == c {
                    continue;
                }
                sum += oracle.query(c, t)? as u64;
            }
            scored.push((sum, c));
        }
        scored.sort_unstable();
        if sample_size == n {
            // Scores are now exact costs.
            return Ok(scored[0].1);
        }
        let keep = candidates.len().div_ceil(4);
        candidates = scored.iter().take(keep).map(|&(_, c)| c).collect();
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        sample_size = (sample_size * 2).min(n);
    }
}

/// `s` evenly spread points; nested for doubling sizes, so earlier queries
/// stay cached.
fn spread_sample(n: usize, s: usize) -> Vec<PointId> {
    debug_assert!(s >= 1 && s <= n);
    (0..s).map(|j| (j * n / s) as PointId).collect()
}

fn argmin(cost: &[u64]) -> PointId {
    let mut best = 0usize;
    for (i, &c) in cost.iter().enumerate().skip(1) {
        if c < cost[best] {
            best = i;
        }
    }
    best as PointId
}
