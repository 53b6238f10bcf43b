//! Adaptive distance-freezing adversary for metric 1-median lower-bound
//! experiments.
//!
//! The adversary answers each distinct query online by a seven-case rule
//! driven by planted-set membership and query-graph degrees, pads the
//! algorithm's output point so all of its distances are frozen, then selects
//! the least-queried planted point and completes the remaining distances by
//! a six-case rule. The finished instance is a genuine metric on which the
//! output point's cost is provably at least `4(n - 2*ceil(delta*n) - 2)`
//! while the selected point's cost is at most `n + 3*|S u B u N(p_hat)|`;
//! `instance_report` recomputes and audits both bounds per run.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::PairMap;
use crate::metric::{
    canonical_pair, point_cost, DenseMetric, Dist, Metric, MetricError, PairKey, PointId, QueryLog,
};
use crate::rational::{gcd, Ratio};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("delta must satisfy 0 < delta < 1/10, got {num}/{den}")]
    BadDelta { num: u64, den: u64 },
    #[error("delta must be written as \"num/den\", got {0:?}")]
    DeltaFormat(String),
    #[error("explicit planted set has {got} points, expected ceil(delta*n) = {expected}")]
    BadSetSize { got: usize, expected: usize },
    #[error(transparent)]
    Query(#[from] MetricError),
    #[error(
        "every planted point exceeded the degree threshold \
         (n = {n}, |B| = {b_size}, q_total = {q_total}): \
         the query load is too dense for this n and delta"
    )]
    EmptySafeSet {
        n: usize,
        b_size: usize,
        q_total: usize,
    },
    #[error("{what}: cost_p = {cost_p}, lower bound = {lower_bound_p}, cost_phat = {cost_phat}, upper bound = {upper_bound_phat} (n = {n}, |B| = {b_size})")]
    BoundViolation {
        what: &'static str,
        n: usize,
        b_size: usize,
        cost_p: u64,
        lower_bound_p: u64,
        cost_phat: u64,
        upper_bound_phat: u64,
    },
    #[error("inconsistent instance export: {0}")]
    BadImport(String),
}

/// Exact rational density parameter, constrained to (0, 1/10).
///
/// Degree thresholds compare `alpha > delta * n` as `alpha * den > num * n`,
/// so the boundary case `alpha == delta * n` is unambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DeltaParam {
    num: u64,
    den: u64,
}

impl DeltaParam {
    pub fn new(num: u64, den: u64) -> Result<Self, AdversaryError> {
        if num == 0 || den == 0 || 10 * num >= den {
            return Err(AdversaryError::BadDelta { num, den });
        }
        let g = gcd(num, den);
        Ok(DeltaParam {
            num: num / g,
            den: den / g,
        })
    }

    /// Parses strictly `"num/den"`; decimals are rejected.
    pub fn parse(s: &str) -> Result<Self, AdversaryError> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| AdversaryError::DeltaFormat(s.to_string()))?;
        let num = a
            .trim()
            .parse::<u64>()
            .map_err(|_| AdversaryError::DeltaFormat(s.to_string()))?;
        let den = b
            .trim()
            .parse::<u64>()
            .map_err(|_| AdversaryError::DeltaFormat(s.to_string()))?;
        DeltaParam::new(num, den)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `ceil(delta * n)`, the planted-set size.
    pub fn scaled_size(&self, n: usize) -> usize {
        let num = self.num as u128 * n as u128;
        num.div_ceil(self.den as u128) as usize
    }

    /// Whether `alpha > delta * n`, exactly.
    pub fn degree_exceeds(&self, alpha: u32, n: usize) -> bool {
        alpha as u128 * self.den as u128 > self.num as u128 * n as u128
    }

    pub fn as_ratio(&self) -> Ratio {
        Ratio::new(self.num, self.den)
    }
}

impl fmt::Display for DeltaParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// How the planted set S of size `ceil(delta*n)` is chosen.
#[derive(Clone, Debug)]
pub enum PlantedSet {
    /// The index prefix `{0, .., ceil(delta*n) - 1}`.
    Prefix,
    /// An explicit set; must have exactly `ceil(delta*n)` members.
    Explicit(Vec<PointId>),
}

/// Online adversary state: answers queries, freezing each answered pair.
///
/// One value serves exactly one deterministic algorithm run; query order is
/// semantically meaningful, so the type is strictly sequential. `finalize`
/// consumes the state, making post-finalization answering unrepresentable.
#[derive(Debug)]
pub struct Adversary {
    n: usize,
    delta: DeltaParam,
    in_s: Vec<bool>,
    s_list: Vec<PointId>,
    frozen: PairMap<Dist>,
    // answers in query order; avoids re-hashing every pair at finalize
    answer_seq: Vec<Dist>,
    log: QueryLog,
    pads: usize,
}

impl Adversary {
    pub fn new(n: usize, delta: DeltaParam, rule: PlantedSet) -> Result<Self, AdversaryError> {
        assert!(n >= 2, "adversary needs at least two points");
        assert!(n <= u32::MAX as usize, "point count exceeds PointId range");
        let size = delta.scaled_size(n);
        let s_list: Vec<PointId> = match rule {
            PlantedSet::Prefix => (0..size as PointId).collect(),
            PlantedSet::Explicit(mut list) => {
                list.sort_unstable();
                list.dedup();
                if list.len() != size {
                    return Err(AdversaryError::BadSetSize {
                        got: list.len(),
                        expected: size,
                    });
                }
                assert!(
                    list.iter().all(|&x| (x as usize) < n),
                    "planted point out of range"
                );
                list
            }
        };
        let mut in_s = vec![false; n];
        for &x in &s_list {
            in_s[x as usize] = true;
        }
        Ok(Adversary {
            n,
            delta,
            in_s,
            s_list,
            frozen: PairMap::default(),
            answer_seq: Vec::new(),
            log: QueryLog::new(n),
            pads: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> DeltaParam {
        self.delta
    }

    pub fn planted(&self) -> &[PointId] {
        &self.s_list
    }

    pub fn queries_made(&self) -> usize {
        self.log.len()
    }

    pub fn degree_of(&self, x: PointId) -> u32 {
        self.log.degree_of(x)
    }

    pub fn degrees(&self) -> &[u32] {
        self.log.degrees()
    }

    /// The frozen value of an already-answered pair, if any.
    pub fn frozen_lookup(&self, key: PairKey) -> Option<Dist> {
        self.frozen.get(&key.packed()).copied()
    }

    /// Answers the next distinct query by the seven-case freezing rule and
    /// records it. Degrees are read before the query is recorded.
    pub fn answer_query(&mut self, x: PointId, y: PointId) -> Result<Dist, MetricError> {
        let key = canonical_pair(x, y)?;
        assert!(
            (key.hi() as usize) < self.n,
            "query ({x},{y}) out of range for n = {}",
            self.n
        );
        let sx = self.in_s[x as usize];
        let sy = self.in_s[y as usize];
        let heavy_x = self.delta.degree_exceeds(self.log.degree_of(x), self.n);
        let heavy_y = self.delta.degree_exceeds(self.log.degree_of(y), self.n);
        let cases = [
            sx && sy,
            sx && !sy && !heavy_x,
            sy && !sx && !heavy_y,
            sx && !sy && heavy_x,
            sy && !sx && heavy_y,
            !sx && !sy && !heavy_x && !heavy_y,
            !sx && !sy && (heavy_x || heavy_y),
        ];
        debug_assert_eq!(
            cases.iter().filter(|&&c| c).count(),
            1,
            "answering cases must be exhaustive and mutually exclusive"
        );
        let value: Dist = match cases.iter().position(|&c| c).expect("one case fires") {
            0..=2 => 3,
            3 | 4 | 6 => 4,
            _ => 2,
        };
        self.log.record(key)?;
        let prev = self.frozen.insert(key.packed(), value);
        debug_assert!(prev.is_none(), "a distance can only be frozen once");
        self.answer_seq.push(value);
        Ok(value)
    }

    /// Issues dummy queries `(p, y)` in ascending `y` order for every
    /// unfrozen pair incident to `p`, so that afterwards `p` has degree
    /// `n - 1`. Returns the number of padding queries added.
    pub fn pad_output_queries(&mut self, p: PointId) -> usize {
        assert!((p as usize) < self.n, "output point out of range");
        let mut added = 0;
        for y in 0..self.n as PointId {
            if y == p {
                continue;
            }
            let key = canonical_pair(p, y).expect("distinct by construction");
            if !self.log.contains(key) {
                self.answer_query(p, y)
                    .expect("padding queries are fresh and distinct");
                added += 1;
            }
        }
        self.pads += added;
        added
    }

    /// Freezes the heavy set and the planted near-optimal point, then
    /// completes the metric. Requires `pad_output_queries(p)` to have run.
    pub fn finalize(self, p: PointId) -> Result<FinalizedInstance, AdversaryError> {
        assert!((p as usize) < self.n, "output point out of range");
        assert_eq!(
            self.log.degree_of(p) as usize,
            self.n - 1,
            "output point must be padded before finalizing"
        );
        let n = self.n;
        let alpha: Vec<u32> = self.log.degrees().to_vec();
        let mut b_list: Vec<PointId> = Vec::new();
        let mut in_sb = self.in_s.clone();
        for x in 0..n {
            if self.delta.degree_exceeds(alpha[x], n) {
                b_list.push(x as PointId);
                in_sb[x] = true;
            }
        }
        // Least-queried planted point, smallest index on ties.
        let p_hat = *self
            .s_list
            .iter()
            .min_by_key(|&&x| (alpha[x as usize], x))
            .expect("planted set is nonempty");
        if self.delta.degree_exceeds(alpha[p_hat as usize], n) {
            // min over S exceeds the threshold, so S \ B is empty.
            return Err(AdversaryError::EmptySafeSet {
                n,
                b_size: b_list.len(),
                q_total: self.log.len(),
            });
        }

        let mut adj: Vec<Vec<(PointId, Dist)>> = vec![Vec::new(); n];
        for (key, &d) in self.log.seq().iter().zip(&self.answer_seq) {
            adj[key.lo() as usize].push((key.hi(), d));
            adj[key.hi() as usize].push((key.lo(), d));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(y, _)| y);
        }

        Ok(FinalizedInstance {
            n,
            delta: self.delta,
            s_list: self.s_list,
            in_s: self.in_s,
            b_list,
            in_sb,
            p_hat,
            p,
            q_algorithm: self.log.len() - self.pads,
            seq: self.log.seq().to_vec(),
            alpha,
            adj,
        })
    }
}

/// A completed adversary instance: frozen distances plus the closed-form
/// completion. Immutable and safe to share across readers.
///
/// The metric is implicit; `dist` is O(log deg) and `fill_row` is
/// O(n + deg). `to_dense` materializes on demand.
#[derive(Debug)]
pub struct FinalizedInstance {
    n: usize,
    delta: DeltaParam,
    s_list: Vec<PointId>,
    in_s: Vec<bool>,
    b_list: Vec<PointId>,
    in_sb: Vec<bool>,
    p_hat: PointId,
    p: PointId,
    q_algorithm: usize,
    seq: Vec<PairKey>,
    alpha: Vec<u32>,
    adj: Vec<Vec<(PointId, Dist)>>,
}

impl FinalizedInstance {
    pub fn delta(&self) -> DeltaParam {
        self.delta
    }

    pub fn planted(&self) -> &[PointId] {
        &self.s_list
    }

    pub fn heavy(&self) -> &[PointId] {
        &self.b_list
    }

    pub fn b_size(&self) -> usize {
        self.b_list.len()
    }

    pub fn p_hat(&self) -> PointId {
        self.p_hat
    }

    pub fn output(&self) -> PointId {
        self.p
    }

    pub fn q_total(&self) -> usize {
        self.seq.len()
    }

    pub fn q_algorithm(&self) -> usize {
        self.q_algorithm
    }

    /// All queried pairs in order: the algorithm's queries, then padding.
    pub fn query_seq(&self) -> &[PairKey] {
        &self.seq
    }

    pub fn alpha(&self, x: PointId) -> u32 {
        self.alpha[x as usize]
    }

    pub fn alphas(&self) -> &[u32] {
        &self.alpha
    }

    pub fn alpha_phat(&self) -> u32 {
        self.alpha[self.p_hat as usize]
    }

    pub fn in_planted(&self, x: PointId) -> bool {
        self.in_s[x as usize]
    }

    pub fn in_heavy_or_planted(&self, x: PointId) -> bool {
        self.in_sb[x as usize]
    }

    pub fn frozen_lookup(&self, key: PairKey) -> Option<Dist> {
        let (list, target) =
            if self.adj[key.lo() as usize].len() <= self.adj[key.hi() as usize].len() {
                (&self.adj[key.lo() as usize], key.hi())
            } else {
                (&self.adj[key.hi() as usize], key.lo())
            };
        list.binary_search_by_key(&target, |&(y, _)| y)
            .ok()
            .map(|i| list[i].1)
    }

    /// `|S u B u N(p_hat)|`, the concrete set behind the upper bound.
    pub fn sbn_size(&self) -> usize {
        let mut count = self.in_sb.iter().filter(|&&b| b).count();
        for &(y, _) in &self.adj[self.p_hat as usize] {
            if !self.in_sb[y as usize] {
                count += 1;
            }
        }
        count
    }

    /// Completion value for an unfrozen off-diagonal pair.
    fn completion(&self, x: PointId, y: PointId) -> Dist {
        debug_assert_ne!(x, y);
        let xh = x == self.p_hat;
        let yh = y == self.p_hat;
        let xsb = self.in_sb[x as usize];
        let ysb = self.in_sb[y as usize];
        let cases = [
            xh && !ysb,
            yh && !xsb,
            xsb && ysb,
            xsb && !xh && !ysb && !yh,
            ysb && !yh && !xsb && !xh,
            !xsb && !ysb && !xh && !yh,
        ];
        debug_assert_eq!(
            cases.iter().filter(|&&c| c).count(),
            1,
            "completion cases must be exhaustive and mutually exclusive"
        );
        match cases.iter().position(|&c| c).expect("one case fires") {
            0 | 1 => 1,
            2 => 3,
            3 | 4 => 4,
            _ => 2,
        }
    }

    /// Materializes the dense matrix: O(n^2) memory, intended for small n.
    pub fn to_dense(&self) -> DenseMetric {
        let mut rows = Vec::with_capacity(self.n);
        let mut row = vec![0; self.n];
        for x in 0..self.n as PointId {
            self.fill_row(x, &mut row);
            rows.push(row.clone());
        }
        DenseMetric::from_rows(&rows)
    }

    pub fn export(&self) -> InstanceExport {
        InstanceExport {
            n: self.n,
            delta: self.delta.to_string(),
            s: self.s_list.clone(),
            b: self.b_list.clone(),
            p_hat: self.p_hat,
            p: self.p,
            q_total: self.seq.len(),
            frozen: self
                .seq
                .iter()
                .map(|k| {
                    (
                        k.lo(),
                        k.hi(),
                        self.frozen_lookup(*k).expect("logged pairs are frozen"),
                    )
                })
                .collect(),
        }
    }

    /// Rebuilds an instance from its export, re-deriving degrees and
    /// membership and cross-checking them against the recorded sets.
    pub fn from_export(export: &InstanceExport) -> Result<Self, AdversaryError> {
        let n = export.n;
        let delta = DeltaParam::parse(&export.delta)?;
        if export.s.len() != delta.scaled_size(n) {
            return Err(AdversaryError::BadImport(format!(
                "planted set has {} points, expected {}",
                export.s.len(),
                delta.scaled_size(n)
            )));
        }
        let mut log = QueryLog::new(n);
        let mut adj: Vec<Vec<(PointId, Dist)>> = vec![Vec::new(); n];
        let mut seq = Vec::with_capacity(export.frozen.len());
        for &(lo, hi, d) in &export.frozen {
            let key = canonical_pair(lo, hi).map_err(AdversaryError::Query)?;
            log.record(key).map_err(AdversaryError::Query)?;
            seq.push(key);
            adj[lo as usize].push((hi, d));
            adj[hi as usize].push((lo, d));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(y, _)| y);
        }
        let alpha = log.degrees().to_vec();
        let mut in_s = vec![false; n];
        for &x in &export.s {
            in_s[x as usize] = true;
        }
        let mut in_sb = in_s.clone();
        let mut b_list = Vec::new();
        for x in 0..n {
            if delta.degree_exceeds(alpha[x], n) {
                b_list.push(x as PointId);
                in_sb[x] = true;
            }
        }
        if b_list != export.b {
            return Err(AdversaryError::BadImport(
                "recorded heavy set disagrees with recomputed degrees".into(),
            ));
        }
        if !in_s[export.p_hat as usize] || delta.degree_exceeds(alpha[export.p_hat as usize], n) {
            return Err(AdversaryError::BadImport(
                "recorded p_hat is not a lightly queried planted point".into(),
            ));
        }
        if alpha[export.p as usize] as usize != n - 1 {
            return Err(AdversaryError::BadImport(
                "recorded output point is not fully padded".into(),
            ));
        }
        Ok(FinalizedInstance {
            n,
            delta,
            s_list: export.s.clone(),
            in_s,
            b_list,
            in_sb,
            p_hat: export.p_hat,
            p: export.p,
            q_algorithm: export.q_total,
            seq,
            alpha,
            adj,
        })
    }
}

impl Metric for FinalizedInstance {
    fn n(&self) -> usize {
        self.n
    }

    fn dist(&self, x: PointId, y: PointId) -> Dist {
        if x == y {
            return 0;
        }
        let key = canonical_pair(x, y).expect("distinct");
        match self.frozen_lookup(key) {
            Some(d) => d,
            None => self.completion(x, y),
        }
    }

    fn fill_row(&self, x: PointId, out: &mut [Dist]) {
        assert_eq!(out.len(), self.n);
        let xh = x == self.p_hat;
        let xsb = self.in_sb[x as usize];
        if xh {
            for (y, slot) in out.iter_mut().enumerate() {
                *slot = if self.in_sb[y] { 3 } else { 1 };
            }
        } else if xsb {
            for (y, slot) in out.iter_mut().enumerate() {
                *slot = if self.in_sb[y] { 3 } else { 4 };
            }
        } else {
            for (y, slot) in out.iter_mut().enumerate() {
                *slot = if y == self.p_hat as usize {
                    1
                } else if self.in_sb[y] {
                    4
                } else {
                    2
                };
            }
        }
        for &(y, d) in &self.adj[x as usize] {
            out[y as usize] = d;
        }
        out[x as usize] = 0;
    }
}

/// JSON-exportable image of a finalized instance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InstanceExport {
    pub n: usize,
    pub delta: String,
    #[serde(rename = "S")]
    pub s: Vec<PointId>,
    #[serde(rename = "B")]
    pub b: Vec<PointId>,
    pub p_hat: PointId,
    pub p: PointId,
    pub q_total: usize,
    pub frozen: Vec<(PointId, PointId, Dist)>,
}

/// Audited cost summary of one finalized instance.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub n: usize,
    pub delta: String,
    pub cost_p: u64,
    pub cost_phat: u64,
    pub lower_bound_p: u64,
    pub upper_bound_phat: u64,
    pub ratio_floor: Ratio,
    pub measured_ratio: Ratio,
    pub b_size: usize,
    pub q_total: usize,
    pub alpha_phat: u32,
    pub sbn_size: usize,
}

/// `max(0, 4*(n - 2*ceil(delta*n) - 2))`: the certified floor on the output
/// point's cost. Clamped at zero so degenerate small-n reports stay
/// well-formed.
pub fn output_cost_floor(n: usize, delta: DeltaParam) -> u64 {
    let raw = n as i64 - 2 * delta.scaled_size(n) as i64 - 2;
    (4 * raw.max(0)) as u64
}

/// Computes both costs in O(n) lookups each and audits the proven bounds.
/// A `BoundViolation` signals an implementation bug, never expected input.
pub fn instance_report(inst: &FinalizedInstance) -> Result<InstanceReport, AdversaryError> {
    let n = inst.n();
    let cost_p = point_cost(inst, inst.p);
    let cost_phat = point_cost(inst, inst.p_hat);
    let lower_bound_p = output_cost_floor(n, inst.delta);
    let sbn_size = inst.sbn_size();
    let upper_bound_phat = n as u64 + 3 * sbn_size as u64;
    let violation = |what: &'static str| AdversaryError::BoundViolation {
        what,
        n,
        b_size: inst.b_size(),
        cost_p,
        lower_bound_p,
        cost_phat,
        upper_bound_phat,
    };
    if cost_p < lower_bound_p {
        return Err(violation("output point cost below certified floor"));
    }
    if cost_phat > upper_bound_phat {
        return Err(violation("planted point cost above certified ceiling"));
    }
    debug_assert!(cost_phat > 0);
    Ok(InstanceReport {
        n,
        delta: inst.delta.to_string(),
        cost_p,
        cost_phat,
        lower_bound_p,
        upper_bound_phat,
        ratio_floor: Ratio::new(lower_bound_p, cost_phat),
        measured_ratio: Ratio::new(cost_p, cost_phat),
        b_size: inst.b_size(),
        q_total: inst.q_total(),
        alpha_phat: inst.alpha_phat(),
        sbn_size,
    })
}
