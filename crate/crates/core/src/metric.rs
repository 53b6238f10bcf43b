//! Point and distance domain types, query bookkeeping, metric validation,
//! and exact 1-median computation.
//!
//! Distances are non-negative integers throughout; costs are un-normalized
//! sums, so every comparison in this module is exact integer arithmetic.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rational::Ratio;

/// Index of a point in the groundset `{0, .., n-1}`.
pub type PointId = u32;

/// A non-negative integer distance. Adversary instances only ever use
/// `{0, 1, 2, 3, 4}`; file-loaded matrices may use any `u32`.
pub type Dist = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("query for d({0},{0}) is forbidden")]
    SelfPair(PointId),
    #[error("pair ({0},{1}) was already queried")]
    RepeatedQuery(PointId, PointId),
    #[error("optimal cost is zero; approximation ratio undefined")]
    DegenerateOptimum,
    #[error("distance {dist} at ({x},{y}) is outside {{1,2,3,4}}")]
    RangeError { x: PointId, y: PointId, dist: Dist },
}

/// Canonical unordered pair of distinct points, stored as `lo < hi`.
///
/// `(x, y)` and `(y, x)` map to the same key, so a `PairKey` identifies one
/// edge of the query graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PairKey {
    lo: PointId,
    hi: PointId,
}

impl PairKey {
    pub fn new(x: PointId, y: PointId) -> Result<Self, MetricError> {
        if x == y {
            return Err(MetricError::SelfPair(x));
        }
        Ok(PairKey {
            lo: x.min(y),
            hi: x.max(y),
        })
    }

    pub fn lo(&self) -> PointId {
        self.lo
    }

    pub fn hi(&self) -> PointId {
        self.hi
    }

    /// Dense `u64` encoding used as a hash key.
    pub(crate) fn packed(&self) -> u64 {
        (self.lo as u64) << 32 | self.hi as u64
    }
}

/// Canonicalizes an unordered query `(x, y)`; self-queries are rejected.
pub fn canonical_pair(x: PointId, y: PointId) -> Result<PairKey, MetricError> {
    PairKey::new(x, y)
}

/// Deterministic multiply-shift hasher for packed pair keys. Query logs and
/// frozen-distance maps are probed on every oracle call, so the default
/// hasher's per-call cost dominates large runs.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct PairKeyHasher(u64);

impl std::hash::Hasher for PairKeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(buf));
        }
    }

    fn write_u64(&mut self, v: u64) {
        let mut x = v ^ self.0;
        x ^= x >> 30;
        x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x ^= x >> 27;
        x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        self.0 = x;
    }
}

pub(crate) type PairKeyHashBuilder = std::hash::BuildHasherDefault<PairKeyHasher>;
pub(crate) type PairSet = HashSet<u64, PairKeyHashBuilder>;
pub(crate) type PairMap<V> = std::collections::HashMap<u64, V, PairKeyHashBuilder>;

/// Ordered sequence of distinct unordered queries plus per-point degree
/// counters (the degree of `x` in the undirected graph of queried pairs).
#[derive(Clone, Debug)]
pub struct QueryLog {
    seq: Vec<PairKey>,
    degree: Vec<u32>,
    seen: PairSet,
}

impl QueryLog {
    pub fn new(n: usize) -> Self {
        QueryLog {
            seq: Vec::new(),
            degree: vec![0; n],
            seen: PairSet::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.degree.len()
    }

    /// Appends a fresh query, incrementing exactly the two endpoint degrees.
    pub fn record(&mut self, key: PairKey) -> Result<(), MetricError> {
        assert!(
            (key.hi as usize) < self.degree.len(),
            "pair ({},{}) out of range for n = {}",
            key.lo,
            key.hi,
            self.degree.len()
        );
        if !self.seen.insert(key.packed()) {
            return Err(MetricError::RepeatedQuery(key.lo, key.hi));
        }
        self.seq.push(key);
        self.degree[key.lo as usize] += 1;
        self.degree[key.hi as usize] += 1;
        Ok(())
    }

    pub fn contains(&self, key: PairKey) -> bool {
        self.seen.contains(&key.packed())
    }

    /// Current degree of `x` in the query graph.
    pub fn degree_of(&self, x: PointId) -> u32 {
        self.degree[x as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn seq(&self) -> &[PairKey] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// A total symmetric distance function on `n` points.
///
/// Implementations are not assumed valid metrics; `validate_metric` checks
/// the axioms. `fill_row` exists so implicit representations can serve whole
/// rows cheaply.
pub trait Metric {
    fn n(&self) -> usize;

    fn dist(&self, x: PointId, y: PointId) -> Dist;

    fn fill_row(&self, x: PointId, out: &mut [Dist]) {
        for (y, slot) in out.iter_mut().enumerate() {
            *slot = self.dist(x, y as PointId);
        }
    }
}

/// Row-major dense matrix. A plain container: it may hold asymmetric or
/// otherwise invalid data so the validator has something real to reject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMetric {
    n: usize,
    cells: Vec<Dist>,
}

impl DenseMetric {
    pub fn zeroed(n: usize) -> Self {
        DenseMetric {
            n,
            cells: vec![0; n * n],
        }
    }

    /// All off-diagonal entries `d`, zero diagonal.
    pub fn uniform(n: usize, d: Dist) -> Self {
        let mut m = DenseMetric::zeroed(n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    m.cells[x * n + y] = d;
                }
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Dist>]) -> Self {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "dense matrix must be square");
            cells.extend_from_slice(row);
        }
        DenseMetric { n, cells }
    }

    /// Sets both `(x,y)` and `(y,x)`.
    pub fn set_pair(&mut self, x: PointId, y: PointId, d: Dist) {
        self.cells[x as usize * self.n + y as usize] = d;
        self.cells[y as usize * self.n + x as usize] = d;
    }

    /// Sets a single cell, allowing asymmetric fixtures.
    pub fn set_raw(&mut self, x: PointId, y: PointId, d: Dist) {
        self.cells[x as usize * self.n + y as usize] = d;
    }

    /// Parses the dense text format: line 1 is `n`, then `n` rows of `n`
    /// space-separated integers.
    pub fn parse_text(input: &str) -> Result<Self, TextFormatError> {
        let mut lines = input.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| TextFormatError::parse(1, "empty input"))?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|e| TextFormatError::parse(1, format!("bad point count: {e}")))?;
        let mut cells = Vec::with_capacity(n * n);
        for row in 0..n {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| TextFormatError::parse(row + 2, "missing matrix row"))?;
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: Dist = tok
                    .parse()
                    .map_err(|e| TextFormatError::parse(idx + 1, format!("bad distance: {e}")))?;
                cells.push(v);
                count += 1;
            }
            if count != n {
                return Err(TextFormatError::parse(
                    idx + 1,
                    format!("expected {n} entries, found {count}"),
                ));
            }
        }
        Ok(DenseMetric { n, cells })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.n.to_string());
        out.push('\n');
        for x in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|y| self.cells[x * self.n + y].to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl Metric for DenseMetric {
    fn n(&self) -> usize {
        self.n
    }

    fn dist(&self, x: PointId, y: PointId) -> Dist {
        self.cells[x as usize * self.n + y as usize]
    }

    fn fill_row(&self, x: PointId, out: &mut [Dist]) {
        let start = x as usize * self.n;
        out.copy_from_slice(&self.cells[start..start + self.n]);
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextFormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl TextFormatError {
    fn parse(line: usize, msg: impl Into<String>) -> Self {
        TextFormatError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

/// Un-normalized cost of `x`: the sum of its distances to all points.
pub fn point_cost<M: Metric + ?Sized>(m: &M, x: PointId) -> u64 {
    let mut row = vec![0; m.n()];
    m.fill_row(x, &mut row);
    row.iter().map(|&d| d as u64).sum()
}

/// Exact 1-median: the point with minimum cost, smallest index on ties.
pub fn exact_median<M: Metric + Sync + ?Sized>(m: &M) -> (PointId, u64) {
    let n = m.n();
    assert!(n >= 1, "exact_median needs at least one point");
    let costs: Vec<u64> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0; n],
            |row, x| {
                m.fill_row(x as PointId, row);
                row.iter().map(|&d| d as u64).sum()
            },
        )
        .collect();
    let mut best = (0 as PointId, costs[0]);
    for (x, &c) in costs.iter().enumerate().skip(1) {
        if c < best.1 {
            best = (x as PointId, c);
        }
    }
    best
}

/// Exact approximation ratio `cost_out / cost_opt`.
pub fn approx_ratio(cost_out: u64, cost_opt: u64) -> Result<Ratio, MetricError> {
    if cost_opt == 0 {
        return Err(MetricError::DegenerateOptimum);
    }
    Ok(Ratio::new(cost_out, cost_opt))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidateMode {
    /// Checks every triple: O(n^3).
    Full,
    /// Requires distances in {1,2,3,4} and checks only the triple shapes
    /// that can violate the triangle inequality there, all of which contain
    /// a distance-1 edge: near-linear in the number of 1-edges times n.
    Structured,
}

/// One failed check, with enough coordinates to reproduce it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationRecord {
    pub check: &'static str,
    pub x: PointId,
    pub y: PointId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<PointId>,
    pub d_xy: Dist,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_xz: Option<Dist>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_yz: Option<Dist>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub symmetric_ok: bool,
    pub diagonal_ok: bool,
    pub positivity_ok: bool,
    pub triangle_ok: bool,
    pub first_violation: Option<ViolationRecord>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.symmetric_ok && self.diagonal_ok && self.positivity_ok && self.triangle_ok
    }
}

/// Checks the metric axioms.
///
/// Both modes verify symmetry, zero diagonal and positivity over all pairs.
/// `Full` then scans every triple; `Structured` scans only triples incident
/// to a distance-1 edge, which is exhaustive when all off-diagonal distances
/// lie in {1,2,3,4} (any violating triple there has side multiset {1,1,3},
/// {1,1,4} or {1,2,4}). `Structured` rejects out-of-range distances.
pub fn validate_metric<M: Metric + Sync + ?Sized>(
    m: &M,
    mode: ValidateMode,
) -> Result<ValidationReport, MetricError> {
    let n = m.n();
    let mut report = ValidationReport {
        symmetric_ok: true,
        diagonal_ok: true,
        positivity_ok: true,
        triangle_ok: true,
        first_violation: None,
    };

    // Diagonal.
    for x in 0..n as PointId {
        let d = m.dist(x, x);
        if d != 0 {
            report.diagonal_ok = false;
            note_violation(
                &mut report,
                ViolationRecord {
                    check: "diagonal",
                    x,
                    y: x,
                    z: None,
                    d_xy: d,
                    d_xz: None,
                    d_yz: None,
                },
            );
            break;
        }
    }

    // Pair scan: symmetry, positivity, range (structured), 1-edge collection.
    // Parallel over rows; each row reports its first finding so the overall
    // first violation is the lexicographically smallest.
    struct RowScan {
        sym: Option<(PointId, PointId, Dist, Dist)>,
        pos: Option<(PointId, PointId)>,
        range: Option<(PointId, PointId, Dist)>,
        ones: Vec<(PointId, PointId)>,
    }
    let structured = mode == ValidateMode::Structured;
    let scans: Vec<RowScan> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0; n],
            |row, xi| {
                let x = xi as PointId;
                m.fill_row(x, row);
                let mut scan = RowScan {
                    sym: None,
                    pos: None,
                    range: None,
                    ones: Vec::new(),
                };
                for (yi, &d) in row.iter().enumerate().skip(xi + 1) {
                    let y = yi as PointId;
                    if scan.pos.is_none() && d == 0 {
                        scan.pos = Some((x, y));
                    }
                    if structured && scan.range.is_none() && !(1..=4).contains(&d) {
                        scan.range = Some((x, y, d));
                    }
                    if d == 1 {
                        scan.ones.push((x, y));
                    }
                    if scan.sym.is_none() {
                        let back = m.dist(y, x);
                        if d != back {
                            scan.sym = Some((x, y, d, back));
                        }
                    }
                }
                scan
            },
        )
        .collect();

    let mut one_edges: Vec<(PointId, PointId)> = Vec::new();
    for scan in &scans {
        one_edges.extend_from_slice(&scan.ones);
    }
    for scan in &scans {
        if let Some((x, y, d_xy, d_yx)) = scan.sym {
            report.symmetric_ok = false;
            note_violation(
                &mut report,
                ViolationRecord {
                    check: "symmetry",
                    x,
                    y,
                    z: None,
                    d_xy,
                    d_xz: Some(d_yx),
                    d_yz: None,
                },
            );
            break;
        }
    }
    for scan in &scans {
        if let Some((x, y)) = scan.pos {
            report.positivity_ok = false;
            note_violation(
                &mut report,
                ViolationRecord {
                    check: "positivity",
                    x,
                    y,
                    z: None,
                    d_xy: 0,
                    d_xz: None,
                    d_yz: None,
                },
            );
            break;
        }
    }
    if structured {
        for scan in &scans {
            if let Some((x, y, d)) = scan.range {
                return Err(MetricError::RangeError { x, y, dist: d });
            }
        }
    }

    let triangle = match mode {
        ValidateMode::Full => full_triangle_scan(m),
        ValidateMode::Structured => structured_triangle_scan(m, &one_edges),
    };
    if let Some(v) = triangle {
        report.triangle_ok = false;
        note_violation(&mut report, v);
    }
    Ok(report)
}

fn note_violation(report: &mut ValidationReport, v: ViolationRecord) {
    if report.first_violation.is_none() {
        report.first_violation = Some(v);
    }
}

/// First triple (lexicographic) violating the triangle inequality, if any.
fn full_triangle_scan<M: Metric + Sync + ?Sized>(m: &M) -> Option<ViolationRecord> {
    let n = m.n();
    let rows: Vec<Vec<Dist>> = (0..n)
        .map(|x| {
            let mut row = vec![0; n];
            m.fill_row(x as PointId, &mut row);
            row
        })
        .collect();
    let hit = (0..n)
        .into_par_iter()
        .filter_map(|x| {
            for y in x + 1..n {
                for z in y + 1..n {
                    let a = rows[x][y];
                    let b = rows[x][z];
                    let c = rows[y][z];
                    // All three orientations of d(u,v) + d(u,w) >= d(v,w).
                    let bad = (a as u64 + b as u64) < c as u64
                        || (a as u64 + c as u64) < b as u64
                        || (b as u64 + c as u64) < a as u64;
                    if bad {
                        return Some((x, y, z, a, b, c));
                    }
                }
            }
            None
        })
        .min_by_key(|&(x, y, z, ..)| (x, y, z));
    hit.map(|(x, y, z, a, b, c)| ViolationRecord {
        check: "triangle",
        x: x as PointId,
        y: y as PointId,
        z: Some(z as PointId),
        d_xy: a,
        d_xz: Some(b),
        d_yz: Some(c),
    })
}

/// Scans triples incident to distance-1 edges for the two violating shapes
/// possible over {1,2,3,4}: a 1-edge with opposite sides {2,4}, and two
/// 1-edges sharing an endpoint with the far side in {3,4}.
fn structured_triangle_scan<M: Metric + Sync + ?Sized>(
    m: &M,
    one_edges: &[(PointId, PointId)],
) -> Option<ViolationRecord> {
    let n = m.n();
    let hit = one_edges
        .par_iter()
        .map_init(
            || (vec![0; n], vec![0; n], PointId::MAX),
            |(row_x, row_y, cached_x), &(x, y)| {
                // 1-edges cluster on one endpoint, so its row stays cached.
                if *cached_x != x {
                    m.fill_row(x, row_x);
                    *cached_x = x;
                }
                m.fill_row(y, row_y);
                for zi in 0..n {
                    let z = zi as PointId;
                    if z == x || z == y {
                        continue;
                    }
                    let a = row_x[zi]; // d(x,z)
                    let b = row_y[zi]; // d(y,z)
                    let opposite = (a == 2 && b == 4) || (a == 4 && b == 2);
                    let shared_x = a == 1 && (b == 3 || b == 4);
                    let shared_y = b == 1 && (a == 3 || a == 4);
                    if opposite || shared_x || shared_y {
                        return Some((x, y, z, a, b));
                    }
                }
                None
            },
        )
        .flatten()
        .min_by_key(|&(x, y, z, ..)| (x, y, z));
    hit.map(|(x, y, z, a, b)| ViolationRecord {
        check: "triangle",
        x,
        y,
        z: Some(z),
        d_xy: 1,
        d_xz: Some(a),
        d_yz: Some(b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pair_orders_and_rejects_self() {
        let k = canonical_pair(3, 7).unwrap();
        assert_eq!((k.lo(), k.hi()), (3, 7));
        let k = canonical_pair(7, 3).unwrap();
        assert_eq!((k.lo(), k.hi()), (3, 7));
        assert_eq!(canonical_pair(5, 5), Err(MetricError::SelfPair(5)));
    }

    #[test]
    fn query_log_tracks_degrees() {
        let mut log = QueryLog::new(4);
        assert_eq!(log.degree_of(2), 0);
        log.record(canonical_pair(0, 1).unwrap()).unwrap();
        assert_eq!(log.seq(), &[canonical_pair(0, 1).unwrap()]);
        assert_eq!((log.degree_of(0), log.degree_of(1)), (1, 1));
        // (1,0) repeats (0,1).
        assert_eq!(
            log.record(canonical_pair(1, 0).unwrap()),
            Err(MetricError::RepeatedQuery(0, 1))
        );
        log.record(canonical_pair(0, 2).unwrap()).unwrap();
        assert_eq!(log.degree_of(0), 2);
        assert_eq!(log.degree_of(1), 1);
        assert_eq!(log.degree_of(2), 1);
        assert_eq!(log.degree_of(3), 0);
    }

    #[test]
    fn degree_sum_is_twice_edge_count() {
        let mut log = QueryLog::new(6);
        for (x, y) in [(0, 1), (0, 2), (3, 4), (1, 2), (5, 0)] {
            log.record(canonical_pair(x, y).unwrap()).unwrap();
        }
        let total: u32 = log.degrees().iter().sum();
        assert_eq!(total as usize, 2 * log.len());
    }

    #[test]
    fn point_cost_examples() {
        let m = DenseMetric::uniform(3, 2);
        assert_eq!(point_cost(&m, 0), 4);
        let mut m2 = DenseMetric::zeroed(2);
        m2.set_pair(0, 1, 4);
        assert_eq!(point_cost(&m2, 1), 4);
    }

    #[test]
    fn exact_median_enumerates() {
        let m = DenseMetric::uniform(3, 2);
        assert_eq!(exact_median(&m), (0, 4));
        // Costs are 2, 3, 3.
        let mut m2 = DenseMetric::zeroed(3);
        m2.set_pair(0, 1, 1);
        m2.set_pair(0, 2, 1);
        m2.set_pair(1, 2, 2);
        assert_eq!(exact_median(&m2), (0, 2));
    }

    #[test]
    fn approx_ratio_examples() {
        assert_eq!(approx_ratio(4, 4).unwrap(), Ratio::from_integer(1));
        let r = approx_ratio(39192, 10903).unwrap();
        assert_eq!(r.to_string(), "39192/10903");
        assert!((r.as_f64() - 3.595).abs() < 1e-3);
        assert_eq!(approx_ratio(7, 0), Err(MetricError::DegenerateOptimum));
    }

    #[test]
    fn approx_ratio_scale_invariant() {
        let base = approx_ratio(74, 23).unwrap();
        for k in 1..20 {
            assert_eq!(approx_ratio(74 * k, 23 * k).unwrap(), base);
        }
    }

    #[test]
    fn validate_equilateral_passes_both_modes() {
        let m = DenseMetric::uniform(3, 2);
        for mode in [ValidateMode::Full, ValidateMode::Structured] {
            let rep = validate_metric(&m, mode).unwrap();
            assert!(rep.all_ok(), "{mode:?}: {rep:?}");
        }
    }

    #[test]
    fn validate_flags_1_1_4_triangle() {
        let mut m = DenseMetric::zeroed(3);
        m.set_pair(0, 1, 1);
        m.set_pair(0, 2, 1);
        m.set_pair(1, 2, 4);
        for mode in [ValidateMode::Full, ValidateMode::Structured] {
            let rep = validate_metric(&m, mode).unwrap();
            assert!(!rep.triangle_ok, "{mode:?}");
            let v = rep.first_violation.unwrap();
            assert_eq!(v.check, "triangle");
            assert_eq!((v.x, v.y, v.z), (0, 1, Some(2)));
        }
    }

    #[test]
    fn validate_flags_asymmetry_and_diagonal() {
        let mut m = DenseMetric::uniform(3, 2);
        m.set_raw(0, 1, 3);
        let rep = validate_metric(&m, ValidateMode::Full).unwrap();
        assert!(!rep.symmetric_ok);

        let mut m2 = DenseMetric::uniform(3, 2);
        m2.set_raw(1, 1, 5);
        let rep2 = validate_metric(&m2, ValidateMode::Full).unwrap();
        assert!(!rep2.diagonal_ok);

        let mut m3 = DenseMetric::uniform(3, 2);
        m3.set_pair(0, 2, 0);
        let rep3 = validate_metric(&m3, ValidateMode::Full).unwrap();
        assert!(!rep3.positivity_ok);
    }

    #[test]
    fn structured_rejects_out_of_range() {
        let m = DenseMetric::uniform(3, 7);
        let err = validate_metric(&m, ValidateMode::Structured).unwrap_err();
        assert_eq!(
            err,
            MetricError::RangeError {
                x: 0,
                y: 1,
                dist: 7
            }
        );
        // Full mode accepts any positive integers.
        assert!(validate_metric(&m, ValidateMode::Full).unwrap().all_ok());
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let mut m = DenseMetric::uniform(3, 2);
        m.set_pair(0, 1, 1);
        let text = m.to_text();
        assert_eq!(DenseMetric::parse_text(&text).unwrap(), m);

        let err = DenseMetric::parse_text("3\n0 2 2\n2 0\n2 2 0\n").unwrap_err();
        assert_eq!(
            err,
            TextFormatError::Parse {
                line: 3,
                msg: "expected 3 entries, found 2".into()
            }
        );
        assert!(DenseMetric::parse_text("x\n").is_err());
        assert!(DenseMetric::parse_text("2\n0 1\n").is_err());
    }
}
