//! Orchestration: run an algorithm against a fresh adversary, pad, finalize,
//! audit, validate and replay, producing flat records for export.
//!
//! Everything here is deterministic for fixed inputs except the wall-clock
//! field of a record.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{
    instance_report, Adversary, AdversaryError, DeltaParam, FinalizedInstance, InstanceReport,
    PlantedSet,
};
use crate::algorithms::{run, AlgorithmId, Oracle, OracleError, PassiveSource, RunTrace};
use crate::metric::{exact_median, validate_metric, ValidateMode, ValidationReport};
use crate::rational::Ratio;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metric(#[from] crate::metric::MetricError),
    #[error("finalized instance failed {mode:?} validation: {report:?}")]
    Validation {
        mode: ValidateMode,
        report: Box<ValidationReport>,
    },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("replay diverged at query {index}: recorded ({rec_lo},{rec_hi}), replayed ({got_lo},{got_hi})")]
    QueryMismatch {
        index: usize,
        rec_lo: u32,
        rec_hi: u32,
        got_lo: u32,
        got_hi: u32,
    },
    #[error("replay answer mismatch at query {index}: recorded {recorded}, replayed {replayed}")]
    AnswerMismatch {
        index: usize,
        recorded: u32,
        replayed: u32,
    },
    #[error("replay made {replayed} distinct queries, recorded run made {recorded}")]
    CountMismatch { recorded: usize, replayed: usize },
    #[error("replay output mismatch: recorded {recorded}, replayed {replayed}")]
    OutputMismatch { recorded: u32, replayed: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Everything produced by one successfully finalized run.
pub struct RunArtifacts {
    pub instance: FinalizedInstance,
    pub report: InstanceReport,
    pub trace: RunTrace,
}

/// Outcome of driving one algorithm against one fresh adversary.
pub enum CellOutcome {
    Finalized(Box<RunArtifacts>),
    /// The construction's light-point premise failed at this density;
    /// counters are kept for bookkeeping checks.
    EmptySafeSet {
        b_size: usize,
        q_total: usize,
        degree_sum: u64,
        distinct_queries: u64,
        redundant_queries: u64,
    },
}

/// Runs `alg` against a fresh adversary, pads its output, finalizes and
/// audits the instance.
pub fn execute(
    n: usize,
    delta: DeltaParam,
    alg: &AlgorithmId,
    budget: Option<u64>,
) -> Result<CellOutcome, HarnessError> {
    let adversary = Adversary::new(n, delta, PlantedSet::Prefix)?;
    let oracle = match budget {
        Some(b) => Oracle::with_budget(adversary, b),
        None => Oracle::new(adversary),
    };
    let (trace, mut adversary) = run(alg, oracle)?;
    adversary.pad_output_queries(trace.output);
    let degree_sum: u64 = adversary.degrees().iter().map(|&d| d as u64).sum();
    let b_size = (0..n)
        .filter(|&x| delta.degree_exceeds(adversary.degrees()[x], n))
        .count();
    let q_total = adversary.queries_made();
    match adversary.finalize(trace.output) {
        Ok(instance) => {
            let report = instance_report(&instance)?;
            Ok(CellOutcome::Finalized(Box::new(RunArtifacts {
                instance,
                report,
                trace,
            })))
        }
        Err(AdversaryError::EmptySafeSet { .. }) => Ok(CellOutcome::EmptySafeSet {
            b_size,
            q_total,
            degree_sum,
            distinct_queries: trace.distinct_queries,
            redundant_queries: trace.redundant_queries,
        }),
        Err(other) => Err(other.into()),
    }
}

/// Re-runs the algorithm against the finalized metric as a passive oracle
/// and checks that the query sequence, every answer and the output match
/// the recorded run.
pub fn replay_consistency(inst: &FinalizedInstance, alg: &AlgorithmId) -> Result<(), ReplayError> {
    let oracle = Oracle::new(PassiveSource::new(inst));
    let (trace, _) = run(alg, oracle)?;
    let recorded = &inst.query_seq()[..inst.q_algorithm()];
    if trace.queries.len() != recorded.len() {
        return Err(ReplayError::CountMismatch {
            recorded: recorded.len(),
            replayed: trace.queries.len(),
        });
    }
    for (index, (&(key, answer), &rec)) in trace.queries.iter().zip(recorded).enumerate() {
        if key != rec {
            return Err(ReplayError::QueryMismatch {
                index,
                rec_lo: rec.lo(),
                rec_hi: rec.hi(),
                got_lo: key.lo(),
                got_hi: key.hi(),
            });
        }
        let frozen = inst
            .frozen_lookup(rec)
            .expect("recorded queries are frozen");
        if answer != frozen {
            return Err(ReplayError::AnswerMismatch {
                index,
                recorded: frozen,
                replayed: answer,
            });
        }
    }
    if trace.output != inst.output() {
        return Err(ReplayError::OutputMismatch {
            recorded: inst.output(),
            replayed: trace.output,
        });
    }
    Ok(())
}

/// One experiment cell's flat measurements.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub delta: String,
    pub algorithm: String,
    pub q_total: Option<u64>,
    pub redundant_queries: Option<u64>,
    pub b_size: Option<u64>,
    pub alpha_phat: Option<u32>,
    pub cost_p: Option<u64>,
    pub cost_phat: Option<u64>,
    pub cost_opt: Option<u64>,
    pub measured_ratio: Option<Ratio>,
    pub ratio_floor: Option<Ratio>,
    pub wall_time_ms: u64,
    pub status: String,
}

/// CSV column list; rows match it field for field.
pub const CSV_HEADER: &str = "n,delta,algorithm,q_total,redundant_queries,b_size,alpha_phat,\
cost_p,cost_phat,cost_opt,measured_ratio,ratio_floor,wall_time_ms,status";

impl RunRecord {
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|v| v.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.delta,
            self.algorithm,
            opt(&self.q_total),
            opt(&self.redundant_queries),
            opt(&self.b_size),
            opt(&self.alpha_phat),
            opt(&self.cost_p),
            opt(&self.cost_phat),
            opt(&self.cost_opt),
            opt(&self.measured_ratio),
            opt(&self.ratio_floor),
            self.wall_time_ms,
            self.status
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub n: usize,
    pub delta: DeltaParam,
    pub alg: AlgorithmId,
    pub budget: Option<u64>,
    /// Force the O(n^3) validator even above the size gate.
    pub full_validate: bool,
    /// Compute `cost_opt` by exhaustive minimization when `n` is at most
    /// this cap.
    pub cost_opt_cap: usize,
}

impl RunOptions {
    pub fn new(n: usize, delta: DeltaParam, alg: AlgorithmId) -> Self {
        RunOptions {
            n,
            delta,
            alg,
            budget: None,
            full_validate: false,
            cost_opt_cap: 2000,
        }
    }
}

/// A record plus, when the run finalized, the artifacts behind it.
pub struct RunOutput {
    pub record: RunRecord,
    pub artifacts: Option<Box<RunArtifacts>>,
}

/// Size gate below which the full validator always runs.
pub const FULL_VALIDATE_MAX_N: usize = 300;

/// The complete single-run pipeline: execute, validate (structured always,
/// full when small or forced), replay, and flatten into a record.
pub fn perform_run(opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    let start = Instant::now();
    let outcome = execute(opts.n, opts.delta, &opts.alg, opts.budget)?;
    match outcome {
        CellOutcome::EmptySafeSet {
            b_size,
            q_total,
            distinct_queries: _,
            degree_sum: _,
            redundant_queries,
        } => Ok(RunOutput {
            record: RunRecord {
                n: opts.n,
                delta: opts.delta.to_string(),
                algorithm: opts.alg.label(),
                q_total: Some(q_total as u64),
                redundant_queries: Some(redundant_queries),
                b_size: Some(b_size as u64),
                alpha_phat: None,
                cost_p: None,
                cost_phat: None,
                cost_opt: None,
                measured_ratio: None,
                ratio_floor: None,
                wall_time_ms: start.elapsed().as_millis() as u64,
                status: "empty_safe_set".into(),
            },
            artifacts: None,
        }),
        CellOutcome::Finalized(artifacts) => {
            let inst = &artifacts.instance;
            let structured = validate_metric(inst, ValidateMode::Structured)?;
            if !structured.all_ok() {
                return Err(HarnessError::Validation {
                    mode: ValidateMode::Structured,
                    report: Box::new(structured),
                });
            }
            if opts.n <= FULL_VALIDATE_MAX_N || opts.full_validate {
                let full = validate_metric(inst, ValidateMode::Full)?;
                if !full.all_ok() {
                    return Err(HarnessError::Validation {
                        mode: ValidateMode::Full,
                        report: Box::new(full),
                    });
                }
            }
            replay_consistency(inst, &opts.alg)?;
            let cost_opt = (opts.n <= opts.cost_opt_cap).then(|| exact_median(inst).1);
            let report = &artifacts.report;
            let record = RunRecord {
                n: opts.n,
                delta: opts.delta.to_string(),
                algorithm: opts.alg.label(),
                q_total: Some(report.q_total as u64),
                redundant_queries: Some(artifacts.trace.redundant_queries),
                b_size: Some(report.b_size as u64),
                alpha_phat: Some(report.alpha_phat),
                cost_p: Some(report.cost_p),
                cost_phat: Some(report.cost_phat),
                cost_opt,
                measured_ratio: Some(report.measured_ratio),
                ratio_floor: Some(report.ratio_floor),
                wall_time_ms: start.elapsed().as_millis() as u64,
                status: "ok".into(),
            };
            Ok(RunOutput {
                record,
                artifacts: Some(artifacts),
            })
        }
    }
}

/// Grid of cells, executed in parallel, reported in deterministic
/// `(n, delta, algorithm)` order.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub ns: Vec<usize>,
    pub deltas: Vec<DeltaParam>,
    pub algs: Vec<AlgorithmId>,
    pub budget: Option<u64>,
    pub full_validate: bool,
}

/// Runs every grid cell; per-cell failures become in-row statuses and the
/// sweep continues. `workers` bounds the worker threads (`None`: default).
pub fn run_sweep(plan: &SweepPlan, workers: Option<usize>) -> Vec<RunRecord> {
    let mut cells = Vec::new();
    for &n in &plan.ns {
        for &delta in &plan.deltas {
            for alg in &plan.algs {
                let mut opts = RunOptions::new(n, delta, alg.clone());
                opts.budget = plan.budget;
                opts.full_validate = plan.full_validate;
                cells.push(opts);
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .expect("thread pool");
    pool.install(|| {
        cells
            .par_iter()
            .map(|opts| {
                let start = Instant::now();
                match perform_run(opts) {
                    Ok(output) => output.record,
                    Err(err) => failure_record(opts, &err, start),
                }
            })
            .collect()
    })
}

fn failure_record(opts: &RunOptions, err: &HarnessError, start: Instant) -> RunRecord {
    let status = match err {
        HarnessError::Oracle(OracleError::BudgetExceeded { .. }) => "budget_exceeded".to_string(),
        HarnessError::Validation { mode, .. } => format!("validation_failed:{mode:?}"),
        HarnessError::Replay(_) => "replay_mismatch".to_string(),
        HarnessError::Adversary(AdversaryError::BoundViolation { .. }) => {
            "bound_violation".to_string()
        }
        other => format!("error:{other}"),
    };
    RunRecord {
        n: opts.n,
        delta: opts.delta.to_string(),
        algorithm: opts.alg.label(),
        q_total: None,
        redundant_queries: None,
        b_size: None,
        alpha_phat: None,
        cost_p: None,
        cost_phat: None,
        cost_opt: None,
        measured_ratio: None,
        ratio_floor: None,
        wall_time_ms: start.elapsed().as_millis() as u64,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(num: u64, den: u64) -> DeltaParam {
        DeltaParam::new(num, den).unwrap()
    }

    #[test]
    fn exhaustive_always_hits_empty_safe_set() {
        let outcome = execute(50, delta(1, 20), &AlgorithmId::Exhaustive, None).unwrap();
        match outcome {
            CellOutcome::EmptySafeSet {
                b_size,
                q_total,
                degree_sum,
                ..
            } => {
                assert_eq!(b_size, 50);
                assert_eq!(q_total, 50 * 49 / 2);
                assert_eq!(degree_sum, 2 * q_total as u64);
            }
            CellOutcome::Finalized(_) => panic!("expected premise failure"),
        }
    }

    #[test]
    fn pivot_h_finalizes_at_n_100() {
        // pivot_h:3 uses 5 pivots at n = 100, so planted non-pivots keep
        // degree 5, exactly the threshold floor(n/20).
        let outcome = execute(100, delta(1, 20), &AlgorithmId::PivotH { h: 3 }, None).unwrap();
        let arts = match outcome {
            CellOutcome::Finalized(a) => a,
            CellOutcome::EmptySafeSet { .. } => panic!("expected a finalized instance"),
        };
        assert_eq!(arts.instance.alpha_phat(), 5);
        assert!(arts.report.measured_ratio >= arts.report.ratio_floor);
        replay_consistency(&arts.instance, &AlgorithmId::PivotH { h: 3 }).unwrap();
    }

    #[test]
    fn perform_run_produces_ok_record() {
        let opts = RunOptions::new(100, delta(1, 20), AlgorithmId::PivotH { h: 3 });
        let output = perform_run(&opts).unwrap();
        let rec = &output.record;
        assert_eq!(rec.status, "ok");
        assert_eq!(rec.alpha_phat, Some(5));
        assert!(rec.cost_opt.is_some());
        assert!(rec.cost_opt.unwrap() <= rec.cost_phat.unwrap());
        let row = rec.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn perform_run_reports_empty_safe_set_in_row() {
        let opts = RunOptions::new(50, delta(1, 20), AlgorithmId::Exhaustive);
        let output = perform_run(&opts).unwrap();
        assert_eq!(output.record.status, "empty_safe_set");
        assert_eq!(output.record.q_total, Some(1225));
        assert!(output.record.cost_p.is_none());
        assert!(output.artifacts.is_none());
    }

    #[test]
    fn sweep_order_is_deterministic() {
        let plan = SweepPlan {
            ns: vec![50, 100],
            deltas: vec![delta(1, 20), delta(1, 15)],
            algs: vec![AlgorithmId::PivotH { h: 3 }, AlgorithmId::Exhaustive],
            budget: None,
            full_validate: false,
        };
        let records = run_sweep(&plan, Some(2));
        assert_eq!(records.len(), 8);
        let keys: Vec<(usize, String, String)> = records
            .iter()
            .map(|r| (r.n, r.delta.clone(), r.algorithm.clone()))
            .collect();
        let expect: Vec<(usize, String, String)> = vec![
            (50, "1/20", "pivot_h:3"),
            (50, "1/20", "exhaustive"),
            (50, "1/15", "pivot_h:3"),
            (50, "1/15", "exhaustive"),
            (100, "1/20", "pivot_h:3"),
            (100, "1/20", "exhaustive"),
            (100, "1/15", "pivot_h:3"),
            (100, "1/15", "exhaustive"),
        ]
        .into_iter()
        .map(|(n, d, a)| (n, d.to_string(), a.to_string()))
        .collect();
        assert_eq!(keys, expect);
        // Semantic fields are reproducible run to run.
        let again = run_sweep(&plan, Some(4));
        for (a, b) in records.iter().zip(&again) {
            assert_eq!(a.status, b.status);
            assert_eq!(a.cost_p, b.cost_p);
            assert_eq!(a.ratio_floor, b.ratio_floor);
        }
    }

    #[test]
    fn budget_exceeded_lands_in_row() {
        let plan = SweepPlan {
            ns: vec![60],
            deltas: vec![delta(1, 20)],
            algs: vec![AlgorithmId::Exhaustive],
            budget: Some(10),
            full_validate: false,
        };
        let records = run_sweep(&plan, Some(1));
        assert_eq!(records[0].status, "budget_exceeded");
    }
}
