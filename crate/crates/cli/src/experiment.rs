//! Seeded sweeps over user counts, modes and solvers.

use std::collections::BTreeMap;

use mecpart::{
    evaluate, generate_workload, simulate, solve_baseline, solve_cuckoo, solve_exact, utilization,
    Mode, SolveResult, TracePoint,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, SolverKind};
use crate::error::Result;

/// One solver run on one workload.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub ue_count: u32,
    pub mode: Mode,
    pub solver: SolverKind,
    pub run: u32,
    pub workload_seed: u64,
    /// Only the Cuckoo solver draws random numbers.
    pub solver_seed: Option<u64>,
    pub tasks: usize,
    /// Mean latency of the served tasks.
    pub latency_s: f64,
    pub objective: f64,
    pub drops: usize,
    pub feasible: bool,
    pub mec_util: f64,
    pub local_util: f64,
    pub evaluations: u64,
    pub proven_optimal: bool,
    pub walltime_s: f64,
    pub trace: Vec<TracePoint>,
}

/// Means over the runs of one `(ue_count, mode, solver)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub ue_count: u32,
    pub mode: Mode,
    pub solver: SolverKind,
    pub mean_latency_s: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_latency_s: f64,
    pub mean_drops: f64,
    pub mec_util: f64,
    pub local_util: f64,
    /// 0 unless the config records wall time.
    pub mean_walltime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Grouped by point in config order, then by run index.
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

struct Job {
    ue_count: u32,
    mode: Mode,
    solver: SolverKind,
    run: u32,
}

fn solve(cfg: &ExperimentConfig, job: &Job) -> Result<RunRecord> {
    let system = cfg.system_model();
    let spec = cfg.workload_spec(job.ue_count, job.run);
    let tasks = generate_workload(&spec)?;
    let mut solver_seed = None;
    let result: SolveResult = match job.solver {
        SolverKind::Exact => solve_exact(&tasks, job.mode, &cfg.exact_config(), &system)?,
        SolverKind::Cuckoo => {
            let cuckoo = cfg.cuckoo_config(job.run);
            solver_seed = Some(cuckoo.seed);
            solve_cuckoo(&tasks, job.mode, &cuckoo, &system)?
        }
        SolverKind::Baseline => solve_baseline(&tasks, job.mode, &system)?,
    };
    let value = evaluate(&tasks, &result.best_decision, job.mode, &system)?;
    let outcome = simulate(&tasks, &result.best_decision, &system)?;
    let (mec_util, local_util) = utilization(&outcome, cfg.horizon_s.max(outcome.completion_s))?;
    Ok(RunRecord {
        ue_count: job.ue_count,
        mode: job.mode,
        solver: job.solver,
        run: job.run,
        workload_seed: spec.seed,
        solver_seed,
        tasks: tasks.len(),
        latency_s: value.mean_served_latency(),
        objective: value.total,
        drops: value.drops,
        feasible: value.feasible,
        mec_util,
        local_util,
        evaluations: result.evaluations,
        proven_optimal: result.proven_optimal,
        walltime_s: result.wall_time_s,
        trace: result.trace,
    })
}

/// Runs every grid point. Points run in parallel; the report does not
/// depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let modes = cfg.parsed_modes()?;
    let mut jobs = Vec::new();
    for &ue_count in &cfg.ue_counts {
        for &mode in &modes {
            for &solver in &cfg.solvers {
                for run in 0..cfg.runs_per_point {
                    jobs.push(Job {
                        ue_count,
                        mode,
                        solver,
                        run,
                    });
                }
            }
        }
    }
    let runs = jobs
        .par_iter()
        .map(|job| solve(cfg, job))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs, cfg.record_walltime);
    Ok(ExperimentReport {
        config: cfg.clone(),
        runs,
        summary,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Aggregates runs per point, in order of first appearance.
pub fn summarize(runs: &[RunRecord], record_walltime: bool) -> Vec<SummaryRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(u32, Mode, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        let key = (r.ue_count, r.mode, r.solver.as_str());
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let n = rows.len() as f64;
            let mean_latency_s = mean(rows.iter().map(|r| r.latency_s));
            let std_latency_s = if rows.len() > 1 {
                (rows
                    .iter()
                    .map(|r| (r.latency_s - mean_latency_s).powi(2))
                    .sum::<f64>()
                    / (n - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            SummaryRow {
                ue_count: key.0,
                mode: key.1,
                solver: rows[0].solver,
                mean_latency_s,
                std_latency_s,
                mean_drops: mean(rows.iter().map(|r| r.drops as f64)),
                mec_util: mean(rows.iter().map(|r| r.mec_util)),
                local_util: mean(rows.iter().map(|r| r.local_util)),
                mean_walltime_s: if record_walltime {
                    mean(rows.iter().map(|r| r.walltime_s))
                } else {
                    0.0
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            ue_counts: vec![20],
            runs_per_point: 2,
            modes: vec!["partition".into()],
            solvers: vec![SolverKind::Cuckoo],
            cuckoo_iterations: 5,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn counts_raw_and_aggregate_rows() {
        let report = run_experiment(&tiny()).unwrap();
        assert_eq!(report.runs.len(), 2);
        assert_eq!(report.summary.len(), 1);
        assert_eq!(report.runs[1].run, 1);
        assert_eq!(report.runs[1].workload_seed, 1);
        assert_eq!(report.runs[1].solver_seed, Some(1));
        assert_eq!(report.summary[0].mean_walltime_s, 0.0);
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let cfg = ExperimentConfig {
            runs_per_point: 3,
            modes: vec!["local".into(), "offload".into()],
            solvers: vec![SolverKind::Baseline, SolverKind::Exact],
            record_walltime: true,
            ..tiny()
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summary.len(), 4);
        for row in &report.summary {
            let runs: Vec<&RunRecord> = report
                .runs
                .iter()
                .filter(|r| {
                    r.ue_count == row.ue_count && r.mode == row.mode && r.solver == row.solver
                })
                .collect();
            assert_eq!(runs.len(), 3);
            let m = runs.iter().map(|r| r.latency_s).sum::<f64>() / 3.0;
            assert!((row.mean_latency_s - m).abs() < 1e-9);
            let w = runs.iter().map(|r| r.walltime_s).sum::<f64>() / 3.0;
            assert!((row.mean_walltime_s - w).abs() < 1e-9);
        }
    }

    #[test]
    fn single_run_has_zero_spread() {
        let report = run_experiment(&ExperimentConfig {
            runs_per_point: 1,
            ..tiny()
        })
        .unwrap();
        assert_eq!(report.summary[0].std_latency_s, 0.0);
    }

    #[test]
    fn empty_input_summarizes_to_nothing() {
        assert!(summarize(&[], false).is_empty());
    }
}
