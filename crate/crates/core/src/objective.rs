//! Latency-plus-drops objective and the feasibility constraints.
//!
//! For task `i` with local fraction `p`, the objective charges
//!
//! ```text
//! p * T_lp + (1 - p) * ((T_c + T_t) * x + D)
//! ```
//!
//! where `T_lp` is the full-task local time plus UE queueing, `T_c` the
//! full-task MEC processing time plus server queueing, `T_t` the full-task
//! roundtrip and `x` is 1 when the offloaded portion was served. Multiplying
//! the full-task times by the fractions yields the portion times, so the
//! latency part is the time each portion spends in the system. `D` is the
//! schedule's drop count; see [`DropAccounting`] for where it enters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{comm_latency, data_rate, RadioAllocation, Task};
use crate::sim::{
    drop_count, simulate, Decision, DropAccounting, ScheduleOutcome, SystemModel, TaskDecision,
    TaskOutcome,
};
use crate::workload::{processing_time, Site};

/// Processing regime, i.e. which local fractions are admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// `p = 1` for every task.
    LocalOnly,
    /// `p = 0` for every task.
    OffloadOnly,
    /// `p` anywhere in `[0, 1]`, with no task allowed to drop.
    Partition,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::LocalOnly, Mode::OffloadOnly, Mode::Partition];

    pub fn admits(self, local_fraction: f64) -> bool {
        match self {
            Mode::LocalOnly => local_fraction == 1.0,
            Mode::OffloadOnly => local_fraction == 0.0,
            Mode::Partition => (0.0..=1.0).contains(&local_fraction),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LocalOnly => "local",
            Mode::OffloadOnly => "offload",
            Mode::Partition => "partition",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "local" | "local_only" | "localonly" => Ok(Mode::LocalOnly),
            "offload" | "offload_only" | "offloadonly" => Ok(Mode::OffloadOnly),
            "partition" => Ok(Mode::Partition),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode `{other}` (expected local, offload or partition)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    /// Seconds.
    pub latency_component: f64,
    /// Dimensionless drop penalty.
    pub drop_component: f64,
    pub feasible: bool,
    pub drops: usize,
    /// Tasks whose every portion was processed.
    pub served_tasks: usize,
}

impl ObjectiveValue {
    /// Mean latency contribution of the tasks that were served.
    pub fn mean_served_latency(&self) -> f64 {
        if self.served_tasks == 0 {
            0.0
        } else {
            self.latency_component / self.served_tasks as f64
        }
    }
}

/// Penalty for `drops` dropped tasks under `accounting`.
pub fn drop_penalty(drops: usize, decision: &Decision, accounting: DropAccounting) -> f64 {
    let d = drops as f64;
    match accounting {
        DropAccounting::Global => d,
        DropAccounting::PerTask => d * decision.iter().map(|c| 1.0 - c.local_fraction).sum::<f64>(),
    }
}

/// Latency charged for one task given its simulated outcome.
pub fn task_latency_term(
    task: &Task,
    choice: &TaskDecision,
    out: &TaskOutcome,
    system: &SystemModel,
) -> Result<f64> {
    let p = choice.local_fraction;
    let mut term = 0.0;
    if p > 0.0 {
        let full_local = processing_time(task.size_bits, &system.processing, Site::Local);
        term += p * (full_local + out.local_waiting_s);
    }
    if let Some(j) = out.server {
        let speed = system.servers[j].speed_factor;
        let full_proc = processing_time(task.size_bits, &system.processing, Site::Mec) / speed;
        let alloc = RadioAllocation::new(out.rb_granted, &system.radio)?;
        let full_roundtrip = comm_latency(task.size_bits, data_rate(&alloc, &system.radio)?)?;
        term += (1.0 - p) * (full_proc + out.breakdown.waiting_s + full_roundtrip);
    }
    Ok(term)
}

fn check_regime(decision: &Decision, mode: Mode) -> Result<()> {
    match decision.iter().position(|c| !mode.admits(c.local_fraction)) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "task index {i}: local fraction {} is not admissible in {mode} mode",
            decision[i].local_fraction
        ))),
        None => Ok(()),
    }
}

/// Objective value of an already simulated decision.
pub fn evaluate_outcome(
    tasks: &[Task],
    decision: &Decision,
    outcome: &ScheduleOutcome,
    mode: Mode,
    system: &SystemModel,
) -> Result<ObjectiveValue> {
    check_regime(decision, mode)?;
    let mut latency = 0.0;
    for ((task, choice), out) in tasks.iter().zip(decision.iter()).zip(&outcome.tasks) {
        latency += task_latency_term(task, choice, out, system)?;
    }
    let drops = drop_count(outcome);
    let drop_component = match mode {
        Mode::LocalOnly => 0.0,
        _ => drop_penalty(drops, decision, system.drop_accounting),
    };
    let feasible = check_constraints(tasks, decision, outcome, mode, system).is_empty();
    Ok(ObjectiveValue {
        total: latency + drop_component,
        latency_component: latency,
        drop_component,
        feasible,
        drops,
        served_tasks: outcome.tasks.iter().filter(|o| !o.dropped).count(),
    })
}

/// Simulates `decision` and evaluates the objective for `mode`.
pub fn evaluate(
    tasks: &[Task],
    decision: &Decision,
    mode: Mode,
    system: &SystemModel,
) -> Result<ObjectiveValue> {
    check_regime(decision, mode)?;
    let outcome = simulate(tasks, decision, system)?;
    evaluate_outcome(tasks, decision, &outcome, mode, system)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Processing starts no earlier than arrival at the processor, and the
    /// first portion on an idle CPU starts right away.
    StartOnArrival,
    /// Processing starts early enough to finish, results included, by the deadline.
    Deadline,
    /// The task names a server that exists.
    SingleServer,
    /// The grant stays within the available resource blocks.
    ResourceBlockCap,
    /// No task is dropped (partition mode only).
    ZeroDrop,
    /// The local fraction is admissible for the mode.
    ModeRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub task_id: u64,
    pub constraint: Constraint,
}

const TIME_TOL: f64 = 1e-9;

/// Lists every violated constraint; empty means feasible.
pub fn check_constraints(
    tasks: &[Task],
    decision: &Decision,
    outcome: &ScheduleOutcome,
    mode: Mode,
    system: &SystemModel,
) -> Vec<Violation> {
    let rb_max = system.rb_max();
    let mut violations = Vec::new();
    let mut first_on_cpu: Vec<Vec<Option<usize>>> = system
        .servers
        .iter()
        .map(|s| vec![None; s.cpu_count])
        .collect();

    for (i, ((task, choice), out)) in tasks
        .iter()
        .zip(decision.iter())
        .zip(&outcome.tasks)
        .enumerate()
    {
        let mut flag = |constraint| {
            violations.push(Violation {
                task_id: task.id,
                constraint,
            })
        };
        if !mode.admits(choice.local_fraction) {
            flag(Constraint::ModeRegime);
        }
        if choice.server.is_some_and(|j| j >= system.servers.len()) {
            flag(Constraint::SingleServer);
        }
        if choice.rb_count == 0 || choice.rb_count > rb_max || out.rb_granted > rb_max {
            flag(Constraint::ResourceBlockCap);
        }
        if mode == Mode::Partition && out.offloaded && out.server.is_none() {
            flag(Constraint::ZeroDrop);
        }
        if let (Some(j), Some(c)) = (out.server, out.cpu) {
            if out.start_s + TIME_TOL < out.ready_s {
                flag(Constraint::StartOnArrival);
            }
            let latest = task.deadline_s - out.breakdown.mec_compute_s - out.breakdown.comm_s;
            if out.start_s > latest + TIME_TOL {
                flag(Constraint::Deadline);
            }
            if let Some(slot) = first_on_cpu.get_mut(j).and_then(|s| s.get_mut(c)) {
                let earlier = slot.is_none_or(|k: usize| {
                    (task.arrival_s, task.id) < (tasks[k].arrival_s, tasks[k].id)
                });
                if earlier {
                    *slot = Some(i);
                }
            }
        }
    }
    for k in first_on_cpu.into_iter().flatten().flatten() {
        let out = &outcome.tasks[k];
        if (out.start_s - out.ready_s).abs() > TIME_TOL {
            violations.push(Violation {
                task_id: tasks[k].id,
                constraint: Constraint::StartOnArrival,
            });
        }
    }
    violations
}
