//! Non-preemptive FCFS execution of a [`Decision`] on the UEs and MEC servers.
//!
//! Every CPU serves its queue in task-arrival order (ties by task id). An
//! offloaded portion becomes ready at the server once its uplink half of the
//! roundtrip has elapsed and starts at `max(ready, cpu_free)`. If that start
//! leaves too little time for processing plus the roundtrip before the
//! deadline, the portion is dropped and consumes no server time. Local
//! portions queue on their UE and always run to completion.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    comm_latency, data_rate, rb_max, LatencyBreakdown, RadioAllocation, RadioConfig, ServerSpec,
    Task,
};
use crate::workload::{processing_time, ProcessingModel, Site};

/// How the drop count enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropAccounting {
    /// `(1 - p_i) * D` inside the per-task sum, as the objective is written.
    #[default]
    PerTask,
    /// `D` added once.
    Global,
}

/// Everything about the modeled system except the tasks themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub radio: RadioConfig,
    pub processing: ProcessingModel,
    pub servers: Vec<ServerSpec>,
    pub drop_accounting: DropAccounting,
}

impl Default for SystemModel {
    /// Two single-CPU reference servers.
    fn default() -> Self {
        Self {
            radio: RadioConfig::default(),
            processing: ProcessingModel::default(),
            servers: (0..2)
                .map(|id| ServerSpec {
                    id,
                    cpu_count: 1,
                    speed_factor: 1.0,
                })
                .collect(),
            drop_accounting: DropAccounting::PerTask,
        }
    }
}

impl SystemModel {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.processing.validate()?;
        if self.servers.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one server is required".into(),
            ));
        }
        for s in &self.servers {
            s.validate()?;
        }
        Ok(())
    }

    pub fn rb_max(&self) -> u32 {
        rb_max(&self.radio).unwrap_or(1)
    }
}

/// Per-task choice: local fraction, server and resource blocks.
///
/// A task has a single `server` slot, so it can never be assigned to more
/// than one server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskDecision {
    /// Fraction `p` processed on the UE, in `[0, 1]`.
    pub local_fraction: f64,
    /// Index into [`SystemModel::servers`]; `None` leaves the task unassigned.
    pub server: Option<usize>,
    pub rb_count: u32,
}

impl TaskDecision {
    pub fn local(rb_count: u32) -> Self {
        Self {
            local_fraction: 1.0,
            server: None,
            rb_count,
        }
    }

    pub fn offload(server: usize, rb_count: u32) -> Self {
        Self {
            local_fraction: 0.0,
            server: Some(server),
            rb_count,
        }
    }

    pub fn partial(local_fraction: f64, server: Option<usize>, rb_count: u32) -> Self {
        Self {
            local_fraction,
            server,
            rb_count,
        }
    }

    /// True when some part of the task is meant for a server.
    pub fn offloads(&self) -> bool {
        self.local_fraction < 1.0
    }
}

/// One [`TaskDecision`] per task, aligned with the task slice by position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decision(pub Vec<TaskDecision>);

impl Decision {
    pub fn all_local(n: usize, rb_count: u32) -> Self {
        Self(vec![TaskDecision::local(rb_count); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TaskDecision> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for Decision {
    type Output = TaskDecision;

    fn index(&self, i: usize) -> &TaskDecision {
        &self.0[i]
    }
}

/// Simulated fate of one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskOutcome {
    pub task_id: u64,
    pub ue_id: u32,
    pub local_fraction: f64,
    /// Server that processed the offloaded portion.
    pub server: Option<usize>,
    pub cpu: Option<usize>,
    pub rb_granted: u32,
    /// When the primary portion became available to its processor: server
    /// arrival after uplink for offloaded portions, task arrival otherwise.
    pub ready_s: f64,
    /// Start of the offloaded portion, or of the local portion for fully
    /// local tasks. For a dropped portion this is the start it could get.
    pub start_s: f64,
    /// `start_s - ready_s`.
    pub waiting_s: f64,
    pub local_start_s: f64,
    pub local_end_s: f64,
    pub local_waiting_s: f64,
    /// End of server processing; `None` when nothing ran on a server.
    pub mec_end_s: Option<f64>,
    /// Latest of local completion and result delivery.
    pub completion_s: f64,
    pub breakdown: LatencyBreakdown,
    pub offloaded: bool,
    pub dropped: bool,
}

impl TaskOutcome {
    pub fn makespan_s(&self, arrival_s: f64) -> f64 {
        self.completion_s - arrival_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    /// In the order of the input task slice.
    pub tasks: Vec<TaskOutcome>,
    /// Sum of per-task makespans (completion minus arrival).
    pub total_latency_s: f64,
    pub drop_count: usize,
    pub mec_busy_s: Vec<f64>,
    pub server_cpus: Vec<usize>,
    /// Indexed by UE id.
    pub local_busy_s: Vec<f64>,
    /// Last completion time; 0 for an empty schedule.
    pub completion_s: f64,
}

/// Reverses one [`Scheduler::commit`].
#[derive(Debug, Clone, Copy)]
pub struct Undo {
    ue: usize,
    ue_free: f64,
    local_busy: f64,
    cpu: Option<(usize, usize, f64, f64)>,
}

/// Incremental FCFS state. Tasks must be committed in arrival order.
#[derive(Debug, Clone)]
pub struct Scheduler<'a> {
    system: &'a SystemModel,
    rb_max: u32,
    cpu_free: Vec<Vec<f64>>,
    mec_busy: Vec<f64>,
    ue_free: Vec<f64>,
    local_busy: Vec<f64>,
}

impl<'a> Scheduler<'a> {
    pub fn new(system: &'a SystemModel, ue_slots: usize) -> Result<Self> {
        system.validate()?;
        Ok(Self {
            system,
            rb_max: rb_max(&system.radio)?,
            cpu_free: system
                .servers
                .iter()
                .map(|s| vec![0.0; s.cpu_count])
                .collect(),
            mec_busy: vec![0.0; system.servers.len()],
            ue_free: vec![0.0; ue_slots],
            local_busy: vec![0.0; ue_slots],
        })
    }

    /// Computes what would happen to `task` without changing the state.
    pub fn plan(&self, task: &Task, choice: &TaskDecision) -> Result<TaskOutcome> {
        let p = choice.local_fraction;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "task {}: local fraction {p} outside [0, 1]",
                task.id
            )));
        }
        if choice.rb_count == 0 {
            return Err(Error::InvalidArgument(format!(
                "task {}: rb_count must be positive",
                task.id
            )));
        }
        let ue = task.ue_id as usize;
        if ue >= self.ue_free.len() {
            return Err(Error::InvalidArgument(format!(
                "task {}: UE {ue} has no slot",
                task.id
            )));
        }
        let model = &self.system.processing;
        // The radio never grants more blocks than exist; the cap violation
        // itself is reported by the constraint checker.
        let rb_granted = choice.rb_count.min(self.rb_max);

        let mut out = TaskOutcome {
            task_id: task.id,
            ue_id: task.ue_id,
            local_fraction: p,
            server: None,
            cpu: None,
            rb_granted,
            ready_s: task.arrival_s,
            start_s: task.arrival_s,
            waiting_s: 0.0,
            local_start_s: task.arrival_s,
            local_end_s: task.arrival_s,
            local_waiting_s: 0.0,
            mec_end_s: None,
            completion_s: task.arrival_s,
            breakdown: LatencyBreakdown::default(),
            offloaded: p < 1.0,
            dropped: false,
        };

        if p > 0.0 {
            let local_s = processing_time(p * task.size_bits, model, Site::Local);
            let start = task.arrival_s.max(self.ue_free[ue]);
            out.local_start_s = start;
            out.local_waiting_s = start - task.arrival_s;
            out.local_end_s = start + local_s;
            out.breakdown.local_s = local_s;
            out.completion_s = out.local_end_s;
            if !out.offloaded {
                out.start_s = start;
                out.waiting_s = out.local_waiting_s;
            }
        }

        if out.offloaded {
            let bits = (1.0 - p) * task.size_bits;
            let alloc = RadioAllocation::new(rb_granted, &self.system.radio)?;
            let roundtrip = comm_latency(bits, data_rate(&alloc, &self.system.radio)?)?;
            let uplink = 0.5 * roundtrip;
            out.ready_s = task.arrival_s + uplink;
            out.start_s = out.ready_s;
            match choice.server {
                None => out.dropped = true,
                Some(j) => {
                    let server = self.system.servers.get(j).ok_or_else(|| {
                        Error::InvalidArgument(format!("task {}: unknown server {j}", task.id))
                    })?;
                    let (cpu, free) = earliest_free(&self.cpu_free[j]);
                    let proc_s = processing_time(bits, model, Site::Mec) / server.speed_factor;
                    let start = out.ready_s.max(free);
                    out.start_s = start;
                    out.waiting_s = start - out.ready_s;
                    if start > task.deadline_s - proc_s - roundtrip {
                        out.dropped = true;
                    } else {
                        let end = start + proc_s;
                        out.server = Some(j);
                        out.cpu = Some(cpu);
                        out.mec_end_s = Some(end);
                        out.breakdown.comm_s = roundtrip;
                        out.breakdown.mec_compute_s = proc_s;
                        out.breakdown.waiting_s = out.waiting_s;
                        out.completion_s = out.completion_s.max(end + uplink);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies a planned outcome and returns how to revert it.
    pub fn commit(&mut self, out: &TaskOutcome) -> Undo {
        let ue = out.ue_id as usize;
        let mut undo = Undo {
            ue,
            ue_free: self.ue_free[ue],
            local_busy: self.local_busy[ue],
            cpu: None,
        };
        if out.local_fraction > 0.0 {
            self.ue_free[ue] = out.local_end_s;
            self.local_busy[ue] += out.breakdown.local_s;
        }
        if let (Some(j), Some(c), Some(end)) = (out.server, out.cpu, out.mec_end_s) {
            undo.cpu = Some((j, c, self.cpu_free[j][c], self.mec_busy[j]));
            self.cpu_free[j][c] = end;
            self.mec_busy[j] += out.breakdown.mec_compute_s;
        }
        undo
    }

    pub fn revert(&mut self, undo: Undo) {
        self.ue_free[undo.ue] = undo.ue_free;
        self.local_busy[undo.ue] = undo.local_busy;
        if let Some((j, c, free, busy)) = undo.cpu {
            self.cpu_free[j][c] = free;
            self.mec_busy[j] = busy;
        }
    }
}

fn earliest_free(cpus: &[f64]) -> (usize, f64) {
    let mut best = (0, cpus[0]);
    for (i, &free) in cpus.iter().enumerate().skip(1) {
        if free < best.1 {
            best = (i, free);
        }
    }
    best
}

/// Task indices in service order: arrival time, then task id.
pub fn arrival_order(tasks: &[Task]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| {
        tasks[a]
            .arrival_s
            .total_cmp(&tasks[b].arrival_s)
            .then(tasks[a].id.cmp(&tasks[b].id))
    });
    order
}

pub(crate) fn ue_slots(tasks: &[Task]) -> usize {
    tasks
        .iter()
        .map(|t| t.ue_id as usize + 1)
        .max()
        .unwrap_or(0)
}

pub fn simulate(
    tasks: &[Task],
    decision: &Decision,
    system: &SystemModel,
) -> Result<ScheduleOutcome> {
    if tasks.len() != decision.len() {
        return Err(Error::InvalidArgument(format!(
            "decision covers {} tasks, workload has {}",
            decision.len(),
            tasks.len()
        )));
    }
    for t in tasks {
        t.validate()?;
    }
    let mut scheduler = Scheduler::new(system, ue_slots(tasks))?;
    let mut outcomes: Vec<Option<TaskOutcome>> = vec![None; tasks.len()];
    for i in arrival_order(tasks) {
        let out = scheduler.plan(&tasks[i], &decision[i])?;
        scheduler.commit(&out);
        outcomes[i] = Some(out);
    }
    let outcomes: Vec<TaskOutcome> = outcomes.into_iter().flatten().collect();

    let total_latency_s = outcomes
        .iter()
        .zip(tasks)
        .map(|(o, t)| o.makespan_s(t.arrival_s))
        .sum();
    let completion_s = outcomes.iter().map(|o| o.completion_s).fold(0.0, f64::max);
    let outcome = ScheduleOutcome {
        drop_count: outcomes.iter().filter(|o| o.offloaded && o.dropped).count(),
        tasks: outcomes,
        total_latency_s,
        mec_busy_s: scheduler.mec_busy,
        server_cpus: system.servers.iter().map(|s| s.cpu_count).collect(),
        local_busy_s: scheduler.local_busy,
        completion_s,
    };
    Ok(outcome)
}

/// Number of offload-participating tasks left without a server.
pub fn drop_count(outcome: &ScheduleOutcome) -> usize {
    outcome
        .tasks
        .iter()
        .filter(|o| o.offloaded && o.server.is_none())
        .count()
}

/// Mean busy fraction of the MEC servers and of the UEs over `horizon_s`.
pub fn utilization(outcome: &ScheduleOutcome, horizon_s: f64) -> Result<(f64, f64)> {
    if !(horizon_s.is_finite() && horizon_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon_s}"
        )));
    }
    if horizon_s + 1e-9 < outcome.completion_s {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon_s} s ends before the schedule completes at {} s",
            outcome.completion_s
        )));
    }
    let mec = if outcome.mec_busy_s.is_empty() {
        0.0
    } else {
        outcome
            .mec_busy_s
            .iter()
            .zip(&outcome.server_cpus)
            .map(|(busy, &cpus)| busy / (cpus as f64 * horizon_s))
            .sum::<f64>()
            / outcome.mec_busy_s.len() as f64
    };
    let local = if outcome.local_busy_s.is_empty() {
        0.0
    } else {
        outcome
            .local_busy_s
            .iter()
            .map(|b| b / horizon_s)
            .sum::<f64>()
            / outcome.local_busy_s.len() as f64
    };
    Ok((mec.min(1.0), local.min(1.0)))
}

/// CSV trace with one row per task: `task,server,start,end,dropped`.
///
/// `server` is empty for tasks that never reached a server; `start`/`end`
/// cover the server portion, or the local portion for fully local tasks.
pub fn schedule_trace_csv(outcome: &ScheduleOutcome) -> String {
    let mut out = String::from("task,server,start,end,dropped\n");
    for o in &outcome.tasks {
        let server = o.server.map(|s| s.to_string()).unwrap_or_default();
        let end = o.mec_end_s.unwrap_or(if o.offloaded {
            o.start_s
        } else {
            o.local_end_s
        });
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{}",
            o.task_id,
            server,
            o.start_s,
            end,
            u8::from(o.dropped)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system_one_server() -> SystemModel {
        SystemModel {
            servers: vec![ServerSpec {
                id: 0,
                cpu_count: 1,
                speed_factor: 1.0,
            }],
            ..SystemModel::default()
        }
    }

    fn task(id: u64, size: f64, arrival: f64, deadline: f64) -> Task {
        Task::new(id, id as u32, size, arrival, deadline).unwrap()
    }

    #[test]
    fn single_offload_starts_after_uplink() {
        let system = system_one_server();
        let tasks = [task(0, 2e6, 1.0, 5.0)];
        let out = simulate(
            &tasks,
            &Decision(vec![TaskDecision::offload(0, 100)]),
            &system,
        )
        .unwrap();
        let o = &out.tasks[0];
        let alloc = RadioAllocation::new(100, &system.radio).unwrap();
        let uplink = 2e6 / data_rate(&alloc, &system.radio).unwrap();
        assert_eq!(o.waiting_s, 0.0);
        assert!((o.start_s - (1.0 + uplink)).abs() < 1e-15);
        assert!(!o.dropped);
        assert_eq!(out.drop_count, 0);
    }

    #[test]
    fn second_task_waits_for_first() {
        let system = system_one_server();
        let gap = 0.03;
        let tasks = [task(0, 2e6, 0.0, 5.0), task(1, 2e6, gap, 5.0)];
        let d = Decision(vec![TaskDecision::offload(0, 100); 2]);
        let out = simulate(&tasks, &d, &system).unwrap();
        let proc_s = 2e6 / system.processing.mec_rate_bits_per_s;
        assert!((out.tasks[1].waiting_s - (proc_s - gap)).abs() < 1e-12);

        let late = [task(0, 2e6, 0.0, 5.0), task(1, 2e6, 1.0, 5.0)];
        let out = simulate(&late, &d, &system).unwrap();
        assert_eq!(out.tasks[1].waiting_s, 0.0);
    }

    #[test]
    fn unreachable_deadline_drops_only_that_task() {
        let system = system_one_server();
        // Task 2 arrives while the server is busy and has almost no slack.
        let tasks = [
            task(0, 8e6, 0.0, 3.0),
            task(1, 0.5e6, 0.1, 3.0),
            task(2, 2e6, 0.11, 0.35),
        ];
        let d = Decision(vec![TaskDecision::offload(0, 100); 3]);
        let out = simulate(&tasks, &d, &system).unwrap();
        assert_eq!(
            out.tasks.iter().map(|o| o.dropped).collect::<Vec<_>>(),
            [false, false, true]
        );
        assert_eq!(out.drop_count, 1);
        assert_eq!(drop_count(&out), 1);
        // The dropped task left no trace on the server.
        let busy: f64 = out.tasks.iter().map(|o| o.breakdown.mec_compute_s).sum();
        assert_eq!(out.mec_busy_s[0], busy);
        assert!(out.tasks[2].server.is_none());
    }

    #[test]
    fn unassigned_offload_counts_as_drop() {
        let system = SystemModel::default();
        let tasks: Vec<Task> = (0..5)
            .map(|i| task(i, 1e6, i as f64, i as f64 + 2.0))
            .collect();
        let d = Decision(vec![TaskDecision::partial(0.0, None, 50); 5]);
        let out = simulate(&tasks, &d, &system).unwrap();
        assert_eq!(drop_count(&out), 5);
        let d = Decision::all_local(5, 50);
        assert_eq!(drop_count(&simulate(&tasks, &d, &system).unwrap()), 0);
    }

    #[test]
    fn local_portions_queue_on_their_ue() {
        let system = SystemModel::default();
        let tasks = [
            Task::new(0, 3, 2e6, 0.0, 0.1).unwrap(),
            Task::new(1, 3, 2e6, 0.1, 0.2).unwrap(),
        ];
        let out = simulate(&tasks, &Decision::all_local(2, 1), &system).unwrap();
        let local = 2e6 / system.processing.local_rate_bits_per_s;
        assert!((out.tasks[1].local_waiting_s - (local - 0.1)).abs() < 1e-12);
        assert!(out.tasks.iter().all(|o| !o.dropped));
        assert_eq!(out.local_busy_s.len(), 4);
        assert!((out.local_busy_s[3] - 2.0 * local).abs() < 1e-12);
    }

    #[test]
    fn mismatched_decision_is_rejected() {
        let tasks = [task(0, 1e6, 0.0, 1.0)];
        assert!(simulate(&tasks, &Decision::default(), &SystemModel::default()).is_err());
        let bad = Decision(vec![TaskDecision::offload(7, 10)]);
        assert!(simulate(&tasks, &bad, &SystemModel::default()).is_err());
        let bad = Decision(vec![TaskDecision::partial(1.5, None, 10)]);
        assert!(simulate(&tasks, &bad, &SystemModel::default()).is_err());
    }

    #[test]
    fn rb_grant_is_capped() {
        let tasks = [task(0, 1e6, 0.0, 1.0)];
        let d = Decision(vec![TaskDecision::offload(0, 101)]);
        let out = simulate(&tasks, &d, &SystemModel::default()).unwrap();
        assert_eq!(out.tasks[0].rb_granted, 100);
    }

    #[test]
    fn utilization_examples() {
        let system = system_one_server();
        let empty = simulate(&[], &Decision::default(), &system).unwrap();
        assert_eq!(utilization(&empty, 1.0).unwrap(), (0.0, 0.0));

        let mut busy = empty.clone();
        busy.mec_busy_s = vec![4.0];
        busy.server_cpus = vec![1];
        busy.completion_s = 4.0;
        assert_eq!(utilization(&busy, 4.0).unwrap().0, 1.0);
        busy.mec_busy_s = vec![4.0, 0.0];
        busy.server_cpus = vec![1, 1];
        assert_eq!(utilization(&busy, 4.0).unwrap().0, 0.5);
        assert!(utilization(&busy, 3.0).is_err());
    }

    #[test]
    fn multi_cpu_server_runs_in_parallel() {
        let system = SystemModel {
            servers: vec![ServerSpec {
                id: 0,
                cpu_count: 2,
                speed_factor: 2.0,
            }],
            ..SystemModel::default()
        };
        let tasks = [task(0, 2e6, 0.0, 5.0), task(1, 2e6, 0.0, 5.0)];
        let out = simulate(
            &tasks,
            &Decision(vec![TaskDecision::offload(0, 100); 2]),
            &system,
        )
        .unwrap();
        assert_eq!(out.tasks[0].waiting_s, 0.0);
        assert_eq!(out.tasks[1].waiting_s, 0.0);
        assert_ne!(out.tasks[0].cpu, out.tasks[1].cpu);
        let proc_s = 2e6 / system.processing.mec_rate_bits_per_s / 2.0;
        assert!((out.tasks[0].breakdown.mec_compute_s - proc_s).abs() < 1e-15);
    }

    #[test]
    fn trace_has_one_row_per_task() {
        let system = system_one_server();
        let tasks = [task(0, 1e6, 0.0, 3.0), task(1, 1e6, 0.5, 3.0)];
        let d = Decision(vec![
            TaskDecision::offload(0, 100),
            TaskDecision::local(100),
        ]);
        let csv = schedule_trace_csv(&simulate(&tasks, &d, &system).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "task,server,start,end,dropped");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("1,,"));
    }
}
