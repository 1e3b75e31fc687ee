//! Depth-first branch-and-bound over the discretized decision space.
//!
//! Tasks are decided in service order, so the FCFS state after the first
//! `k` decisions is final and each decision's objective contribution is
//! known as soon as it is made. A partial assignment is pruned when its cost
//! plus the sum of the remaining tasks' idle-system contributions cannot beat
//! the incumbent. Children are tried cheapest first, which makes the first
//! dive a greedy solution.

use std::time::Instant;

use super::{grid_divisions, p_grid, validate_rb_choices, SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::model::Task;
use crate::objective::{evaluate, task_latency_term, Mode};
use crate::sim::{
    arrival_order, ue_slots, Decision, DropAccounting, Scheduler, SystemModel, TaskDecision,
    TaskOutcome,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConfig {
    pub p_grid_step: f64,
    /// Allowed RB grants; empty means the full grant `rb_max` only.
    pub rb_choices: Vec<u32>,
    /// Search nodes before the incumbent is returned without proof.
    pub node_limit: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            p_grid_step: 0.05,
            rb_choices: Vec::new(),
            node_limit: 200_000,
        }
    }
}

impl ExactConfig {
    pub fn validate(&self) -> Result<()> {
        grid_divisions(self.p_grid_step)?;
        if self.node_limit == 0 {
            return Err(Error::InvalidConfig("node_limit must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn resolved_rb_choices(&self, rb_max: u32) -> Vec<u32> {
        if self.rb_choices.is_empty() {
            vec![rb_max]
        } else {
            self.rb_choices.clone()
        }
    }
}

/// Options a task may take under `mode`. Choices that cannot differ in
/// objective (server or RBs of a fully local task) appear once.
pub(crate) fn candidates(
    mode: Mode,
    grid: &[f64],
    servers: usize,
    rb_choices: &[u32],
) -> Vec<TaskDecision> {
    let top = rb_choices.iter().copied().max().unwrap_or(1);
    let mut out = Vec::new();
    match mode {
        Mode::LocalOnly => out.push(TaskDecision::local(top)),
        Mode::OffloadOnly => {
            for server in 0..servers {
                for &rb in rb_choices {
                    out.push(TaskDecision::offload(server, rb));
                }
            }
            out.push(TaskDecision::partial(0.0, None, top));
        }
        Mode::Partition => {
            out.push(TaskDecision::local(top));
            // Unassigned offloads always drop, which partition mode forbids.
            for &p in grid.iter().filter(|&&p| p < 1.0) {
                for server in 0..servers {
                    for &rb in rb_choices {
                        out.push(TaskDecision::partial(p, Some(server), rb));
                    }
                }
            }
        }
    }
    out
}

struct Search<'a> {
    tasks: &'a [Task],
    order: Vec<usize>,
    options: Vec<TaskDecision>,
    system: &'a SystemModel,
    mode: Mode,
    drop_cost: f64,
    suffix_bound: Vec<f64>,
    scheduler: Scheduler<'a>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_cost: f64,
    nodes: u64,
    node_limit: u64,
    limit_hit: bool,
    evaluations: u64,
    trace: Vec<TracePoint>,
}

const PRUNE_TOL: f64 = 1e-12;

impl Search<'_> {
    /// Objective contribution of `out`, or `None` when it is infeasible.
    fn contribution(
        &self,
        task: &Task,
        choice: &TaskDecision,
        out: &TaskOutcome,
    ) -> Result<Option<f64>> {
        if out.offloaded && out.dropped {
            return Ok(match self.mode {
                Mode::Partition => None,
                _ => Some(self.drop_cost),
            });
        }
        task_latency_term(task, choice, out, self.system).map(Some)
    }

    fn children(&mut self, task: &Task) -> Result<Vec<(f64, usize, TaskOutcome)>> {
        let mut kids = Vec::with_capacity(self.options.len());
        for (k, choice) in self.options.iter().enumerate() {
            let out = self.scheduler.plan(task, choice)?;
            self.evaluations += 1;
            if let Some(cost) = self.contribution(task, choice, &out)? {
                kids.push((cost, k, out));
            }
        }
        // Stable: equal costs keep candidate order (lower server first).
        kids.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(kids)
    }

    fn dfs(&mut self, depth: usize, cost: f64) -> Result<()> {
        if depth == self.order.len() {
            if cost < self.best_cost - PRUNE_TOL || !self.best_cost.is_finite() {
                self.best_cost = cost;
                self.best.clone_from(&self.current);
                self.trace.push(TracePoint {
                    iteration: self.nodes,
                    best_objective: cost,
                });
            }
            return Ok(());
        }
        let i = self.order[depth];
        let task = &self.tasks[i];
        for (child_cost, k, out) in self.children(task)? {
            if cost + child_cost + self.suffix_bound[depth + 1] >= self.best_cost - PRUNE_TOL {
                break;
            }
            // The first dive always completes so that an incumbent exists.
            if self.best_cost.is_finite() && self.nodes >= self.node_limit {
                self.limit_hit = true;
                return Ok(());
            }
            self.nodes += 1;
            let undo = self.scheduler.commit(&out);
            self.current[i] = k;
            self.dfs(depth + 1, cost + child_cost)?;
            self.scheduler.revert(undo);
            if self.limit_hit {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Grid-optimal decision by branch-and-bound. Unless the node limit is hit
/// (see [`SolveResult::proven_optimal`]) the result matches exhaustive
/// enumeration of the same grid.
pub fn solve_exact(
    tasks: &[Task],
    mode: Mode,
    cfg: &ExactConfig,
    system: &SystemModel,
) -> Result<SolveResult> {
    let started = Instant::now();
    cfg.validate()?;
    system.validate()?;
    for t in tasks {
        t.validate()?;
    }
    let rb_max = system.rb_max();
    let rb_choices = cfg.resolved_rb_choices(rb_max);
    validate_rb_choices(&rb_choices, rb_max)?;
    let grid = p_grid(cfg.p_grid_step)?;
    let options = candidates(mode, &grid, system.servers.len(), &rb_choices);
    let order = arrival_order(tasks);
    let drop_cost = match system.drop_accounting {
        DropAccounting::Global => 1.0,
        // Only offload mode can pay for drops, and there every p is 0.
        DropAccounting::PerTask => tasks.len() as f64,
    };

    let idle = Scheduler::new(system, ue_slots(tasks))?;
    let mut search = Search {
        tasks,
        order,
        options,
        system,
        mode,
        drop_cost,
        suffix_bound: Vec::new(),
        scheduler: idle.clone(),
        current: vec![0; tasks.len()],
        best: vec![0; tasks.len()],
        best_cost: f64::INFINITY,
        nodes: 0,
        node_limit: cfg.node_limit,
        limit_hit: false,
        evaluations: 0,
        trace: Vec::new(),
    };

    // Waiting can only add cost, so each task's best choice on an idle
    // system bounds its contribution from below.
    let mut bounds = Vec::with_capacity(tasks.len());
    for &i in &search.order {
        let mut best = f64::INFINITY;
        for choice in &search.options {
            let out = idle.plan(&tasks[i], choice)?;
            if let Some(cost) = search.contribution(&tasks[i], choice, &out)? {
                best = best.min(cost);
            }
        }
        bounds.push(best);
    }
    let mut suffix = vec![0.0; tasks.len() + 1];
    for d in (0..tasks.len()).rev() {
        suffix[d] = suffix[d + 1] + bounds[d];
    }
    search.suffix_bound = suffix;
    search.evaluations += (tasks.len() * search.options.len()) as u64;

    search.dfs(0, 0.0)?;

    let decision = Decision(search.best.iter().map(|&k| search.options[k]).collect());
    let value = evaluate(tasks, &decision, mode, system)?;
    let mut trace = search.trace;
    if trace.is_empty() {
        trace.push(TracePoint {
            iteration: 0,
            best_objective: value.total,
        });
    }
    Ok(SolveResult {
        best_decision: decision,
        best_value: value,
        trace,
        evaluations: search.evaluations,
        wall_time_s: started.elapsed().as_secs_f64(),
        proven_optimal: !search.limit_hit,
    })
}
