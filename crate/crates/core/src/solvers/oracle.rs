//! Exhaustive enumeration of small instances.
//!
//! Every combination of per-task choices is simulated from scratch and
//! scored with [`evaluate`]; nothing is shared with the branch-and-bound
//! search except the evaluator itself. Choices that cannot change the
//! objective are listed once: the server and RBs of a fully local task, and
//! the RBs of an unassigned one.

use crate::error::{Error, Result};
use crate::model::Task;
use crate::objective::{evaluate, Mode, ObjectiveValue};
use crate::sim::{Decision, SystemModel, TaskDecision};

use super::p_grid;

/// Leaves above this count are refused.
pub const MAX_LEAVES: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub best_decision: Decision,
    pub best_value: ObjectiveValue,
    pub leaves: u64,
    pub feasible_leaves: u64,
}

fn task_options(mode: Mode, grid: &[f64], servers: usize, rb_choices: &[u32]) -> Vec<TaskDecision> {
    let top = rb_choices.iter().copied().max().unwrap_or(1);
    let mut options = Vec::new();
    for &p in grid.iter().filter(|&&p| mode.admits(p)) {
        if p == 1.0 {
            options.push(TaskDecision::local(top));
            continue;
        }
        options.push(TaskDecision::partial(p, None, top));
        for server in 0..servers {
            for &rb in rb_choices {
                options.push(TaskDecision::partial(p, Some(server), rb));
            }
        }
    }
    options
}

/// Minimum feasible objective over the whole grid, first found on ties.
pub fn enumerate_optimum(
    tasks: &[Task],
    mode: Mode,
    p_grid_step: f64,
    rb_choices: &[u32],
    system: &SystemModel,
) -> Result<Enumeration> {
    if rb_choices.is_empty() {
        return Err(Error::InvalidArgument(
            "rb_choices must not be empty".into(),
        ));
    }
    let options = task_options(
        mode,
        &p_grid(p_grid_step)?,
        system.servers.len(),
        rb_choices,
    );
    let leaves = (options.len() as u64)
        .checked_pow(tasks.len() as u32)
        .filter(|&l| l <= MAX_LEAVES)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "instance too large to enumerate ({} tasks)",
                tasks.len()
            ))
        })?;

    let mut digits = vec![0usize; tasks.len()];
    let mut best: Option<(Decision, ObjectiveValue)> = None;
    let mut feasible_leaves = 0;
    for _ in 0..leaves {
        let decision = Decision(digits.iter().map(|&k| options[k]).collect());
        let value = evaluate(tasks, &decision, mode, system)?;
        if value.feasible {
            feasible_leaves += 1;
            if best.as_ref().is_none_or(|(_, b)| value.total < b.total) {
                best = Some((decision, value));
            }
        }
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit < options.len() {
                break;
            }
            *digit = 0;
        }
    }
    let (best_decision, best_value) =
        best.ok_or_else(|| Error::InvalidArgument("no feasible decision on the grid".into()))?;
    Ok(Enumeration {
        best_decision,
        best_value,
        leaves,
        feasible_leaves,
    })
}
