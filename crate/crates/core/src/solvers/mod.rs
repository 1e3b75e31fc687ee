//! Solvers that pick a [`Decision`] minimizing the objective.

mod baseline;
mod cuckoo;
mod exact;
pub mod oracle;

use std::fmt::Write as _;

pub use baseline::solve_baseline;
pub use cuckoo::{mantegna_sigma, solve_cuckoo, CuckooConfig, CuckooSearch};
pub use exact::{solve_exact, ExactConfig};

use crate::error::{Error, Result};
use crate::objective::ObjectiveValue;
use crate::sim::Decision;

/// Best objective known after `iteration` steps of a solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: u64,
    pub best_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_decision: Decision,
    pub best_value: ObjectiveValue,
    /// Non-increasing in `best_objective`.
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub wall_time_s: f64,
    /// Whether the search space was exhausted. Only the exact solver can
    /// prove optimality; it fails to when its node limit is reached.
    pub proven_optimal: bool,
}

/// Convergence trace as CSV: `iteration,best_objective`.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("iteration,best_objective\n");
    for point in trace {
        let _ = writeln!(out, "{},{:?}", point.iteration, point.best_objective);
    }
    out
}

/// The local fractions `0, step, 2 step, ..., 1`.
pub(crate) fn p_grid(step: f64) -> Result<Vec<f64>> {
    let k = grid_divisions(step)?;
    Ok((0..=k).map(|i| i as f64 / k as f64).collect())
}

pub(crate) fn grid_divisions(step: f64) -> Result<u32> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "p_grid_step must be in (0, 1], got {step}"
        )));
    }
    let k = (1.0 / step).round();
    if (k * step - 1.0).abs() > 1e-9 || k > 1e6 {
        return Err(Error::InvalidConfig(format!(
            "1 / p_grid_step must be an integer, got step {step}"
        )));
    }
    Ok(k as u32)
}

pub(crate) fn validate_rb_choices(choices: &[u32], rb_max: u32) -> Result<()> {
    if let Some(bad) = choices.iter().find(|&&rb| rb == 0 || rb > rb_max) {
        return Err(Error::InvalidConfig(format!(
            "rb choice {bad} outside 1..={rb_max}"
        )));
    }
    Ok(())
}
