//! Brute-force optimum of a small instance file, next to the exact solver's answer.
//!
//! ```toml
//! mode = "partition"
//! p_grid_step = 0.25
//! rb_choices = [50, 100]
//!
//! [[tasks]]
//! id = 0
//! ue = 0
//! size_bits = 2e6
//! arrival_s = 0.0
//! deadline_s = 1.0
//! ```

use mecpart::solvers::oracle::enumerate_optimum;
use mecpart::{solve_exact, ExactConfig, Mode, Task};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{line_of, DropAccountingKey, ExperimentConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceTask {
    id: u64,
    ue: u32,
    size_bits: f64,
    arrival_s: f64,
    deadline_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Instance {
    mode: String,
    #[serde(default = "default_step")]
    p_grid_step: f64,
    #[serde(default)]
    rb_choices: Vec<u32>,
    #[serde(default = "default_servers")]
    server_count: usize,
    #[serde(default = "default_accounting")]
    drop_accounting: DropAccountingKey,
    #[serde(default)]
    tasks: Vec<InstanceTask>,
}

fn default_step() -> f64 {
    0.25
}

fn default_servers() -> usize {
    2
}

fn default_accounting() -> DropAccountingKey {
    DropAccountingKey::PerTask
}

/// Enumerates the instance in `text` and returns the result as JSON.
pub fn run_oracle(text: &str) -> Result<Value> {
    let inst: Instance = toml::from_str(text).map_err(|e| CliError::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        field: None,
        message: e.message().to_string(),
    })?;
    let mode: Mode = inst.mode.parse()?;
    let tasks = inst
        .tasks
        .iter()
        .map(|t| Task::new(t.id, t.ue, t.size_bits, t.arrival_s, t.deadline_s))
        .collect::<mecpart::Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        server_count: inst.server_count,
        drop_accounting: inst.drop_accounting,
        ..ExperimentConfig::default()
    };
    let system = cfg.system_model();
    system.validate()?;
    let rb_choices = if inst.rb_choices.is_empty() {
        vec![system.rb_max()]
    } else {
        inst.rb_choices
    };

    let brute = enumerate_optimum(&tasks, mode, inst.p_grid_step, &rb_choices, &system)?;
    let exact = solve_exact(
        &tasks,
        mode,
        &ExactConfig {
            p_grid_step: inst.p_grid_step,
            rb_choices: rb_choices.clone(),
            node_limit: u64::MAX,
        },
        &system,
    )?;
    let decision: Vec<Value> = brute
        .best_decision
        .iter()
        .map(|c| json!({ "local_fraction": c.local_fraction, "server": c.server, "rb_count": c.rb_count }))
        .collect();
    Ok(json!({
        "mode": mode.as_str(),
        "objective": brute.best_value.total,
        "latency_component": brute.best_value.latency_component,
        "drop_component": brute.best_value.drop_component,
        "drops": brute.best_value.drops,
        "leaves": brute.leaves,
        "feasible_leaves": brute.feasible_leaves,
        "decision": decision,
        "exact_objective": exact.best_value.total,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_task_instance() {
        let text = "mode = \"partition\"\n[[tasks]]\nid = 0\nue = 0\nsize_bits = 2e6\narrival_s = 0.0\ndeadline_s = 1.0\n";
        let v = run_oracle(text).unwrap();
        assert_eq!(v["leaves"], 1 + 4 * 3);
        assert_eq!(v["objective"], v["exact_objective"]);
        assert_eq!(v["decision"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn bad_task_is_reported() {
        let text = "mode = \"offload\"\n[[tasks]]\nid = 0\nue = 0\nsize_bits = -1.0\narrival_s = 0.0\ndeadline_s = 1.0\n";
        assert!(run_oracle(text).is_err());
        let err = run_oracle("mode = \"offload\"\nflavour = 1\n").unwrap_err();
        assert!(
            matches!(err, CliError::Config { line: Some(2), .. }),
            "{err:?}"
        );
    }
}
