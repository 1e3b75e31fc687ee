#![allow(dead_code)]

use mecpart::{generate_workload, Task, WorkloadSpec};

/// A contended instance of 1 to 4 tasks on two UEs with tight deadlines.
pub fn small_instance(seed: u64) -> Vec<Task> {
    let spec = WorkloadSpec {
        ue_count: 2,
        max_tasks: 1 + (seed % 4) as usize,
        arrival_rate_per_s: 20.0,
        horizon_s: 100.0,
        size_classes: WorkloadSpec::default_size_classes(),
        deadline_slack_s: (0.25, 1.0),
        seed,
    };
    generate_workload(&spec).unwrap()
}

/// RB grants offered on a small instance: one or two choices.
pub fn small_rb_choices(seed: u64) -> Vec<u32> {
    match seed % 3 {
        0 => vec![100],
        1 => vec![25, 100],
        _ => vec![10, 60],
    }
}
