use std::time::Instant;

use super::{SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::model::Task;
use crate::objective::{evaluate, Mode};
use crate::sim::{arrival_order, ue_slots, Decision, Scheduler, SystemModel, TaskDecision};

/// The two search-free policies: everything local, or greedy full offloading.
///
/// Greedy offloading sends each task, in arrival order, to the server where
/// it can start earliest without missing its deadline, using every RB. A
/// task no server can take stays unassigned.
pub fn solve_baseline(tasks: &[Task], mode: Mode, system: &SystemModel) -> Result<SolveResult> {
    let started = Instant::now();
    let rb = system.rb_max();
    let mut evaluations = 0u64;
    let decision = match mode {
        Mode::LocalOnly => Decision::all_local(tasks.len(), rb),
        Mode::OffloadOnly => {
            let mut scheduler = Scheduler::new(system, ue_slots(tasks))?;
            let mut choices = vec![TaskDecision::partial(0.0, None, rb); tasks.len()];
            for i in arrival_order(tasks) {
                let mut pick = None;
                for server in 0..system.servers.len() {
                    let choice = TaskDecision::offload(server, rb);
                    let out = scheduler.plan(&tasks[i], &choice)?;
                    evaluations += 1;
                    let earlier = pick.as_ref().is_none_or(
                        |(_, best): &(TaskDecision, crate::sim::TaskOutcome)| {
                            out.start_s < best.start_s
                        },
                    );
                    if !out.dropped && earlier {
                        pick = Some((choice, out));
                    }
                }
                if let Some((choice, out)) = pick {
                    scheduler.commit(&out);
                    choices[i] = choice;
                }
            }
            Decision(choices)
        }
        Mode::Partition => {
            return Err(Error::InvalidArgument(
                "baselines cover local and offload modes only".into(),
            ))
        }
    };
    let value = evaluate(tasks, &decision, mode, system)?;
    Ok(SolveResult {
        best_decision: decision,
        trace: vec![TracePoint {
            iteration: 0,
            best_objective: value.total,
        }],
        best_value: value,
        evaluations: evaluations + 1,
        wall_time_s: started.elapsed().as_secs_f64(),
        proven_optimal: false,
    })
}
