//! Partitioned task offloading for 5G multi-access edge computing.
//!
//! A workload of tasks arrives at UEs; each task can run on its UE, on one
//! of the MEC servers behind the gNB, or be split between the two. The crate
//! provides:
//!
//! - [`model`]: radio and latency formulas (Shannon rate, roundtrip time, RB cap),
//! - [`workload`]: seeded Poisson workloads and the processing-time model,
//! - [`sim`]: FCFS execution of a [`Decision`] with deadline drops,
//! - [`objective`]: the latency-plus-drops objective and its constraints,
//! - [`solvers`]: exact branch-and-bound, Cuckoo Search and two baselines.

pub mod error;
pub mod model;
pub mod objective;
pub mod sim;
pub mod solvers;
pub mod workload;

pub use error::{Error, Result};
pub use model::{
    comm_latency, data_rate, rb_max, LatencyBreakdown, RadioAllocation, RadioConfig, ServerSpec,
    Task,
};
pub use objective::{check_constraints, evaluate, Constraint, Mode, ObjectiveValue, Violation};
pub use sim::{
    drop_count, simulate, utilization, Decision, DropAccounting, ScheduleOutcome, SystemModel,
    TaskDecision, TaskOutcome,
};
pub use solvers::{
    solve_baseline, solve_cuckoo, solve_exact, CuckooConfig, CuckooSearch, ExactConfig,
    SolveResult, TracePoint,
};
pub use workload::{
    generate_workload, processing_time, ProcessingModel, Site, SizeClass, WorkloadSpec,
};
