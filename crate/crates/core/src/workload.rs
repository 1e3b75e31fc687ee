//! Seeded task generation and the linear processing-time model.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::Task;

/// A discrete payload size and its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeClass {
    pub size_bits: f64,
    pub weight: f64,
}

/// Parameters of a Poisson workload.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub ue_count: u32,
    pub max_tasks: usize,
    pub arrival_rate_per_s: f64,
    /// Arrivals are drawn on `[0, horizon_s)`.
    pub horizon_s: f64,
    pub size_classes: Vec<SizeClass>,
    /// Deadline slack past arrival, drawn uniformly from `[min, max]`.
    pub deadline_slack_s: (f64, f64),
    pub seed: u64,
}

impl WorkloadSpec {
    /// Three image sizes between 0.5 and 8 Mbit.
    pub fn default_size_classes() -> Vec<SizeClass> {
        vec![
            SizeClass {
                size_bits: 0.5e6,
                weight: 0.3,
            },
            SizeClass {
                size_bits: 2.0e6,
                weight: 0.5,
            },
            SizeClass {
                size_bits: 8.0e6,
                weight: 0.2,
            },
        ]
    }

    /// A spec whose arrival rate grows linearly with the number of UEs.
    pub fn for_users(ue_count: u32, rate_per_ue_s: f64, seed: u64) -> Self {
        Self {
            ue_count,
            max_tasks: 400,
            arrival_rate_per_s: rate_per_ue_s * f64::from(ue_count),
            horizon_s: 10.0,
            size_classes: Self::default_size_classes(),
            deadline_slack_s: (0.5, 2.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ue_count == 0 {
            return Err(Error::InvalidSpec("ue_count must be positive".into()));
        }
        if self.max_tasks == 0 {
            return Err(Error::InvalidSpec("max_tasks must be positive".into()));
        }
        if !(self.arrival_rate_per_s.is_finite() && self.arrival_rate_per_s > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "arrival_rate_per_s must be positive, got {}",
                self.arrival_rate_per_s
            )));
        }
        if self.horizon_s.is_nan() || self.horizon_s <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "horizon_s must be positive, got {}",
                self.horizon_s
            )));
        }
        if self.size_classes.is_empty() {
            return Err(Error::InvalidSpec("size_classes is empty".into()));
        }
        let mut total = 0.0;
        for class in &self.size_classes {
            if !(class.size_bits.is_finite() && class.size_bits > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "size class of {} bits",
                    class.size_bits
                )));
            }
            if !(class.weight.is_finite() && class.weight >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "size class weight {}",
                    class.weight
                )));
            }
            total += class.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "size class weights sum to {total}, expected 1"
            )));
        }
        let (lo, hi) = self.deadline_slack_s;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::InvalidSpec(format!(
                "deadline slack ({lo}, {hi}) must satisfy 0 < min <= max"
            )));
        }
        Ok(())
    }
}

/// Generates tasks sorted by arrival. Identical specs give identical lists.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Vec<Task>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gaps = Exp::new(spec.arrival_rate_per_s).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let sizes = WeightedIndex::new(spec.size_classes.iter().map(|c| c.weight))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let (slack_lo, slack_hi) = spec.deadline_slack_s;

    let mut tasks = Vec::new();
    let mut now = 0.0;
    while tasks.len() < spec.max_tasks {
        now += gaps.sample(&mut rng);
        if now >= spec.horizon_s {
            break;
        }
        let ue_id = rng.random_range(0..spec.ue_count);
        let size_bits = spec.size_classes[sizes.sample(&mut rng)].size_bits;
        let slack = rng.random_range(slack_lo..=slack_hi);
        tasks.push(Task {
            id: tasks.len() as u64,
            ue_id,
            size_bits,
            arrival_s: now,
            deadline_s: now + slack,
        });
    }
    Ok(tasks)
}

/// Where a portion of a task is processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Local,
    Mec,
}

/// Processing throughput of a UE and of the reference MEC CPU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessingModel {
    pub local_rate_bits_per_s: f64,
    pub mec_rate_bits_per_s: f64,
}

impl Default for ProcessingModel {
    /// A 2 Mbit task takes 0.08 s on the MEC and 0.32 s locally.
    fn default() -> Self {
        Self {
            local_rate_bits_per_s: 6.25e6,
            mec_rate_bits_per_s: 25e6,
        }
    }
}

impl ProcessingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.local_rate_bits_per_s.is_finite() && self.local_rate_bits_per_s > 0.0) {
            return Err(Error::InvalidConfig(
                "local_rate_bits_per_s must be positive".into(),
            ));
        }
        if !(self.mec_rate_bits_per_s.is_finite()
            && self.mec_rate_bits_per_s > self.local_rate_bits_per_s)
        {
            return Err(Error::InvalidConfig(
                "mec_rate_bits_per_s must be finite and exceed local_rate_bits_per_s".into(),
            ));
        }
        Ok(())
    }

    pub fn rate(&self, site: Site) -> f64 {
        match site {
            Site::Local => self.local_rate_bits_per_s,
            Site::Mec => self.mec_rate_bits_per_s,
        }
    }
}

/// Seconds to process `task_bits` at `site`. Linear in `task_bits`.
pub fn processing_time(task_bits: f64, model: &ProcessingModel, site: Site) -> f64 {
    task_bits / model.rate(site)
}

pub const TASK_FILE_HEADER: &str = "id,ue,size_bits,arrival_s,deadline_s";

/// Serializes tasks one per line. Floats use shortest round-trip formatting,
/// so [`read_tasks`] reproduces them bit-exactly.
pub fn write_tasks(tasks: &[Task]) -> String {
    let mut out = String::with_capacity(32 * (tasks.len() + 1));
    out.push_str(TASK_FILE_HEADER);
    out.push('\n');
    for t in tasks {
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{:?}",
            t.id, t.ue_id, t.size_bits, t.arrival_s, t.deadline_s
        );
    }
    out
}

pub fn read_tasks(text: &str) -> Result<Vec<Task>> {
    let mut tasks = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == TASK_FILE_HEADER => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected header `{TASK_FILE_HEADER}`"),
            })
        }
        None => return Ok(tasks),
    }
    for (i, line) in lines {
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected 5 fields, found {}",
                fields.len()
            )));
        }
        let id = fields[0]
            .parse()
            .map_err(|e| parse_err(format!("id: {e}")))?;
        let ue_id = fields[1]
            .parse()
            .map_err(|e| parse_err(format!("ue: {e}")))?;
        let size_bits = fields[2]
            .parse()
            .map_err(|e| parse_err(format!("size_bits: {e}")))?;
        let arrival_s = fields[3]
            .parse()
            .map_err(|e| parse_err(format!("arrival_s: {e}")))?;
        let deadline_s = fields[4]
            .parse()
            .map_err(|e| parse_err(format!("deadline_s: {e}")))?;
        let task = Task::new(id, ue_id, size_bits, arrival_s, deadline_s)
            .map_err(|e| parse_err(e.to_string()))?;
        tasks.push(task);
    }
    Ok(tasks)
}
