//! Cuckoo Search with Lévy flights.
//!
//! Each nest is a point in a box with three coordinates per task:
//!
//! | coordinate | range        | decoded as                                   |
//! |------------|--------------|----------------------------------------------|
//! | `p`        | `[0, 1]`     | local fraction, snapped to the grid if set   |
//! | server     | `[0, M]`     | `[0, 1)` unassigned, else nearest server id  |
//! | rb         | `[1, rb_max]`| rounded, snapped to the nearest RB choice    |
//!
//! In partition mode an unassigned task is processed fully on its UE, and
//! in the single-site modes the `p` coordinate is ignored. Decodes that
//! violate a constraint score `+inf`.
//!
//! Every iteration each nest proposes a Lévy-flight move (Mantegna steps,
//! scaled per dimension by `step_scale` times the coordinate range) and keeps
//! it if the objective improves. Then the worst `ceil(abandonment_prob * n)`
//! nests, never including the best one, are re-seeded uniformly. All random
//! draws for an iteration happen in nest order before the nests are
//! evaluated in parallel, so results do not depend on the thread count.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::{grid_divisions, validate_rb_choices, SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::model::Task;
use crate::objective::{evaluate, Mode};
use crate::sim::{Decision, SystemModel, TaskDecision};

#[derive(Debug, Clone, PartialEq)]
pub struct CuckooConfig {
    pub nest_count: usize,
    pub iterations: usize,
    pub abandonment_prob: f64,
    /// Lévy exponent, in `(1, 2]`.
    pub levy_lambda: f64,
    pub seed: u64,
    /// Step length as a fraction of each coordinate's range.
    pub step_scale: f64,
    /// Snap local fractions to this grid; `None` keeps them continuous.
    pub p_grid_step: Option<f64>,
    /// Allowed RB grants; empty means the full grant `rb_max` only.
    pub rb_choices: Vec<u32>,
}

impl Default for CuckooConfig {
    fn default() -> Self {
        Self {
            nest_count: 25,
            iterations: 100,
            abandonment_prob: 0.25,
            levy_lambda: 1.5,
            seed: 0,
            step_scale: 0.05,
            p_grid_step: Some(0.05),
            rb_choices: Vec::new(),
        }
    }
}

impl CuckooConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nest_count == 0 {
            return Err(Error::InvalidConfig("nest_count must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.abandonment_prob) {
            return Err(Error::InvalidConfig(format!(
                "abandonment_prob must be in [0, 1], got {}",
                self.abandonment_prob
            )));
        }
        if !(self.levy_lambda > 1.0 && self.levy_lambda <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "levy_lambda must be in (1, 2], got {}",
                self.levy_lambda
            )));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step_scale must be positive, got {}",
                self.step_scale
            )));
        }
        if let Some(step) = self.p_grid_step {
            grid_divisions(step)?;
        }
        Ok(())
    }
}

/// Standard deviation of the numerator in Mantegna's Lévy step.
pub fn mantegna_sigma(lambda: f64) -> f64 {
    let num = gamma(1.0 + lambda) * (PI * lambda / 2.0).sin();
    let den = gamma((1.0 + lambda) / 2.0) * lambda * 2f64.powf((lambda - 1.0) / 2.0);
    (num / den).powf(1.0 / lambda)
}

fn levy_step<R: Rng>(rng: &mut R, sigma: f64, lambda: f64) -> f64 {
    let u: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    let v: f64 = rng.sample(StandardNormal);
    let step = u / v.abs().powf(1.0 / lambda);
    if step.is_nan() {
        0.0
    } else {
        step
    }
}

const DIMS_PER_TASK: usize = 3;

/// A configured search over one instance.
pub struct CuckooSearch<'a> {
    tasks: &'a [Task],
    mode: Mode,
    system: &'a SystemModel,
    cfg: CuckooConfig,
    rb_max: u32,
    grid: Option<u32>,
    rb_choices: Vec<u32>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    initial: Vec<Vec<f64>>,
}

impl<'a> CuckooSearch<'a> {
    pub fn new(
        tasks: &'a [Task],
        mode: Mode,
        cfg: &CuckooConfig,
        system: &'a SystemModel,
    ) -> Result<Self> {
        cfg.validate()?;
        system.validate()?;
        for t in tasks {
            t.validate()?;
        }
        let rb_max = system.rb_max();
        validate_rb_choices(&cfg.rb_choices, rb_max)?;
        let rb_choices = if cfg.rb_choices.is_empty() {
            vec![rb_max]
        } else {
            cfg.rb_choices.clone()
        };
        let servers = system.servers.len() as f64;
        let mut lower = Vec::with_capacity(tasks.len() * DIMS_PER_TASK);
        let mut upper = Vec::with_capacity(tasks.len() * DIMS_PER_TASK);
        for _ in tasks {
            lower.extend([0.0, 0.0, 1.0]);
            upper.extend([1.0, servers, f64::from(rb_max)]);
        }
        Ok(Self {
            tasks,
            mode,
            system,
            grid: cfg.p_grid_step.map(grid_divisions).transpose()?,
            cfg: cfg.clone(),
            rb_choices,
            rb_max,
            lower,
            upper,
            initial: Vec::new(),
        })
    }

    /// Starts the first nests at the given points instead of random ones.
    pub fn with_initial_nests(mut self, nests: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = nests.iter().find(|n| n.len() != self.lower.len()) {
            return Err(Error::InvalidArgument(format!(
                "initial nest has {} coordinates, expected {}",
                bad.len(),
                self.lower.len()
            )));
        }
        self.initial = nests;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    /// A point that decodes to `decision`.
    pub fn encode(&self, decision: &Decision) -> Vec<f64> {
        decision
            .iter()
            .flat_map(|c| {
                let server = c.server.map_or(0.5, |j| (j + 1) as f64);
                [c.local_fraction, server, f64::from(c.rb_count)]
            })
            .collect()
    }

    pub fn decode(&self, x: &[f64]) -> Decision {
        let servers = self.system.servers.len();
        Decision(
            x.chunks_exact(DIMS_PER_TASK)
                .map(|v| {
                    let rb = self.decode_rb(v[2]);
                    let coord = v[1].clamp(0.0, servers as f64);
                    let server =
                        (coord >= 1.0).then(|| (coord.round() as usize).clamp(1, servers) - 1);
                    let p = match self.mode {
                        Mode::LocalOnly => 1.0,
                        Mode::OffloadOnly => 0.0,
                        Mode::Partition if server.is_none() => 1.0,
                        Mode::Partition => self.decode_p(v[0]),
                    };
                    if p == 1.0 {
                        TaskDecision::local(rb)
                    } else {
                        TaskDecision::partial(p, server, rb)
                    }
                })
                .collect(),
        )
    }

    fn decode_p(&self, raw: f64) -> f64 {
        let p = raw.clamp(0.0, 1.0);
        match self.grid {
            Some(k) => (p * f64::from(k)).round() / f64::from(k),
            None => p,
        }
    }

    fn decode_rb(&self, raw: f64) -> u32 {
        let rb = raw.clamp(1.0, f64::from(self.rb_max)).round() as u32;
        let mut best = self.rb_choices[0];
        for &choice in &self.rb_choices {
            let closer = choice.abs_diff(rb) < best.abs_diff(rb);
            if closer || (choice.abs_diff(rb) == best.abs_diff(rb) && choice < best) {
                best = choice;
            }
        }
        best
    }

    /// Objective of a point, `+inf` when its decode is infeasible.
    pub fn fitness(&self, x: &[f64]) -> Result<f64> {
        let value = evaluate(self.tasks, &self.decode(x), self.mode, self.system)?;
        Ok(if value.feasible {
            value.total
        } else {
            f64::INFINITY
        })
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    fn evaluate_all(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.fitness(x)).collect()
    }

    pub fn run(&self) -> Result<SolveResult> {
        let started = Instant::now();
        let cfg = &self.cfg;
        let n = cfg.nest_count;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let sigma = mantegna_sigma(cfg.levy_lambda);

        let mut nests: Vec<Vec<f64>> = (0..n).map(|_| self.random_point(&mut rng)).collect();
        if self.initial.is_empty() {
            if self.mode == Mode::Partition {
                // Anchor one nest at the all-local point, which is always
                // feasible, with every task pointed at some server so that
                // its local fraction can move.
                let servers = self.system.servers.len() as f64;
                for v in nests[0].chunks_exact_mut(DIMS_PER_TASK) {
                    v[0] = 1.0;
                    v[1] = 1.0 + (servers - 1.0) * v[1] / servers;
                }
            }
        } else {
            for (nest, seed) in nests.iter_mut().zip(&self.initial) {
                nest.clone_from(seed);
            }
        }
        let mut fitness = self.evaluate_all(&nests)?;
        let mut evaluations = n as u64;

        let mut best = argmin(&fitness);
        let mut trace = vec![TracePoint {
            iteration: 0,
            best_objective: fitness[best],
        }];
        let abandon = ((cfg.abandonment_prob * n as f64).ceil() as usize).min(n - 1);

        for iteration in 1..=cfg.iterations {
            let proposals: Vec<Vec<f64>> = nests
                .iter()
                .map(|nest| {
                    nest.iter()
                        .zip(self.lower.iter().zip(&self.upper))
                        .map(|(&x, (&lo, &hi))| {
                            let step = cfg.step_scale
                                * (hi - lo)
                                * levy_step(&mut rng, sigma, cfg.levy_lambda);
                            (x + step).clamp(lo, hi)
                        })
                        .collect()
                })
                .collect();
            let proposed = self.evaluate_all(&proposals)?;
            evaluations += n as u64;
            for (i, (point, value)) in proposals.into_iter().zip(proposed).enumerate() {
                if value < fitness[i] {
                    nests[i] = point;
                    fitness[i] = value;
                }
            }

            best = argmin(&fitness);
            if abandon > 0 {
                let mut ranked: Vec<usize> = (0..n).filter(|&i| i != best).collect();
                ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
                ranked.truncate(abandon);
                ranked.sort_unstable();
                let fresh: Vec<Vec<f64>> =
                    ranked.iter().map(|_| self.random_point(&mut rng)).collect();
                let values = self.evaluate_all(&fresh)?;
                evaluations += fresh.len() as u64;
                for ((&i, point), value) in ranked.iter().zip(fresh).zip(values) {
                    nests[i] = point;
                    fitness[i] = value;
                }
                best = argmin(&fitness);
            }
            trace.push(TracePoint {
                iteration: iteration as u64,
                best_objective: fitness[best],
            });
        }

        let mut decision = self.decode(&nests[best]);
        if !fitness[best].is_finite() {
            decision = Decision::all_local(self.tasks.len(), self.rb_max);
        }
        let value = evaluate(self.tasks, &decision, self.mode, self.system)?;
        Ok(SolveResult {
            best_decision: decision,
            best_value: value,
            trace,
            evaluations,
            wall_time_s: started.elapsed().as_secs_f64(),
            proven_optimal: false,
        })
    }
}

/// Lowest index among the smallest values.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn solve_cuckoo(
    tasks: &[Task],
    mode: Mode,
    cfg: &CuckooConfig,
    system: &SystemModel,
) -> Result<SolveResult> {
    CuckooSearch::new(tasks, mode, cfg, system)?.run()
}
