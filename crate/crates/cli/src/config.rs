//! Flat TOML experiment configuration.
//!
//! Every key is optional and falls back to the reference setup. Physical
//! quantities carry their unit in the key name.

use std::path::PathBuf;

use mecpart::model::dbm_to_watts;
use mecpart::{
    CuckooConfig, DropAccounting, ExactConfig, Mode, ProcessingModel, RadioConfig, ServerSpec,
    SizeClass, SystemModel, WorkloadSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Cuckoo,
    /// All-local in local mode, greedy earliest-start offloading in offload mode.
    Baseline,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Cuckoo => "cuckoo",
            SolverKind::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "cuckoo" => Ok(SolverKind::Cuckoo),
            "baseline" => Ok(SolverKind::Baseline),
            other => Err(format!(
                "unknown solver `{other}` (expected exact, cuckoo or baseline)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropAccountingKey {
    PerTask,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base workload seed; run `r` uses `seed ^ r`.
    pub seed: u64,
    pub ue_counts: Vec<u32>,
    pub runs_per_point: u32,
    /// Any of `local`, `offload`, `partition`.
    pub modes: Vec<String>,
    pub solvers: Vec<SolverKind>,
    pub output_dir: PathBuf,
    /// Fill `mean_walltime_s` in the summary. Off by default because wall
    /// time differs between otherwise identical runs.
    pub record_walltime: bool,

    pub total_bandwidth_hz: f64,
    pub guard_band_fraction: f64,
    pub rb_bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub channel_gain: f64,
    pub noise_power_dbm: f64,

    pub server_count: usize,
    pub cpus_per_server: usize,
    pub server_speed_factor: f64,
    pub local_rate_bits_per_s: f64,
    pub mec_rate_bits_per_s: f64,
    pub drop_accounting: DropAccountingKey,

    pub arrival_rate_per_ue_per_s: f64,
    pub max_tasks: usize,
    pub horizon_s: f64,
    pub size_classes_bits: Vec<f64>,
    pub size_class_weights: Vec<f64>,
    pub deadline_slack_min_s: f64,
    pub deadline_slack_max_s: f64,

    pub exact_p_grid_step: f64,
    /// Empty means the full grant only.
    pub exact_rb_choices: Vec<u32>,
    pub exact_node_limit: u64,

    /// Run `r` uses `cuckoo_seed ^ r`.
    pub cuckoo_seed: u64,
    pub cuckoo_nest_count: usize,
    pub cuckoo_iterations: usize,
    pub cuckoo_abandonment_prob: f64,
    pub cuckoo_levy_lambda: f64,
    pub cuckoo_step_scale: f64,
    /// 0 keeps local fractions continuous.
    pub cuckoo_p_grid_step: f64,
    pub cuckoo_rb_choices: Vec<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let radio = RadioConfig::default();
        let processing = ProcessingModel::default();
        let exact = ExactConfig::default();
        let cuckoo = CuckooConfig::default();
        let workload = WorkloadSpec::for_users(1, 0.1, 0);
        Self {
            seed: 0,
            ue_counts: vec![50, 100, 200, 400],
            runs_per_point: 10,
            modes: vec!["offload".into(), "partition".into()],
            solvers: vec![SolverKind::Exact, SolverKind::Cuckoo],
            output_dir: PathBuf::from("results"),
            record_walltime: false,

            total_bandwidth_hz: radio.total_bandwidth_hz,
            guard_band_fraction: radio.guard_band_fraction,
            rb_bandwidth_hz: radio.rb_bandwidth_hz,
            tx_power_w: radio.tx_power_w,
            channel_gain: radio.channel_gain,
            noise_power_dbm: -100.0,

            server_count: 2,
            cpus_per_server: 1,
            server_speed_factor: 1.0,
            local_rate_bits_per_s: processing.local_rate_bits_per_s,
            mec_rate_bits_per_s: processing.mec_rate_bits_per_s,
            drop_accounting: DropAccountingKey::PerTask,

            arrival_rate_per_ue_per_s: workload.arrival_rate_per_s,
            max_tasks: workload.max_tasks,
            horizon_s: workload.horizon_s,
            size_classes_bits: workload.size_classes.iter().map(|c| c.size_bits).collect(),
            size_class_weights: workload.size_classes.iter().map(|c| c.weight).collect(),
            deadline_slack_min_s: workload.deadline_slack_s.0,
            deadline_slack_max_s: workload.deadline_slack_s.1,

            exact_p_grid_step: exact.p_grid_step,
            exact_rb_choices: exact.rb_choices,
            exact_node_limit: exact.node_limit,

            cuckoo_seed: cuckoo.seed,
            cuckoo_nest_count: cuckoo.nest_count,
            cuckoo_iterations: cuckoo.iterations,
            cuckoo_abandonment_prob: cuckoo.abandonment_prob,
            cuckoo_levy_lambda: cuckoo.levy_lambda,
            cuckoo_step_scale: cuckoo.step_scale,
            cuckoo_p_grid_step: cuckoo.p_grid_step.unwrap_or(0.0),
            cuckoo_rb_choices: cuckoo.rb_choices,
        }
    }
}

/// 1-based line of byte `offset` in `text`.
pub(crate) fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line where `key` is assigned, if it is.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates a config file's contents.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_of(text, s.start)),
            field: None,
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            CliError::Config {
                field: Some(field),
                message,
                ..
            } => CliError::Config {
                line: key_line(text, &field),
                field: Some(field),
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config {
            line: None,
            field: None,
            message: e.to_string(),
        })
    }

    pub fn parsed_modes(&self) -> Result<Vec<Mode>> {
        self.modes
            .iter()
            .map(|m| {
                m.parse()
                    .map_err(|e: mecpart::Error| field_error("modes", e.to_string()))
            })
            .collect()
    }

    pub fn system_model(&self) -> SystemModel {
        SystemModel {
            radio: RadioConfig {
                total_bandwidth_hz: self.total_bandwidth_hz,
                guard_band_fraction: self.guard_band_fraction,
                rb_bandwidth_hz: self.rb_bandwidth_hz,
                tx_power_w: self.tx_power_w,
                channel_gain: self.channel_gain,
                noise_power_w: dbm_to_watts(self.noise_power_dbm),
            },
            processing: ProcessingModel {
                local_rate_bits_per_s: self.local_rate_bits_per_s,
                mec_rate_bits_per_s: self.mec_rate_bits_per_s,
            },
            servers: (0..self.server_count)
                .map(|id| ServerSpec {
                    id,
                    cpu_count: self.cpus_per_server,
                    speed_factor: self.server_speed_factor,
                })
                .collect(),
            drop_accounting: match self.drop_accounting {
                DropAccountingKey::PerTask => DropAccounting::PerTask,
                DropAccountingKey::Global => DropAccounting::Global,
            },
        }
    }

    pub fn workload_seed(&self, run: u32) -> u64 {
        self.seed ^ u64::from(run)
    }

    pub fn cuckoo_run_seed(&self, run: u32) -> u64 {
        self.cuckoo_seed ^ u64::from(run)
    }

    pub fn workload_spec(&self, ue_count: u32, run: u32) -> WorkloadSpec {
        WorkloadSpec {
            ue_count,
            max_tasks: self.max_tasks,
            arrival_rate_per_s: self.arrival_rate_per_ue_per_s * f64::from(ue_count),
            horizon_s: self.horizon_s,
            size_classes: self
                .size_classes_bits
                .iter()
                .zip(&self.size_class_weights)
                .map(|(&size_bits, &weight)| SizeClass { size_bits, weight })
                .collect(),
            deadline_slack_s: (self.deadline_slack_min_s, self.deadline_slack_max_s),
            seed: self.workload_seed(run),
        }
    }

    pub fn exact_config(&self) -> ExactConfig {
        ExactConfig {
            p_grid_step: self.exact_p_grid_step,
            rb_choices: self.exact_rb_choices.clone(),
            node_limit: self.exact_node_limit,
        }
    }

    pub fn cuckoo_config(&self, run: u32) -> CuckooConfig {
        CuckooConfig {
            nest_count: self.cuckoo_nest_count,
            iterations: self.cuckoo_iterations,
            abandonment_prob: self.cuckoo_abandonment_prob,
            levy_lambda: self.cuckoo_levy_lambda,
            seed: self.cuckoo_run_seed(run),
            step_scale: self.cuckoo_step_scale,
            p_grid_step: (self.cuckoo_p_grid_step > 0.0).then_some(self.cuckoo_p_grid_step),
            rb_choices: self.cuckoo_rb_choices.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        // Core errors name the offending setting; map it back to its key.
        let wrap = |prefix: &'static str, fallback: &'static str| {
            move |e: mecpart::Error| {
                let message = e.to_string();
                let field = config_keys()
                    .into_iter()
                    .find(|k| {
                        k.strip_prefix(prefix)
                            .is_some_and(|rest| mentions(&message, rest))
                    })
                    .unwrap_or_else(|| fallback.to_string());
                field_error(&field, message)
            }
        };
        if self.ue_counts.is_empty() || self.ue_counts.contains(&0) {
            return Err(field_error(
                "ue_counts",
                "must be a non-empty list of positive integers".into(),
            ));
        }
        if self.runs_per_point == 0 {
            return Err(field_error("runs_per_point", "must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(field_error("modes", "must not be empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(field_error("solvers", "must not be empty".into()));
        }
        let modes = self.parsed_modes()?;
        if self.solvers.contains(&SolverKind::Baseline) && modes.contains(&Mode::Partition) {
            return Err(field_error(
                "solvers",
                "the baseline solver has no partition mode".into(),
            ));
        }
        // Seeds are echoed into the manifest, whose integers are signed.
        for (field, seed) in [("seed", self.seed), ("cuckoo_seed", self.cuckoo_seed)] {
            if i64::try_from(seed | u64::from(self.runs_per_point)).is_err() {
                return Err(field_error(field, format!("{seed} exceeds {}", i64::MAX)));
            }
        }
        if self.server_count == 0 {
            return Err(field_error("server_count", "must be positive".into()));
        }
        if self.cpus_per_server == 0 {
            return Err(field_error("cpus_per_server", "must be positive".into()));
        }
        if !(self.server_speed_factor.is_finite() && self.server_speed_factor > 0.0) {
            return Err(field_error(
                "server_speed_factor",
                "must be positive".into(),
            ));
        }
        if !self.noise_power_dbm.is_finite() {
            return Err(field_error("noise_power_dbm", "must be finite".into()));
        }
        self.system_model()
            .radio
            .validate()
            .map_err(wrap("", "rb_bandwidth_hz"))?;
        self.system_model()
            .processing
            .validate()
            .map_err(wrap("", "mec_rate_bits_per_s"))?;
        if self.size_classes_bits.len() != self.size_class_weights.len() {
            return Err(field_error(
                "size_class_weights",
                format!(
                    "{} weights for {} size classes",
                    self.size_class_weights.len(),
                    self.size_classes_bits.len()
                ),
            ));
        }
        if !(self.arrival_rate_per_ue_per_s.is_finite() && self.arrival_rate_per_ue_per_s > 0.0) {
            return Err(field_error(
                "arrival_rate_per_ue_per_s",
                "must be positive".into(),
            ));
        }
        self.workload_spec(1, 0)
            .validate()
            .map_err(wrap("", "size_classes_bits"))?;
        self.exact_config()
            .validate()
            .map_err(wrap("exact_", "exact_p_grid_step"))?;
        self.cuckoo_config(0)
            .validate()
            .map_err(wrap("cuckoo_", "cuckoo_step_scale"))?;
        let rb_max = self.system_model().rb_max();
        for (field, choices) in [
            ("exact_rb_choices", &self.exact_rb_choices),
            ("cuckoo_rb_choices", &self.cuckoo_rb_choices),
        ] {
            if let Some(bad) = choices.iter().find(|&&rb| rb == 0 || rb > rb_max) {
                return Err(field_error(field, format!("{bad} outside 1..={rb_max}")));
            }
        }
        Ok(())
    }
}

/// Every key a config file may set.
fn config_keys() -> Vec<String> {
    let text = toml::to_string(&ExperimentConfig::default()).unwrap_or_default();
    text.lines()
        .filter_map(|l| l.split_once('=').map(|(k, _)| k.trim().to_string()))
        .collect()
}

/// Whether `name` appears in `message` as a whole identifier.
fn mentions(message: &str, name: &str) -> bool {
    message
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .any(|word| word == name)
}

fn field_error(field: &str, message: String) -> CliError {
    CliError::Config {
        line: None,
        field: Some(field.to_string()),
        message,
    }
}
