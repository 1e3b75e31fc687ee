//! CSV reports, the run manifest and replay.
//!
//! Every file is written to `<name>.partial` first and renamed into place,
//! so an interrupted write never leaves a truncated file under the final
//! name. Floats use shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mecpart::solvers::trace_csv;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{run_experiment, ExperimentReport, RunRecord, SummaryRow};

pub const SUMMARY_HEADER: &str =
    "ue_count,mode,solver,mean_latency_s,std_latency_s,mean_drops,mec_util,local_util,mean_walltime_s";
pub const RUNS_HEADER: &str = "ue_count,mode,solver,run,workload_seed,solver_seed,tasks,latency_s,objective,drops,feasible,mec_util,local_util,evaluations,proven_optimal";
pub const TIMING_HEADER: &str = "ue_count,mode,solver,run,walltime_s";

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TRACE_DIR: &str = "traces";

const MANIFEST_FORMAT: u32 = 1;
const SEED_SCHEME: &str = "workload seed = seed xor run; cuckoo seed = cuckoo_seed xor run";

/// Recorded seeds of one `(ue_count, run)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRun {
    pub ue_count: u32,
    pub run: u32,
    pub workload_seed: u64,
    pub cuckoo_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub seed_scheme: String,
    pub config: ExperimentConfig,
    pub runs: Vec<ManifestRun>,
}

impl Manifest {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        let mut runs = Vec::new();
        for &ue_count in &config.ue_counts {
            for run in 0..config.runs_per_point {
                runs.push(ManifestRun {
                    ue_count,
                    run,
                    workload_seed: config.workload_seed(run),
                    cuckoo_seed: config.cuckoo_run_seed(run),
                });
            }
        }
        Self {
            format: MANIFEST_FORMAT,
            seed_scheme: SEED_SCHEME.into(),
            config: config.clone(),
            runs,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config {
            line: None,
            field: None,
            message: e.to_string(),
        })
    }

    /// Parses a manifest and checks that its seeds follow from its config.
    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: Self = toml::from_str(text).map_err(|e| CliError::Config {
            line: e.span().map(|s| crate::config::line_of(text, s.start)),
            field: None,
            message: e.message().to_string(),
        })?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(CliError::Config {
                line: None,
                field: Some("format".into()),
                message: format!("unsupported manifest format {}", manifest.format),
            });
        }
        manifest.config.validate()?;
        if manifest.runs != Self::for_config(&manifest.config).runs {
            return Err(CliError::Config {
                line: None,
                field: Some("runs".into()),
                message: "recorded seeds do not match the config".into(),
            });
        }
        Ok(manifest)
    }
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes `contents` to `path` through a `.partial` sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let partial = partial_path(path);
    fs::write(&partial, contents).map_err(|e| CliError::io(&partial, e))?;
    fs::rename(&partial, path).map_err(|e| CliError::io(path, e))
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.ue_count,
            r.mode,
            r.solver.as_str(),
            r.mean_latency_s,
            r.std_latency_s,
            r.mean_drops,
            r.mec_util,
            r.local_util,
            r.mean_walltime_s
        );
    }
    out
}

pub fn runs_csv(runs: &[RunRecord]) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in runs {
        let seed = r.solver_seed.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:?},{:?},{},{},{:?},{:?},{},{}",
            r.ue_count,
            r.mode,
            r.solver.as_str(),
            r.run,
            r.workload_seed,
            seed,
            r.tasks,
            r.latency_s,
            r.objective,
            r.drops,
            r.feasible,
            r.mec_util,
            r.local_util,
            r.evaluations,
            r.proven_optimal
        );
    }
    out
}

fn timing_csv(runs: &[RunRecord]) -> String {
    let mut out = format!("{TIMING_HEADER}\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{:?}",
            r.ue_count,
            r.mode,
            r.solver.as_str(),
            r.run,
            r.walltime_s
        );
    }
    out
}

pub fn trace_file_name(r: &RunRecord) -> String {
    format!(
        "ue{}_{}_{}_run{}.csv",
        r.ue_count,
        r.mode,
        r.solver.as_str(),
        r.run
    )
}

/// Writes the report into `dir`. The manifest goes last, so its presence
/// marks a complete report.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    for r in &report.runs {
        write_atomic(
            &dir.join(TRACE_DIR).join(trace_file_name(r)),
            &trace_csv(&r.trace),
        )?;
    }
    write_atomic(&dir.join(RUNS_FILE), &runs_csv(&report.runs))?;
    write_atomic(&dir.join(TIMING_FILE), &timing_csv(&report.runs))?;
    write_atomic(&dir.join(SUMMARY_FILE), &summary_csv(&report.summary))?;
    write_atomic(
        &dir.join(MANIFEST_FILE),
        &Manifest::for_config(&report.config).to_toml()?,
    )
}

/// Re-runs the experiment recorded in a manifest and writes it to `dir`.
pub fn replay(manifest_text: &str, dir: &Path) -> Result<ExperimentReport> {
    let manifest = Manifest::from_toml(manifest_text)?;
    let report = run_experiment(&manifest.config)?;
    write_report(&report, dir)?;
    Ok(report)
}
