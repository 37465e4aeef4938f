//! Sequential environment sweeps producing a performance profile.
//!
//! Layout of `output_dir` after a batch:
//!
//! ```text
//! profile.json
//! results/<index>_<env>.json
//! reports/<index>_<env>.report.json
//! ```
//!
//! Paths inside the profile are relative to `output_dir`.

use crate::client::{ClientError, Submission, ENV_ID_ENV, SEED_ENV};
use crate::eval::{evaluate_with_pools, EvalError};
use crate::pool::{Pools, ResolvedConfig, SelectionError};
use crate::results::write_json_atomic;
use crate::supervisor::{ServeOptions, Supervisor, SupervisorError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const PROFILE_FILE: &str = "profile.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub task_id: String,
    pub robot_id: String,
    /// One entry per run. Multi-scene entries join their variants with `+`.
    pub env_ids: Vec<String>,
    pub command: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub host: String,
    /// First port tried for each supervisor; 0 picks an ephemeral port.
    pub port: u16,
}

impl BatchSpec {
    pub fn new(task_id: &str, robot_id: &str, env_ids: &[&str], command: &str, output_dir: impl Into<PathBuf>) -> Self {
        BatchSpec {
            task_id: task_id.into(),
            robot_id: robot_id.into(),
            env_ids: env_ids.iter().map(|s| s.to_string()).collect(),
            command: command.into(),
            seed: 0,
            output_dir: output_dir.into(),
            host: "127.0.0.1".into(),
            port: 10000,
        }
    }

    /// Resolves every entry up front so a bad sweep fails before anything runs.
    pub fn resolve(&self, pools: &Pools) -> Result<Vec<ResolvedConfig>, BatchError> {
        if self.env_ids.is_empty() {
            return Err(BatchError::NoEnvironments);
        }
        self.env_ids
            .iter()
            .enumerate()
            .map(|(i, env)| {
                let parts: Vec<&str> = env.split('+').collect();
                pools
                    .validate_selection(&self.task_id, &self.robot_id, &parts, self.seed.wrapping_add(i as u64))
                    .map_err(|source| BatchError::Selection { env: env.clone(), source })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub env_id: String,
    pub seed: u64,
    pub results_path: PathBuf,
    pub report_path: PathBuf,
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    pub task_id: String,
    pub robot_id: String,
    pub entries: Vec<ProfileEntry>,
    /// Mean over scored entries; `None` when every entry failed.
    pub mean_score: Option<f64>,
    pub created_at: u64,
    pub harness_version: String,
}

impl PerformanceProfile {
    pub fn scored(&self) -> impl Iterator<Item = &ProfileEntry> {
        self.entries.iter().filter(|e| e.score.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ProfileEntry> {
        self.entries.iter().filter(|e| e.score.is_none())
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("batch needs at least one environment")]
    NoEnvironments,
    #[error("environment `{env}`: {source}")]
    Selection {
        env: String,
        #[source]
        source: SelectionError,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("every batch entry failed")]
    AllFailed(PerformanceProfile),
}

#[derive(Debug, Error)]
enum EntryError {
    #[error(transparent)]
    Supervisor(#[from] SupervisorError),
    #[error(transparent)]
    Submission(#[from] ClientError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write report: {0}")]
    Report(std::io::Error),
}

fn file_stem(index: usize, env_id: &str) -> String {
    let safe: String = env_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:03}_{safe}")
}

fn serve(config: &ResolvedConfig, host: &str, port: u16) -> Result<Supervisor, SupervisorError> {
    match Supervisor::serve_with(config.clone(), format!("{host}:{port}"), ServeOptions::default()) {
        Err(SupervisorError::AddrInUse(_)) if port != 0 => {
            Supervisor::serve_with(config.clone(), format!("{host}:{}", port.wrapping_add(1)), ServeOptions::default())
        }
        other => other,
    }
}

fn run_entry(
    spec: &BatchSpec,
    pools: &Pools,
    config: &ResolvedConfig,
    env_id: &str,
    results_path: &Path,
    report_path: &Path,
) -> Result<f64, EntryError> {
    let supervisor = serve(config, &spec.host, spec.port)?;
    let outcome = Submission::new(&spec.command, supervisor.addr().to_string(), results_path)
        .env(ENV_ID_ENV, env_id)
        .env(SEED_ENV, config.seed.to_string())
        .run();
    supervisor.shutdown();
    let results = outcome?;
    let report = evaluate_with_pools(&results, pools)?;
    report.write(report_path).map_err(EntryError::Report)?;
    Ok(report.score)
}

/// Runs every entry of `spec` in order, one supervisor at a time.
///
/// Failed entries are recorded with a null score. `progress` is called after
/// each entry.
pub fn run_batch(
    spec: &BatchSpec,
    pools: &Pools,
    mut progress: impl FnMut(&ProfileEntry),
) -> Result<PerformanceProfile, BatchError> {
    let configs = spec.resolve(pools)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BatchError::Io { path, source }
    };
    for dir in ["results", "reports"] {
        let path = spec.output_dir.join(dir);
        std::fs::create_dir_all(&path).map_err(io_err(&path))?;
    }

    let mut entries = Vec::with_capacity(configs.len());
    for (index, (env_id, config)) in spec.env_ids.iter().zip(&configs).enumerate() {
        let stem = file_stem(index, env_id);
        let results_rel = PathBuf::from("results").join(format!("{stem}.json"));
        let report_rel = PathBuf::from("reports").join(format!("{stem}.report.json"));
        let report_abs = spec.output_dir.join(&report_rel);
        // A stale report must not survive a failed rerun.
        let _ = std::fs::remove_file(&report_abs);
        let outcome = run_entry(
            spec,
            pools,
            config,
            env_id,
            &spec.output_dir.join(&results_rel),
            &report_abs,
        );
        let entry = ProfileEntry {
            env_id: env_id.clone(),
            seed: config.seed,
            results_path: results_rel,
            report_path: report_rel,
            score: outcome.as_ref().ok().copied(),
            error: outcome.err().map(|e| e.to_string()),
        };
        progress(&entry);
        entries.push(entry);
    }

    let scores: Vec<f64> = entries.iter().filter_map(|e| e.score).collect();
    let mean_score = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    let profile = PerformanceProfile {
        task_id: spec.task_id.clone(),
        robot_id: spec.robot_id.clone(),
        entries,
        mean_score,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let profile_path = spec.output_dir.join(PROFILE_FILE);
    write_json_atomic(&profile_path, &profile).map_err(io_err(&profile_path))?;
    if mean_score.is_none() {
        return Err(BatchError::AllFailed(profile));
    }
    Ok(profile)
}
