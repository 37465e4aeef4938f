//! The object-map results file produced by a solution.

use crate::eval::Box3;
use crate::pool::{ResolvedConfig, TaskId, TaskType};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

const PROB_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDetails {
    pub name: String,
    pub results_format: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentDetails {
    pub name: String,
    pub variant: u32,
}

impl EnvironmentDetails {
    pub fn id(&self) -> String {
        format!("{}:{}", self.name, self.variant)
    }
}

/// Probability mass over change states for scene change detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateProbs {
    pub added: f64,
    pub removed: f64,
    pub constant: f64,
}

impl StateProbs {
    pub const fn one_hot(state: crate::eval::ObjectState) -> Self {
        use crate::eval::ObjectState::*;
        match state {
            Added => StateProbs { added: 1.0, removed: 0.0, constant: 0.0 },
            Removed => StateProbs { added: 0.0, removed: 1.0, constant: 0.0 },
            Constant => StateProbs { added: 0.0, removed: 0.0, constant: 1.0 },
        }
    }

    pub fn get(&self, state: crate::eval::ObjectState) -> f64 {
        use crate::eval::ObjectState::*;
        match state {
            Added => self.added,
            Removed => self.removed,
            Constant => self.constant,
        }
    }
}

/// One proposed object in a results map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedObject {
    pub label_probs: Vec<f64>,
    pub centroid: [f64; 3],
    pub extent: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_probs: Option<StateProbs>,
}

impl ProposedObject {
    pub fn bbox(&self) -> Box3 {
        Box3::new(self.centroid, self.extent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub task_details: TaskDetails,
    pub environment_details: Vec<EnvironmentDetails>,
    pub class_list: Vec<String>,
    pub objects: Vec<ProposedObject>,
}

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("invalid results field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read results file {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write results file {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ResultsError {
    ResultsError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn check_distribution(field: &str, probs: &[f64]) -> Result<(), ResultsError> {
    for (i, p) in probs.iter().enumerate() {
        if !(p.is_finite() && (0.0..=1.0).contains(p)) {
            return Err(invalid(format!("{field}[{i}]"), format!("probability {p} outside [0, 1]")));
        }
    }
    let sum: f64 = probs.iter().sum();
    if sum > 1.0 + PROB_SLACK {
        return Err(invalid(field, format!("probabilities sum to {sum} > 1")));
    }
    Ok(())
}

impl ResultsFile {
    /// An empty map carrying the session's task and environment details.
    pub fn prefilled(config: &ResolvedConfig) -> Self {
        ResultsFile {
            task_details: TaskDetails {
                name: config.task.name.to_string(),
                results_format: config.task.results_format.clone(),
            },
            environment_details: config
                .environments
                .iter()
                .map(|e| EnvironmentDetails {
                    name: e.name.clone(),
                    variant: e.variant,
                })
                .collect(),
            class_list: config
                .environments
                .first()
                .map(|e| e.class_list.clone())
                .unwrap_or_default(),
            objects: Vec::new(),
        }
    }

    pub fn task_id(&self) -> Result<TaskId, ResultsError> {
        self.task_details
            .name
            .parse()
            .map_err(|e: crate::pool::TaskIdError| invalid("task_details.name", e.to_string()))
    }

    /// Full schema check.
    pub fn validate(&self) -> Result<(), ResultsError> {
        let task = self.task_id()?;
        if self.environment_details.len() != task.task_type.scene_count() as usize {
            return Err(invalid(
                "environment_details",
                format!(
                    "expected {} environment(s) for `{}`, found {}",
                    task.task_type.scene_count(),
                    self.task_details.name,
                    self.environment_details.len()
                ),
            ));
        }
        if self.class_list.is_empty() {
            return Err(invalid("class_list", "must not be empty"));
        }
        let scd = task.task_type == TaskType::Scd;
        for (i, obj) in self.objects.iter().enumerate() {
            let field = format!("objects[{i}]");
            if obj.label_probs.len() != self.class_list.len() {
                return Err(invalid(
                    format!("{field}.label_probs"),
                    format!(
                        "has {} entries but class_list has {}",
                        obj.label_probs.len(),
                        self.class_list.len()
                    ),
                ));
            }
            check_distribution(&format!("{field}.label_probs"), &obj.label_probs)?;
            if !obj.centroid.iter().all(|c| c.is_finite()) {
                return Err(invalid(format!("{field}.centroid"), "must be finite"));
            }
            if !obj.extent.iter().all(|e| e.is_finite() && *e > 0.0) {
                return Err(invalid(format!("{field}.extent"), "components must be positive"));
            }
            match (&obj.state_probs, scd) {
                (Some(s), true) => {
                    check_distribution(&format!("{field}.state_probs"), &[s.added, s.removed, s.constant])?
                }
                (None, true) => {
                    return Err(invalid(format!("{field}.state_probs"), "required for scene change detection"))
                }
                (Some(_), false) => {
                    return Err(invalid(
                        format!("{field}.state_probs"),
                        "only allowed for scene change detection",
                    ))
                }
                (None, false) => {}
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ResultsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ResultsError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| ResultsError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Reads and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ResultsError> {
        let results = Self::read(path)?;
        results.validate()?;
        Ok(results)
    }

    /// Writes pretty JSON via a temporary file renamed into place.
    pub fn write_atomic(&self, path: impl AsRef<Path>) -> Result<(), ResultsError> {
        write_json_atomic(path.as_ref(), self).map_err(|source| ResultsError::Write {
            path: path.as_ref().display().to_string(),
            source,
        })
    }
}

/// Serializes `value` as pretty JSON and atomically replaces `path`.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, value)?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
