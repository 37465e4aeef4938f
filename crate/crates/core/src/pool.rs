//! Declarative pools of tasks, robots, environments and evaluation methods.
//!
//! A pool root holds four directories, each with one YAML definition per
//! file:
//!
//! ```text
//! <root>/tasks/*.yaml
//! <root>/robots/*.yaml
//! <root>/environments/*.yaml
//! <root>/eval_methods/*.yaml
//! ```
//!
//! Definitions are keyed by their `name` field, not by file name.
//! Environments are keyed by `name:variant`. A user selection of one task,
//! one robot and one or more environments is checked by
//! [`Pools::validate_selection`] and turned into a [`ResolvedConfig`].

use crate::eval::GroundTruthObject;
use crate::geometry::{clearance, Bounds, Pose, Segment};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_ROBOT_RADIUS: f64 = 0.2;

/// Connection names understood by the simulated backend.
pub mod topics {
    pub const POSE: &str = "pose";
    pub const LASER: &str = "laser";
    pub const OBJECT_GLIMPSE: &str = "object_glimpse";
    pub const MOVE_DISTANCE: &str = "move_distance";
    pub const ROTATE_ANGLE: &str = "rotate_angle";
    pub const MOVE_NEXT: &str = "move_next";

    pub const SENSORS: [&str; 3] = [POSE, LASER, OBJECT_GLIMPSE];
    pub const ACTUATORS: [&str; 3] = [MOVE_DISTANCE, ROTATE_ANGLE, MOVE_NEXT];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    SemanticSlam,
    Scd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Localisation {
    GroundTruth,
    Noisy,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::SemanticSlam => "semantic_slam",
            TaskType::Scd => "scd",
        }
    }

    pub fn scene_count(self) -> u32 {
        match self {
            TaskType::SemanticSlam => 1,
            TaskType::Scd => 2,
        }
    }
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Active => "active",
            ControlMode::Passive => "passive",
        }
    }
}

impl Localisation {
    pub fn as_str(self) -> &'static str {
        match self {
            Localisation::GroundTruth => "ground_truth",
            Localisation::Noisy => "noisy",
        }
    }
}

/// Task identifier of the form `<type>:<control_mode>:<localisation>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TaskId {
    pub task_type: TaskType,
    pub control: ControlMode,
    pub localisation: Localisation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid task identifier `{0}`: expected <semantic_slam|scd>:<active|passive>:<ground_truth|noisy>")]
pub struct TaskIdError(pub String);

impl FromStr for TaskId {
    type Err = TaskIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TaskIdError(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [ty, control, loc] = parts.as_slice() else {
            return Err(err());
        };
        let task_type = match *ty {
            "semantic_slam" => TaskType::SemanticSlam,
            "scd" => TaskType::Scd,
            _ => return Err(err()),
        };
        let control = match *control {
            "active" => ControlMode::Active,
            "passive" => ControlMode::Passive,
            _ => return Err(err()),
        };
        let localisation = match *loc {
            "ground_truth" => Localisation::GroundTruth,
            "noisy" => Localisation::Noisy,
            _ => return Err(err()),
        };
        Ok(TaskId {
            task_type,
            control,
            localisation,
        })
    }
}

impl TryFrom<String> for TaskId {
    type Error = TaskIdError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TaskId> for String {
    fn from(id: TaskId) -> String {
        id.to_string()
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.task_type.as_str(),
            self.control.as_str(),
            self.localisation.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDef {
    pub name: TaskId,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub results_format: String,
    pub eval_method: String,
    pub scene_count: u32,
}

impl TaskDef {
    pub fn validate(&self) -> Result<(), String> {
        let id = &self.name;
        if self.scene_count != id.task_type.scene_count() {
            return Err(format!(
                "scene_count {} does not match task type `{}` (expected {})",
                self.scene_count,
                id.task_type.as_str(),
                id.task_type.scene_count()
            ));
        }
        match id.control {
            ControlMode::Active => {
                if self.actions.is_empty() {
                    return Err("active tasks must declare at least one action".into());
                }
                if self.actions.iter().any(|a| a == topics::MOVE_NEXT) {
                    return Err("active tasks may not declare `move_next`".into());
                }
            }
            ControlMode::Passive => {
                if self.actions != [topics::MOVE_NEXT] {
                    return Err("passive tasks must declare exactly [move_next] as actions".into());
                }
            }
        }
        if self.observations.is_empty() {
            return Err("tasks must declare at least one observation".into());
        }
        if let Some(dup) = first_duplicate(self.actions.iter().chain(&self.observations)) {
            return Err(format!("connection `{dup}` declared twice"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    Sim,
    Real,
}

impl PlatformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlatformKind::Sim => "sim",
            PlatformKind::Real => "real",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Sensor,
    Actuator,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Sensor => "sensor",
            Channel::Actuator => "actuator",
        })
    }
}

/// One directed connection between the robot platform and the client API.
/// Translation is an identity mapping onto `backend_topic`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub channel: Channel,
    pub backend_topic: String,
}

/// Simulator tuning carried by a robot definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub substep: f64,
    pub safety_margin: f64,
    pub laser_beams: u32,
    pub laser_max_range: f64,
    pub glimpse_range: f64,
    pub glimpse_half_fov: f64,
    pub glimpse_sigma: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            substep: 0.01,
            safety_margin: 0.01,
            laser_beams: 31,
            laser_max_range: 10.0,
            glimpse_range: 3.0,
            glimpse_half_fov: std::f64::consts::FRAC_PI_4,
            glimpse_sigma: 0.02,
        }
    }
}

impl SimParams {
    fn validate(&self) -> Result<(), String> {
        let positive = [
            ("substep", self.substep),
            ("laser_max_range", self.laser_max_range),
            ("glimpse_range", self.glimpse_range),
            ("glimpse_half_fov", self.glimpse_half_fov),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("sim.{field} must be positive, got {v}"));
            }
        }
        for (field, v) in [("safety_margin", self.safety_margin), ("glimpse_sigma", self.glimpse_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("sim.{field} must be non-negative, got {v}"));
            }
        }
        if self.laser_beams < 2 {
            return Err("sim.laser_beams must be at least 2".into());
        }
        Ok(())
    }
}

fn default_radius() -> f64 {
    DEFAULT_ROBOT_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDef {
    pub name: String,
    pub kind: PlatformKind,
    pub connections: BTreeMap<String, Connection>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub sim: SimParams,
}

impl RobotDef {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(format!("radius must be positive, got {}", self.radius));
        }
        self.sim.validate()?;
        if self.kind == PlatformKind::Sim {
            for (name, conn) in &self.connections {
                let known: &[&str] = match conn.channel {
                    Channel::Sensor => &topics::SENSORS,
                    Channel::Actuator => &topics::ACTUATORS,
                };
                if !known.contains(&conn.backend_topic.as_str()) {
                    return Err(format!(
                        "connection `{name}` maps to unknown simulated {} topic `{}`",
                        conn.channel, conn.backend_topic
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn connection(&self, name: &str) -> Option<&Connection> {
        self.connections.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDef {
    pub name: String,
    pub variant: u32,
    pub kind: PlatformKind,
    pub bounds: Bounds,
    #[serde(default)]
    pub walls: Vec<Segment>,
    pub start_pose: Pose,
    #[serde(default)]
    pub trajectory: Vec<Pose>,
    #[serde(default)]
    pub objects: Vec<GroundTruthObject>,
    pub class_list: Vec<String>,
    /// Free-form variant description (lighting, time of day, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl EnvironmentDef {
    pub fn id(&self) -> String {
        format!("{}:{}", self.name, self.variant)
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.class_list.iter().position(|c| c == class)
    }

    /// Robot-independent content checks.
    pub fn validate(&self) -> Result<(), String> {
        if self.variant < 1 {
            return Err("variant must be >= 1".into());
        }
        if !self.bounds.is_well_formed() {
            return Err("bounds must satisfy min < max on both axes".into());
        }
        if self.class_list.is_empty() {
            return Err("class_list must not be empty".into());
        }
        if let Some(dup) = first_duplicate(self.class_list.iter()) {
            return Err(format!("class `{dup}` listed twice in class_list"));
        }
        for (i, pose) in std::iter::once(&self.start_pose).chain(&self.trajectory).enumerate() {
            let what = if i == 0 { "start_pose".to_string() } else { format!("trajectory[{}]", i - 1) };
            if ![pose.x, pose.y, pose.yaw].iter().all(|v| v.is_finite()) {
                return Err(format!("{what} is not finite"));
            }
            if !self.bounds.contains(pose.position()) {
                return Err(format!("{what} ({}, {}) lies outside bounds", pose.x, pose.y));
            }
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if self.class_index(&obj.class).is_none() {
                return Err(format!("objects[{i}] class `{}` missing from class_list", obj.class));
            }
            if !obj.bbox().is_valid() {
                return Err(format!("objects[{i}] must have finite centroid and positive extent"));
            }
            let (lo, hi) = obj.bbox().corners();
            if !self.bounds.contains([lo[0], lo[1]]) || !self.bounds.contains([hi[0], hi[1]]) {
                return Err(format!("objects[{i}] box lies outside bounds"));
            }
        }
        Ok(())
    }

    /// Start pose and every trajectory pose keep at least `radius` from all walls.
    pub fn check_clearance(&self, radius: f64) -> Result<(), String> {
        for (i, pose) in std::iter::once(&self.start_pose).chain(&self.trajectory).enumerate() {
            let d = clearance(&self.walls, pose.position());
            if d < radius {
                let what = if i == 0 { "start_pose".to_string() } else { format!("trajectory[{}]", i - 1) };
                return Err(format!(
                    "{what} is {d:.3} m from a wall, closer than robot radius {radius} m"
                ));
            }
        }
        Ok(())
    }
}

/// Splits `house:2` into `("house", 2)`.
pub fn parse_env_id(id: &str) -> Option<(&str, u32)> {
    let (name, variant) = id.rsplit_once(':')?;
    if name.is_empty() {
        return None;
    }
    Some((name, variant.parse().ok()?))
}

pub const OMQ_V1: &str = "omq-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalMethodDef {
    pub name: String,
    pub metric: String,
    pub results_formats: Vec<String>,
}

impl EvalMethodDef {
    pub fn validate(&self) -> Result<(), String> {
        if self.metric != OMQ_V1 {
            return Err(format!("unsupported metric `{}` (known: {OMQ_V1})", self.metric));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolKind {
    Tasks,
    Robots,
    Environments,
    EvalMethods,
}

impl PoolKind {
    pub const ALL: [PoolKind; 4] = [
        PoolKind::Tasks,
        PoolKind::Robots,
        PoolKind::Environments,
        PoolKind::EvalMethods,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            PoolKind::Tasks => "tasks",
            PoolKind::Robots => "robots",
            PoolKind::Environments => "environments",
            PoolKind::EvalMethods => "eval_methods",
        }
    }

    fn singular(self) -> &'static str {
        match self {
            PoolKind::Tasks => "task",
            PoolKind::Robots => "robot",
            PoolKind::Environments => "environment",
            PoolKind::EvalMethods => "evaluation method",
        }
    }
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.singular())
    }
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("pool directory {0} is missing")]
    MissingDir(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{}: invalid {kind} definition: {message}", path.display())]
    Invalid {
        path: PathBuf,
        kind: PoolKind,
        message: String,
    },
    #[error("duplicate {kind} `{id}` in {} and {}", first.display(), second.display())]
    DuplicateDefinition {
        kind: PoolKind,
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: PoolKind, id: String },
    #[error("incompatible selection: {0}")]
    IncompatibleSelection(String),
    #[error("task `{task}` needs {expected} environment(s), got {got}")]
    SceneCountMismatch { task: String, expected: u32, got: usize },
    #[error("robot `{robot}` has no {channel} connection `{connection}` required by the task")]
    CapabilityMissing {
        robot: String,
        connection: String,
        channel: Channel,
    },
    #[error("environment `{env}` is not usable with this robot: {message}")]
    InvalidEnvironment { env: String, message: String },
}

/// A validated selection that drives one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub task: TaskDef,
    pub robot: RobotDef,
    pub environments: Vec<EnvironmentDef>,
    pub eval_method: String,
    pub seed: u64,
}

impl ResolvedConfig {
    pub fn scene_count(&self) -> usize {
        self.environments.len()
    }

    pub fn env_id(&self) -> String {
        self.environments
            .iter()
            .map(EnvironmentDef::id)
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// All definitions found under a pool root.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pools {
    pub tasks: BTreeMap<String, TaskDef>,
    pub robots: BTreeMap<String, RobotDef>,
    pub environments: BTreeMap<String, EnvironmentDef>,
    pub eval_methods: BTreeMap<String, EvalMethodDef>,
}

fn yaml_files(dir: &Path) -> Result<Vec<PathBuf>, PoolError> {
    if !dir.is_dir() {
        return Err(PoolError::MissingDir(dir.to_path_buf()));
    }
    let io_err = |source| PoolError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_yaml = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("yaml") | Some("yml")
        );
        if is_yaml && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PoolError> {
    let text = fs::read_to_string(path).map_err(|source| PoolError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_yaml::from_str(&text).map_err(|e| PoolError::Parse {
        path: path.to_path_buf(),
        line: e.location().map(|l| l.line()),
        message: e.to_string(),
    })
}

fn load_kind<T, K, V>(
    root: &Path,
    kind: PoolKind,
    key: K,
    validate: V,
) -> Result<BTreeMap<String, T>, PoolError>
where
    T: serde::de::DeserializeOwned,
    K: Fn(&T) -> String,
    V: Fn(&T) -> Result<(), String>,
{
    let mut out = BTreeMap::new();
    let mut sources: BTreeMap<String, PathBuf> = BTreeMap::new();
    for path in yaml_files(&root.join(kind.dir_name()))? {
        let def: T = parse_file(&path)?;
        validate(&def).map_err(|message| PoolError::Invalid {
            path: path.clone(),
            kind,
            message,
        })?;
        let id = key(&def);
        if let Some(first) = sources.get(&id) {
            return Err(PoolError::DuplicateDefinition {
                kind,
                id,
                first: first.clone(),
                second: path,
            });
        }
        sources.insert(id.clone(), path);
        out.insert(id, def);
    }
    Ok(out)
}

fn first_duplicate<'a>(items: impl Iterator<Item = &'a String>) -> Option<&'a String> {
    let mut seen = std::collections::BTreeSet::new();
    items.into_iter().find(|item| !seen.insert(item.as_str()))
}

impl Pools {
    /// Loads every definition below `root`. The first malformed, invalid or
    /// duplicate file aborts the load with an error naming that file.
    pub fn load(root: impl AsRef<Path>) -> Result<Self, PoolError> {
        let root = root.as_ref();
        Ok(Pools {
            tasks: load_kind(root, PoolKind::Tasks, |t: &TaskDef| t.name.to_string(), TaskDef::validate)?,
            robots: load_kind(root, PoolKind::Robots, |r: &RobotDef| r.name.clone(), RobotDef::validate)?,
            environments: load_kind(
                root,
                PoolKind::Environments,
                EnvironmentDef::id,
                EnvironmentDef::validate,
            )?,
            eval_methods: load_kind(
                root,
                PoolKind::EvalMethods,
                |m: &EvalMethodDef| m.name.clone(),
                EvalMethodDef::validate,
            )?,
        })
    }

    /// Writes one YAML file per definition, mirroring the layout read by [`Pools::load`].
    pub fn write_to(&self, root: impl AsRef<Path>) -> std::io::Result<()> {
        fn dump<T: Serialize>(dir: &Path, id: &str, def: &T) -> std::io::Result<()> {
            fs::create_dir_all(dir)?;
            let file = id.replace([':', '/'], "_") + ".yaml";
            let text = serde_yaml::to_string(def)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            fs::write(dir.join(file), text)
        }
        let root = root.as_ref();
        for kind in PoolKind::ALL {
            fs::create_dir_all(root.join(kind.dir_name()))?;
        }
        for (id, def) in &self.tasks {
            dump(&root.join("tasks"), id, def)?;
        }
        for (id, def) in &self.robots {
            dump(&root.join("robots"), id, def)?;
        }
        for (id, def) in &self.environments {
            dump(&root.join("environments"), id, def)?;
        }
        for (id, def) in &self.eval_methods {
            dump(&root.join("eval_methods"), id, def)?;
        }
        Ok(())
    }

    /// Sorted identifiers for one kind of definition.
    pub fn list_options(&self, kind: PoolKind) -> Vec<String> {
        let keys: Vec<String> = match kind {
            PoolKind::Tasks => self.tasks.keys().cloned().collect(),
            PoolKind::Robots => self.robots.keys().cloned().collect(),
            PoolKind::Environments => self.environments.keys().cloned().collect(),
            PoolKind::EvalMethods => self.eval_methods.keys().cloned().collect(),
        };
        // BTreeMap keys are already in lexicographic order.
        keys
    }

    pub fn task(&self, id: &str) -> Result<&TaskDef, SelectionError> {
        self.tasks.get(id).ok_or_else(|| SelectionError::NotFound {
            kind: PoolKind::Tasks,
            id: id.to_string(),
        })
    }

    pub fn robot(&self, id: &str) -> Result<&RobotDef, SelectionError> {
        self.robots.get(id).ok_or_else(|| SelectionError::NotFound {
            kind: PoolKind::Robots,
            id: id.to_string(),
        })
    }

    pub fn environment(&self, id: &str) -> Result<&EnvironmentDef, SelectionError> {
        self.environments.get(id).ok_or_else(|| SelectionError::NotFound {
            kind: PoolKind::Environments,
            id: id.to_string(),
        })
    }

    pub fn eval_method(&self, id: &str) -> Result<&EvalMethodDef, SelectionError> {
        self.eval_methods.get(id).ok_or_else(|| SelectionError::NotFound {
            kind: PoolKind::EvalMethods,
            id: id.to_string(),
        })
    }

    /// Checks that a task, robot and environment list form a runnable session.
    pub fn validate_selection<S: AsRef<str>>(
        &self,
        task_id: &str,
        robot_id: &str,
        env_ids: &[S],
        seed: u64,
    ) -> Result<ResolvedConfig, SelectionError> {
        let task = self.task(task_id)?;
        let robot = self.robot(robot_id)?;
        let environments = env_ids
            .iter()
            .map(|id| self.environment(id.as_ref()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let eval_method = self.eval_method(&task.eval_method)?;

        if environments.len() != task.scene_count as usize {
            return Err(SelectionError::SceneCountMismatch {
                task: task.name.to_string(),
                expected: task.scene_count,
                got: environments.len(),
            });
        }
        for env in &environments {
            if env.kind != robot.kind {
                return Err(SelectionError::IncompatibleSelection(format!(
                    "robot `{}` is {} but environment `{}` is {}",
                    robot.name,
                    robot.kind.as_str(),
                    env.id(),
                    env.kind.as_str()
                )));
            }
        }
        if let Some(first) = environments.first() {
            for env in &environments[1..] {
                if env.name != first.name || env.variant == first.variant {
                    return Err(SelectionError::IncompatibleSelection(format!(
                        "scene environments must be distinct variants of one environment, got `{}` and `{}`",
                        first.id(),
                        env.id()
                    )));
                }
                if env.class_list != first.class_list {
                    return Err(SelectionError::IncompatibleSelection(format!(
                        "variants `{}` and `{}` declare different class lists",
                        first.id(),
                        env.id()
                    )));
                }
            }
        }
        if !eval_method.results_formats.contains(&task.results_format) {
            return Err(SelectionError::IncompatibleSelection(format!(
                "evaluation method `{}` does not accept results format `{}`",
                eval_method.name, task.results_format
            )));
        }
        let required = task
            .actions
            .iter()
            .map(|a| (a, Channel::Actuator))
            .chain(task.observations.iter().map(|o| (o, Channel::Sensor)));
        for (name, channel) in required {
            match robot.connection(name) {
                Some(conn) if conn.channel == channel => {}
                _ => {
                    return Err(SelectionError::CapabilityMissing {
                        robot: robot.name.clone(),
                        connection: name.clone(),
                        channel,
                    })
                }
            }
        }
        if robot.kind == PlatformKind::Sim {
            for env in &environments {
                env.check_clearance(robot.radius)
                    .map_err(|message| SelectionError::InvalidEnvironment {
                        env: env.id(),
                        message,
                    })?;
            }
        }
        Ok(ResolvedConfig {
            task: task.clone(),
            robot: robot.clone(),
            environments,
            eval_method: task.eval_method.clone(),
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_id_parse_and_display() {
        let id: TaskId = "semantic_slam:active:ground_truth".parse().unwrap();
        assert_eq!(id.task_type, TaskType::SemanticSlam);
        assert_eq!(id.control, ControlMode::Active);
        assert_eq!(id.localisation, Localisation::GroundTruth);
        assert_eq!(id.to_string(), "semantic_slam:active:ground_truth");
        for bad in ["semantic_slam:active", "scd:active:ground_truth:x", "slam:active:noisy", "scd:idle:noisy", ""] {
            assert!(bad.parse::<TaskId>().is_err(), "{bad}");
        }
    }

    fn task(name: &str, actions: &[&str], scene_count: u32) -> TaskDef {
        TaskDef {
            name: name.parse().unwrap(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            observations: vec!["pose".into()],
            results_format: "object_map".into(),
            eval_method: "omq".into(),
            scene_count,
        }
    }

    #[test]
    fn task_invariants() {
        assert!(task("semantic_slam:active:ground_truth", &["move_distance"], 1).validate().is_ok());
        assert!(task("scd:passive:noisy", &["move_next"], 2).validate().is_ok());
        assert!(task("scd:passive:noisy", &["move_next"], 1).validate().is_err());
        assert!(task("semantic_slam:active:ground_truth", &[], 1).validate().is_err());
        assert!(task("semantic_slam:passive:ground_truth", &["move_distance"], 1).validate().is_err());
        assert!(task("semantic_slam:active:ground_truth", &["move_next"], 1).validate().is_err());
    }

    #[test]
    fn env_id_parsing() {
        assert_eq!(parse_env_id("house:2"), Some(("house", 2)));
        assert_eq!(parse_env_id("a:b:3"), Some(("a:b", 3)));
        assert_eq!(parse_env_id("house"), None);
        assert_eq!(parse_env_id(":1"), None);
        assert_eq!(parse_env_id("house:x"), None);
    }
}
