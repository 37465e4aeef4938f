//! Observe/act client for a running supervisor, the agent runner, and the
//! submission runner that launches a solution as a child process.

use crate::pool::{ControlMode, ResolvedConfig, TaskId};
use crate::results::{ResultsError, ResultsFile};
use crate::sim::{ActionOutcome, ActionStatus, SensorFrame};
use crate::supervisor::DEFAULT_ADDR;
use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;
use thiserror::Error;

pub const ADDR_ENV: &str = "TASKBENCH_ADDR";
pub const RESULTS_ENV: &str = "TASKBENCH_RESULTS";
/// Extra variables set by the batch runner.
pub const ENV_ID_ENV: &str = "TASKBENCH_ENV";
pub const SEED_ENV: &str = "TASKBENCH_SEED";

/// Reserved action name an active agent returns to move to the next scene.
pub const NEXT_SCENE_ACTION: &str = "next_scene";

/// Sensor frames keyed by sensor name, in the task's declared order.
pub type Observations = IndexMap<String, SensorFrame>;

pub type AgentError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach supervisor at {addr}: {message}")]
    Connection { addr: String, message: String },
    #[error("supervisor at {0} is not healthy")]
    SupervisorUnhealthy(String),
    #[error("reading sensor `{sensor}` failed: {source}")]
    Observation {
        sensor: String,
        #[source]
        source: Box<ClientError>,
    },
    #[error("`{0}` is not an actuator of this task")]
    UndeclaredActuator(String),
    #[error("mode violation: {0}")]
    ModeViolation(String),
    #[error("supervisor busy: {0}")]
    Busy(String),
    #[error("session finished: {0}")]
    SessionFinished(String),
    #[error("no more scenes: {0}")]
    NoMoreScenes(String),
    #[error("supervisor rejected request ({status} {code}): {message}")]
    Rejected { status: u16, code: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("agent failed: {0}")]
    Agent(String),
    #[error(transparent)]
    ResultValidation(#[from] ResultsError),
    #[error("submission failed with exit code {}", code.map_or("none (signal)".to_string(), |c| c.to_string()))]
    SubmissionFailed { code: Option<i32> },
    #[error("cannot launch submission: {0}")]
    Launch(#[source] std::io::Error),
}

impl ClientError {
    /// Exit code a command should report for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Connection { .. } | ClientError::SupervisorUnhealthy(_) => 2,
            ClientError::SubmissionFailed { code: Some(c) } => *c,
            ClientError::Observation { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

fn base_url(addr: &str) -> String {
    let addr = addr.trim_end_matches('/');
    if addr.starts_with("http://") || addr.starts_with("https://") {
        addr.to_string()
    } else {
        format!("http://{addr}")
    }
}

/// The supervisor address from `TASKBENCH_ADDR`, or the default.
pub fn addr_from_env() -> String {
    std::env::var(ADDR_ENV).unwrap_or_else(|_| DEFAULT_ADDR.to_string())
}

#[derive(Debug, Clone)]
struct Transport {
    addr: String,
    base: String,
    http: ureq::Agent,
}

impl Transport {
    fn new(addr: &str) -> Self {
        // No pooled connections: a kept-alive socket to a supervisor that has
        // shut down would block instead of failing.
        let http = ureq::AgentBuilder::new()
            .max_idle_connections(0)
            .timeout_connect(Duration::from_secs(2))
            .timeout(Duration::from_secs(60))
            .build();
        Transport {
            addr: addr.to_string(),
            base: base_url(addr),
            http,
        }
    }

    fn request(&self, method: &str, path: &str, body: Option<Value>) -> Result<Value, ClientError> {
        let url = format!("{}{}", self.base, path);
        let req = self.http.request(method, &url);
        let response = match body {
            Some(body) => req.send_json(body),
            None => req.call(),
        };
        let (status, text) = match response {
            Ok(resp) => (resp.status(), resp.into_string()),
            Err(ureq::Error::Status(status, resp)) => (status, resp.into_string()),
            Err(ureq::Error::Transport(t)) => {
                return Err(ClientError::Connection {
                    addr: self.addr.clone(),
                    message: t.to_string(),
                })
            }
        };
        let text = text.map_err(|e| ClientError::Protocol(format!("unreadable body: {e}")))?;
        let envelope: Value = serde_json::from_str(&text)
            .map_err(|e| ClientError::Protocol(format!("{method} {path}: non-JSON body: {e}")))?;
        if let Some(result) = envelope.get("result") {
            if status == 200 {
                return Ok(result.clone());
            }
        }
        let err = envelope.get("error");
        let code = err
            .and_then(|e| e.get("code"))
            .and_then(Value::as_str)
            .unwrap_or("Unknown")
            .to_string();
        let message = err
            .and_then(|e| e.get("message"))
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        Err(match (status, code.as_str()) {
            (400, "ModeViolation") => ClientError::ModeViolation(message),
            (409, "Busy") => ClientError::Busy(message),
            (409, "NoMoreScenes") => ClientError::NoMoreScenes(message),
            (410, _) => ClientError::SessionFinished(message),
            _ => ClientError::Rejected { status, code, message },
        })
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        decode(self.request("GET", path, None)?, path)
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> Result<T, ClientError> {
        decode(self.request("POST", path, Some(body))?, path)
    }
}

fn decode<T: DeserializeOwned>(value: Value, what: &str) -> Result<T, ClientError> {
    serde_json::from_value(value).map_err(|e| ClientError::Protocol(format!("{what}: {e}")))
}

/// A connection to a running supervisor with its configuration cached.
#[derive(Debug, Clone)]
pub struct ClientHandle {
    transport: Transport,
    config: ResolvedConfig,
    sensors: Vec<String>,
    actuators: Vec<String>,
}

#[derive(serde::Deserialize)]
struct ConnectionsPayload {
    sensors: Vec<String>,
    actuators: Vec<String>,
}

impl ClientHandle {
    pub fn connect(addr: &str) -> Result<Self, ClientError> {
        let transport = Transport::new(addr);
        let health: Value = transport.get("/status/health").map_err(|e| match e {
            e @ ClientError::Connection { .. } => e,
            _ => ClientError::SupervisorUnhealthy(addr.to_string()),
        })?;
        if health != json!("ok") {
            return Err(ClientError::SupervisorUnhealthy(addr.to_string()));
        }
        let config = transport.get("/config")?;
        let conns: ConnectionsPayload = transport.get("/connections")?;
        Ok(ClientHandle {
            transport,
            config,
            sensors: conns.sensors,
            actuators: conns.actuators,
        })
    }

    pub fn addr(&self) -> &str {
        &self.transport.addr
    }

    /// Configuration as served. Environment objects are always empty.
    pub fn config(&self) -> &ResolvedConfig {
        &self.config
    }

    pub fn task(&self) -> TaskId {
        self.config.task.name
    }

    pub fn sensors(&self) -> &[String] {
        &self.sensors
    }

    pub fn actuators(&self) -> &[String] {
        &self.actuators
    }

    pub fn scene_count(&self) -> usize {
        self.config.environments.len()
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.transport.get(path)
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> Result<T, ClientError> {
        self.transport.post(path, body)
    }

    pub fn sense(&self, sensor: &str) -> Result<SensorFrame, ClientError> {
        self.get(&format!("/sense/{sensor}"))
    }

    /// Reads every declared sensor once.
    pub fn observe(&self) -> Result<Observations, ClientError> {
        self.sensors
            .iter()
            .map(|s| {
                self.sense(s)
                    .map(|frame| (s.clone(), frame))
                    .map_err(|e| ClientError::Observation {
                        sensor: s.clone(),
                        source: Box::new(e),
                    })
            })
            .collect()
    }

    pub fn act(&self, name: &str, value: Option<f64>) -> Result<ActionOutcome, ClientError> {
        if !self.actuators.iter().any(|a| a == name) {
            return Err(ClientError::UndeclaredActuator(name.to_string()));
        }
        let body = match value {
            Some(v) => json!({ "value": v }),
            None => json!({}),
        };
        self.post(&format!("/act/{name}"), body)
    }

    pub fn reset(&self) -> Result<(), ClientError> {
        self.transport.request("POST", "/robot/reset", Some(json!({}))).map(drop)
    }

    /// Moves to the next scene, returning its index.
    pub fn next_scene(&self) -> Result<usize, ClientError> {
        let v: Value = self.post("/robot/next_scene", json!({}))?;
        v.get("scene_index")
            .and_then(Value::as_u64)
            .map(|i| i as usize)
            .ok_or_else(|| ClientError::Protocol("next_scene: missing scene_index".into()))
    }

    pub fn is_collided(&self) -> Result<bool, ClientError> {
        self.get("/robot/is_collided")
    }

    pub fn is_finished(&self) -> Result<bool, ClientError> {
        self.get("/robot/is_finished")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub name: String,
    pub value: Option<f64>,
}

impl Action {
    pub fn new(name: impl Into<String>, value: Option<f64>) -> Self {
        Action {
            name: name.into(),
            value,
        }
    }

    pub fn move_next() -> Self {
        Action::new(crate::pool::topics::MOVE_NEXT, None)
    }

    pub fn next_scene() -> Self {
        Action::new(NEXT_SCENE_ACTION, None)
    }
}

/// A solution expressed as the three capabilities the runner drives.
///
/// The runner calls `is_done` once per observation, with the outcome of the
/// previous action (`None` at the start of each scene), then `pick_action`
/// while the agent is not done. `save_result` receives an empty results map
/// already carrying the task and environment details.
pub trait Agent {
    fn is_done(&mut self, observations: &Observations, last: Option<&ActionOutcome>) -> bool;

    fn pick_action(&mut self, observations: &Observations, actuators: &[String]) -> Result<Action, AgentError>;

    fn save_result(&mut self, path: &Path, results: ResultsFile) -> Result<(), AgentError>;

    /// Called after the runner moved the session to scene `scene_index`.
    fn scene_changed(&mut self, _scene_index: usize) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub observations: usize,
    pub actions: usize,
    pub scenes: usize,
}

/// Drives `agent` against the session behind `handle` and saves its results.
pub fn run_agent<A: Agent + ?Sized>(
    handle: &ClientHandle,
    agent: &mut A,
    results_path: &Path,
) -> Result<RunStats, ClientError> {
    let passive = handle.task().control == ControlMode::Passive;
    let scene_count = handle.scene_count().max(1);
    let mut scene = 0usize;
    let mut last: Option<ActionOutcome> = None;
    let mut stats = RunStats {
        scenes: 1,
        ..Default::default()
    };

    loop {
        let observations = handle.observe()?;
        stats.observations += 1;
        let done = agent.is_done(&observations, last.as_ref());
        let trajectory_done = last.is_some_and(|o| o.status == ActionStatus::FinishedTrajectory);
        if trajectory_done && scene + 1 < scene_count {
            scene = handle.next_scene()?;
            stats.scenes += 1;
            agent.scene_changed(scene);
            last = None;
            continue;
        }
        if done || (passive && trajectory_done) {
            break;
        }
        let action = agent
            .pick_action(&observations, handle.actuators())
            .map_err(|e| ClientError::Agent(e.to_string()))?;
        if action.name == NEXT_SCENE_ACTION {
            if scene + 1 >= scene_count {
                return Err(ClientError::Agent("requested next_scene on the last scene".into()));
            }
            scene = handle.next_scene()?;
            stats.scenes += 1;
            agent.scene_changed(scene);
            last = None;
            continue;
        }
        last = Some(handle.act(&action.name, action.value).map_err(|e| match e {
            ClientError::UndeclaredActuator(name) => {
                ClientError::Agent(format!("picked undeclared actuator `{name}`"))
            }
            other => other,
        })?);
        stats.actions += 1;
    }

    let prefilled = ResultsFile::prefilled(handle.config());
    agent
        .save_result(results_path, prefilled.clone())
        .map_err(|e| ClientError::Agent(format!("save_result: {e}")))?;
    let saved = ResultsFile::load(results_path)?;
    check_metadata(&saved, &prefilled)?;
    Ok(stats)
}

fn check_metadata(saved: &ResultsFile, expected: &ResultsFile) -> Result<(), ResultsError> {
    let mismatch = |field: &str| ResultsError::Invalid {
        field: field.to_string(),
        message: "differs from the session's configuration".into(),
    };
    if saved.task_details != expected.task_details {
        return Err(mismatch("task_details"));
    }
    if saved.environment_details != expected.environment_details {
        return Err(mismatch("environment_details"));
    }
    if saved.class_list != expected.class_list {
        return Err(mismatch("class_list"));
    }
    Ok(())
}

/// Connects using `TASKBENCH_ADDR` and runs `agent`, writing to
/// `TASKBENCH_RESULTS` (default `results.json`).
pub fn run_agent_from_env<A: Agent + ?Sized>(agent: &mut A) -> Result<RunStats, ClientError> {
    let handle = ClientHandle::connect(&addr_from_env())?;
    let results = std::env::var(RESULTS_ENV).unwrap_or_else(|_| "results.json".into());
    run_agent(&handle, agent, Path::new(&results))
}

/// A solution launched as an external command.
///
/// The command runs through `sh -c`; `{addr}` and `{results}` in the
/// template are substituted, and the same values are exported as
/// `TASKBENCH_ADDR` and `TASKBENCH_RESULTS`. Container runtimes are used by
/// passing their run command as the template.
#[derive(Debug, Clone)]
pub struct Submission {
    pub command: String,
    pub addr: String,
    pub results_path: PathBuf,
    pub extra_env: Vec<(String, String)>,
}

impl Submission {
    pub fn new(command: impl Into<String>, addr: impl Into<String>, results_path: impl Into<PathBuf>) -> Self {
        Submission {
            command: command.into(),
            addr: addr.into(),
            results_path: results_path.into(),
            extra_env: Vec::new(),
        }
    }

    pub fn env(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.extra_env.push((key.into(), value.into()));
        self
    }

    pub fn rendered_command(&self) -> String {
        self.command
            .replace("{addr}", &self.addr)
            .replace("{results}", &self.results_path.display().to_string())
    }

    /// Runs the command to completion and returns the validated results.
    pub fn run(&self) -> Result<ResultsFile, ClientError> {
        if self.results_path.exists() {
            std::fs::remove_file(&self.results_path).map_err(ClientError::Launch)?;
        }
        if let Some(dir) = self.results_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(ClientError::Launch)?;
        }
        let status = Command::new("sh")
            .arg("-c")
            .arg(self.rendered_command())
            .env(ADDR_ENV, &self.addr)
            .env(RESULTS_ENV, &self.results_path)
            .envs(self.extra_env.iter().map(|(k, v)| (k, v)))
            .status()
            .map_err(ClientError::Launch)?;
        if !status.success() {
            return Err(ClientError::SubmissionFailed { code: status.code() });
        }
        Ok(ResultsFile::load(&self.results_path)?)
    }
}

/// Launches `command` against the supervisor at `addr`.
pub fn run_submission(command: &str, addr: &str, results_path: &Path) -> Result<ResultsFile, ClientError> {
    Submission::new(command, addr, results_path).run()
}
