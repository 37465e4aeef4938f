//! HTTP supervisor owning one simulated session.
//!
//! Every response body is a JSON envelope, `{"result": ...}` on success and
//! `{"error": {"code": ..., "message": ...}}` otherwise. Endpoints:
//!
//! | method | path                   |
//! |--------|------------------------|
//! | GET    | `/status/health`       |
//! | GET    | `/config`              |
//! | GET    | `/config/<key>`        |
//! | GET    | `/connections`         |
//! | GET    | `/sense/<name>`        |
//! | POST   | `/act/<name>`          |
//! | POST   | `/robot/reset`         |
//! | POST   | `/robot/next_scene`    |
//! | GET    | `/robot/is_collided`   |
//! | GET    | `/robot/is_finished`   |
//!
//! Ground-truth objects are stripped from every configuration payload.
//! State-changing requests (acts, reset, scene changes) are serialized: while
//! one is running, others are refused with `409 Busy`.

use crate::pool::{Channel, PlatformKind, ResolvedConfig};
use crate::sim::{MotionCommand, MotionKind, SimError, World};
use serde_json::{json, Value};
use std::io::Read;
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime};
use thiserror::Error;

pub const PROTOCOL_VERSION: &str = "1";
pub const DEFAULT_ADDR: &str = "127.0.0.1:10000";
const MAX_BODY_BYTES: u64 = 64 * 1024;

#[derive(Debug, Error)]
pub enum SupervisorError {
    #[error("address {0} is already in use")]
    AddrInUse(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub workers: usize,
    /// Extra time each act holds the robot, emulating actuation time.
    pub act_latency: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            act_latency: Duration::ZERO,
        }
    }
}

struct Session {
    world: World,
    scene_index: usize,
}

struct Shared {
    config: Arc<ResolvedConfig>,
    config_payload: Value,
    connections_payload: Value,
    session: Mutex<Session>,
    action_in_flight: AtomicBool,
    act_latency: Duration,
    started_at: SystemTime,
}

/// A request outcome before it is written to the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub body: Value,
}

impl Reply {
    fn ok(result: Value) -> Self {
        Reply {
            status: 200,
            body: json!({ "result": result }),
        }
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        Reply {
            status,
            body: json!({ "error": { "code": code, "message": message.into() } }),
        }
    }
}

fn sim_error_reply(err: SimError) -> Reply {
    let message = err.to_string();
    match err {
        SimError::NotFound(_) => Reply::error(404, "NotFound", message),
        SimError::WrongChannel { .. } => Reply::error(400, "WrongChannel", message),
        SimError::ModeViolation { .. } => Reply::error(400, "ModeViolation", message),
        SimError::InvalidCommand(_) => Reply::error(400, "InvalidCommand", message),
        SimError::SessionFinished => Reply::error(410, "SessionFinished", message),
        SimError::VariantMismatch { .. } | SimError::InvalidEnvironment(_) => {
            Reply::error(500, "Internal", message)
        }
    }
}

/// The configuration as served: objects removed, protocol version added.
pub fn redacted_config(config: &ResolvedConfig) -> Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(envs) = value.get_mut("environments").and_then(Value::as_array_mut) {
        for env in envs {
            if let Some(obj) = env.as_object_mut() {
                obj.remove("objects");
            }
        }
    }
    let obj = value.as_object_mut().expect("config is an object");
    obj.insert("protocol_version".into(), json!(PROTOCOL_VERSION));
    obj.insert("scene_count".into(), json!(config.scene_count()));
    value
}

struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl Shared {
    fn new(config: ResolvedConfig, opts: &ServeOptions) -> Result<Self, SupervisorError> {
        if config.robot.kind != PlatformKind::Sim {
            return Err(SupervisorError::Unsupported(format!(
                "robot `{}` is a real platform; only simulated sessions can be served",
                config.robot.name
            )));
        }
        let env = config
            .environments
            .first()
            .cloned()
            .ok_or_else(|| SupervisorError::Unsupported("configuration has no environments".into()))?;
        let world = World::new(env, config.robot.clone(), config.task.name.localisation, config.seed)?;
        let config_payload = redacted_config(&config);
        let connections_payload = json!({
            "sensors": config.task.observations,
            "actuators": config.task.actions,
        });
        Ok(Shared {
            config: Arc::new(config),
            config_payload,
            connections_payload,
            session: Mutex::new(Session { world, scene_index: 0 }),
            action_in_flight: AtomicBool::new(false),
            act_latency: opts.act_latency,
            started_at: SystemTime::now(),
        })
    }

    fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn begin_mutation(&self) -> Option<BusyGuard<'_>> {
        self.action_in_flight
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .ok()
            .map(|_| BusyGuard(&self.action_in_flight))
    }

    fn is_task_sensor(&self, name: &str) -> bool {
        self.config.task.observations.iter().any(|o| o == name)
    }

    fn is_task_actuator(&self, name: &str) -> bool {
        self.config.task.actions.iter().any(|a| a == name)
    }

    fn handle(&self, method: &str, path: &str, body: &[u8]) -> Reply {
        let path = path.split('?').next().unwrap_or_default();
        let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
        let expects = |wanted: &str, reply: &dyn Fn() -> Reply| {
            if method == wanted {
                reply()
            } else {
                Reply::error(405, "MethodNotAllowed", format!("{path} only supports {wanted}"))
            }
        };
        match segments.as_slice() {
            ["status", "health"] => expects("GET", &|| Reply::ok(json!("ok"))),
            ["config"] => expects("GET", &|| Reply::ok(self.config_payload.clone())),
            ["config", key] => expects("GET", &|| match self.config_payload.get(*key) {
                Some(v) => Reply::ok(v.clone()),
                None => Reply::error(404, "NotFound", format!("no configuration key `{key}`")),
            }),
            ["connections"] => expects("GET", &|| Reply::ok(self.connections_payload.clone())),
            ["sense", name] => expects("GET", &|| self.sense(name)),
            ["act", name] => expects("POST", &|| self.act(name, body)),
            ["robot", "reset"] => expects("POST", &|| self.reset()),
            ["robot", "next_scene"] => expects("POST", &|| self.next_scene()),
            ["robot", "is_collided"] => expects("GET", &|| Reply::ok(json!(self.session().world.collided()))),
            ["robot", "is_finished"] => expects("GET", &|| Reply::ok(json!(self.session().world.finished()))),
            _ => Reply::error(404, "NotFound", format!("no endpoint {method} {path}")),
        }
    }

    fn sense(&self, name: &str) -> Reply {
        if self.is_task_actuator(name) {
            return Reply::error(400, "WrongChannel", format!("`{name}` is an actuator"));
        }
        if !self.is_task_sensor(name) {
            return Reply::error(404, "NotFound", format!("no sensor `{name}` in this task"));
        }
        match self.session().world.sense(name) {
            Ok(frame) => Reply::ok(serde_json::to_value(frame).expect("frame serializes")),
            Err(e) => sim_error_reply(e),
        }
    }

    fn act(&self, name: &str, body: &[u8]) -> Reply {
        if self.is_task_sensor(name) {
            return Reply::error(400, "WrongChannel", format!("`{name}` is a sensor"));
        }
        if !self.is_task_actuator(name) {
            let known_actuator = MotionKind::from_topic(name).is_some()
                || self
                    .config
                    .robot
                    .connection(name)
                    .is_some_and(|c| c.channel == Channel::Actuator);
            return if known_actuator {
                Reply::error(
                    400,
                    "ModeViolation",
                    format!("`{name}` is not available to task `{}`", self.config.task.name),
                )
            } else {
                Reply::error(404, "NotFound", format!("no actuator `{name}` in this task"))
            };
        }
        let kind = match self
            .config
            .robot
            .connection(name)
            .and_then(|c| MotionKind::from_topic(&c.backend_topic))
        {
            Some(kind) => kind,
            None => return Reply::error(404, "NotFound", format!("actuator `{name}` has no backend")),
        };
        let value = if body.iter().all(u8::is_ascii_whitespace) {
            None
        } else {
            match serde_json::from_slice::<Value>(body) {
                Ok(Value::Object(map)) => match map.get("value") {
                    None | Some(Value::Null) => None,
                    Some(Value::Number(n)) => n.as_f64(),
                    Some(other) => {
                        return Reply::error(400, "BadRequest", format!("`value` must be a number, got {other}"))
                    }
                },
                Ok(_) => return Reply::error(400, "BadRequest", "body must be a JSON object"),
                Err(e) => return Reply::error(400, "BadRequest", format!("malformed JSON body: {e}")),
            }
        };
        let Some(_guard) = self.begin_mutation() else {
            return Reply::error(409, "Busy", "another action is in flight");
        };
        let mut session = self.session();
        if !self.act_latency.is_zero() {
            std::thread::sleep(self.act_latency);
        }
        match session
            .world
            .step(MotionCommand { kind, value }, self.config.task.name.control)
        {
            Ok(outcome) => Reply::ok(serde_json::to_value(outcome).expect("outcome serializes")),
            Err(e) => sim_error_reply(e),
        }
    }

    fn reset(&self) -> Reply {
        let Some(_guard) = self.begin_mutation() else {
            return Reply::error(409, "Busy", "another action is in flight");
        };
        let mut session = self.session();
        session.world.reset();
        Reply::ok(json!({ "scene_index": session.scene_index }))
    }

    fn next_scene(&self) -> Reply {
        let scene_count = self.config.scene_count();
        if scene_count <= 1 {
            return Reply::error(
                400,
                "SingleScene",
                format!("task `{}` has a single scene", self.config.task.name),
            );
        }
        let Some(_guard) = self.begin_mutation() else {
            return Reply::error(409, "Busy", "another action is in flight");
        };
        let mut session = self.session();
        let next = session.scene_index + 1;
        if next >= scene_count {
            return Reply::error(409, "NoMoreScenes", "already on the last scene");
        }
        match session.world.apply_variant(self.config.environments[next].clone()) {
            Ok(()) => {
                session.scene_index = next;
                Reply::ok(json!({ "scene_index": next }))
            }
            Err(e) => sim_error_reply(e),
        }
    }
}

/// In-process handle to a running supervisor. Dropping it stops the service.
pub struct Supervisor {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
}

impl Supervisor {
    pub fn serve(config: ResolvedConfig, addr: impl ToSocketAddrs + std::fmt::Display) -> Result<Self, SupervisorError> {
        Self::serve_with(config, addr, ServeOptions::default())
    }

    pub fn serve_with(
        config: ResolvedConfig,
        addr: impl ToSocketAddrs + std::fmt::Display,
        opts: ServeOptions,
    ) -> Result<Self, SupervisorError> {
        let shared = Arc::new(Shared::new(config, &opts)?);
        let listener = TcpListener::bind(&addr).map_err(|source| {
            if source.kind() == std::io::ErrorKind::AddrInUse {
                SupervisorError::AddrInUse(addr.to_string())
            } else {
                SupervisorError::Bind {
                    addr: addr.to_string(),
                    source,
                }
            }
        })?;
        let bound = listener.local_addr().map_err(|source| SupervisorError::Bind {
            addr: addr.to_string(),
            source,
        })?;
        let server = Arc::new(
            tiny_http::Server::from_listener(listener, None).map_err(|e| SupervisorError::Bind {
                addr: addr.to_string(),
                source: std::io::Error::other(e.to_string()),
            })?,
        );
        let workers = (0..opts.workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let shared = Arc::clone(&shared);
                std::thread::spawn(move || worker_loop(&server, &shared))
            })
            .collect();
        Ok(Supervisor {
            server,
            addr: bound,
            shared,
            workers,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn config(&self) -> &ResolvedConfig {
        &self.shared.config
    }

    pub fn started_at(&self) -> SystemTime {
        self.shared.started_at
    }

    /// Answers a request without going through HTTP.
    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Reply {
        self.shared.handle(method, path, body)
    }

    /// Serves until the process is terminated.
    pub fn wait(mut self) {
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for Supervisor {
    fn drop(&mut self) {
        self.stop();
    }
}

fn worker_loop(server: &tiny_http::Server, shared: &Shared) {
    loop {
        let mut request = match server.recv() {
            Ok(request) => request,
            Err(_) => break,
        };
        let mut body = Vec::new();
        let reply = match request
            .as_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
        {
            Ok(_) => shared.handle(request.method().as_str(), request.url(), &body),
            Err(e) => Reply::error(400, "BadRequest", format!("cannot read body: {e}")),
        };
        let bytes = serde_json::to_vec(&reply.body).expect("reply serializes");
        let response = tiny_http::Response::from_data(bytes)
            .with_status_code(reply.status)
            .with_header(
                tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                    .expect("static header"),
            );
        let _ = request.respond(response);
    }
}
