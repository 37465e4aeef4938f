mod common;

use common::{config, request, serve};
use proptest::prelude::*;
use serde_json::{json, Value};
use std::sync::{Arc, Barrier};
use std::time::Duration;
use taskbench::supervisor::{ServeOptions, Supervisor, SupervisorError, PROTOCOL_VERSION};

fn call(sup: &Supervisor, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
    let text = body.map(|b| b.to_string());
    let (status, raw) = request(&sup.addr().to_string(), method, path, text.as_deref());
    (status, serde_json::from_str(&raw).unwrap_or_else(|e| panic!("{path}: non-JSON body {raw:?}: {e}")))
}

fn error_code(body: &Value) -> &str {
    body["error"]["code"].as_str().unwrap_or_else(|| panic!("not an error envelope: {body}"))
}

#[test]
fn health_config_and_connections() {
    let sup = serve("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0);
    assert_eq!(call(&sup, "GET", "/status/health", None), (200, json!({"result": "ok"})));

    let (status, body) = call(&sup, "GET", "/config", None);
    assert_eq!(status, 200);
    let cfg = &body["result"];
    assert_eq!(cfg["protocol_version"], PROTOCOL_VERSION);
    assert_eq!(cfg["scene_count"], 1);
    assert_eq!(cfg["seed"], 0);
    assert_eq!(cfg["task"]["name"], "semantic_slam:active:ground_truth");
    let envs = cfg["environments"].as_array().unwrap();
    assert_eq!(envs.len(), 1);
    assert!(envs[0].get("objects").is_none());
    assert_eq!(envs[0]["class_list"][0], "chair");

    let (status, task) = call(&sup, "GET", "/config/task", None);
    assert_eq!(status, 200);
    assert_eq!(task["result"], cfg["task"]);
    let (_, envs_only) = call(&sup, "GET", "/config/environments", None);
    assert!(envs_only["result"][0].get("objects").is_none());
    let (status, body) = call(&sup, "GET", "/config/nope", None);
    assert_eq!((status, error_code(&body)), (404, "NotFound"));

    let (_, conns) = call(&sup, "GET", "/connections", None);
    assert_eq!(
        conns["result"],
        json!({"sensors": ["pose", "laser", "object_glimpse"], "actuators": ["move_distance", "rotate_angle"]})
    );
}

#[test]
fn scd_config_reports_two_scenes() {
    let sup = serve("scd:passive:ground_truth", "sim_bot", &["house:1", "house:2"], 0);
    let (_, scenes) = call(&sup, "GET", "/config/scene_count", None);
    assert_eq!(scenes["result"], 2);
    let (_, conns) = call(&sup, "GET", "/connections", None);
    assert_eq!(conns["result"]["actuators"], json!(["move_next"]));
}

#[test]
fn sense_and_act() {
    let sup = serve("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0);
    let (status, pose) = call(&sup, "GET", "/sense/pose", None);
    assert_eq!(status, 200);
    assert_eq!(pose["result"], json!({"kind": "pose", "pose": {"x": 1.0, "y": 2.0, "yaw": 0.0}}));
    let (_, again) = call(&sup, "GET", "/sense/pose", None);
    assert_eq!(pose, again);

    let (status, laser) = call(&sup, "GET", "/sense/laser", None);
    assert_eq!(status, 200);
    assert_eq!(laser["result"]["laser"].as_array().unwrap().len(), 31);

    let (status, body) = call(&sup, "GET", "/sense/move_distance", None);
    assert_eq!((status, error_code(&body)), (400, "WrongChannel"));
    let (status, body) = call(&sup, "GET", "/sense/camera", None);
    assert_eq!((status, error_code(&body)), (404, "NotFound"));

    let (status, out) = call(&sup, "POST", "/act/move_distance", Some(json!({"value": 1.0})));
    assert_eq!(status, 200);
    assert_eq!(out["result"]["status"], "completed");
    assert_eq!(out["result"]["distance_travelled"], 1.0);
    let (_, pose) = call(&sup, "GET", "/sense/pose", None);
    assert_eq!(pose["result"]["pose"]["x"], 2.0);

    let (status, body) = call(&sup, "POST", "/act/move_next", None);
    assert_eq!((status, error_code(&body)), (400, "ModeViolation"));
    let (status, body) = call(&sup, "POST", "/act/pose", Some(json!({"value": 1.0})));
    assert_eq!((status, error_code(&body)), (400, "WrongChannel"));
    let (status, body) = call(&sup, "POST", "/act/jump", Some(json!({"value": 1.0})));
    assert_eq!((status, error_code(&body)), (404, "NotFound"));
    let (status, body) = call(&sup, "POST", "/act/move_distance", Some(json!({"value": "far"})));
    assert_eq!((status, error_code(&body)), (400, "BadRequest"));
    let (status, body) = request(&sup.addr().to_string(), "POST", "/act/move_distance", Some("{not json"));
    assert_eq!(status, 400);
    assert_eq!(error_code(&serde_json::from_str(&body).unwrap()), "BadRequest");
    let (status, body) = call(&sup, "POST", "/act/move_distance", Some(json!({"value": 1e9})));
    assert_eq!((status, error_code(&body)), (400, "InvalidCommand"));
    let (status, body) = call(&sup, "POST", "/act/move_distance", Some(json!({})));
    assert_eq!((status, error_code(&body)), (400, "InvalidCommand"));

    let (status, _) = call(&sup, "POST", "/robot/reset", None);
    assert_eq!(status, 200);
    let (_, pose) = call(&sup, "GET", "/sense/pose", None);
    assert_eq!(pose["result"]["pose"]["x"], 1.0);

    let (status, body) = call(&sup, "POST", "/robot/next_scene", None);
    assert_eq!((status, error_code(&body)), (400, "SingleScene"));
    let (status, body) = call(&sup, "GET", "/act/move_distance", None);
    assert_eq!((status, error_code(&body)), (405, "MethodNotAllowed"));
    let (status, body) = call(&sup, "GET", "/nowhere", None);
    assert_eq!((status, error_code(&body)), (404, "NotFound"));
}

#[test]
fn passive_session_lifecycle() {
    let sup = serve("scd:passive:ground_truth", "sim_bot", &["house:1", "house:2"], 0);
    let steps = sup.config().environments[0].trajectory.len();
    assert_eq!(call(&sup, "GET", "/robot/is_finished", None).1["result"], false);
    for i in 0..steps {
        let (status, out) = call(&sup, "POST", "/act/move_next", None);
        assert_eq!(status, 200);
        let expected = if i + 1 == steps { "finished_trajectory" } else { "completed" };
        assert_eq!(out["result"]["status"], expected);
    }
    assert_eq!(call(&sup, "GET", "/robot/is_finished", None).1["result"], true);
    assert_eq!(call(&sup, "GET", "/robot/is_collided", None).1["result"], false);
    let (status, body) = call(&sup, "POST", "/act/move_next", None);
    assert_eq!((status, error_code(&body)), (410, "SessionFinished"));

    let (status, body) = call(&sup, "POST", "/robot/next_scene", None);
    assert_eq!((status, &body["result"]), (200, &json!({"scene_index": 1})));
    assert_eq!(call(&sup, "GET", "/robot/is_finished", None).1["result"], false);
    let (status, body) = call(&sup, "POST", "/robot/next_scene", None);
    assert_eq!((status, error_code(&body)), (409, "NoMoreScenes"));
    let (_, reset) = call(&sup, "POST", "/robot/reset", None);
    assert_eq!(reset["result"]["scene_index"], 1);
}

#[test]
fn second_bind_on_same_port_fails() {
    let first = serve("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0);
    let again = Supervisor::serve(
        config("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0),
        first.addr().to_string().as_str(),
    );
    assert!(matches!(again, Err(SupervisorError::AddrInUse(_))));
}

#[test]
fn real_robot_is_not_served() {
    let mut cfg = config("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0);
    cfg.robot = common::pools().robot("real_bot").unwrap().clone();
    assert!(matches!(
        Supervisor::serve(cfg, "127.0.0.1:0"),
        Err(SupervisorError::Unsupported(_))
    ));
}

#[test]
fn concurrent_acts_get_exactly_one_busy() {
    let sup = Supervisor::serve_with(
        config("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0),
        "127.0.0.1:0",
        ServeOptions { workers: 4, act_latency: Duration::from_millis(400) },
    )
    .unwrap();
    let addr = sup.addr().to_string();
    let barrier = Arc::new(Barrier::new(2));
    let handles: Vec<_> = (0..2)
        .map(|_| {
            let addr = addr.clone();
            let barrier = Arc::clone(&barrier);
            std::thread::spawn(move || {
                barrier.wait();
                request(&addr, "POST", "/act/move_distance", Some(r#"{"value": 0.5}"#))
            })
        })
        .collect();
    let mut statuses: Vec<u16> = handles.into_iter().map(|h| h.join().unwrap().0).collect();
    statuses.sort();
    assert_eq!(statuses, [200, 409]);
    // Exactly one mutation landed.
    let (_, pose) = call(&sup, "GET", "/sense/pose", None);
    assert_eq!(pose["result"]["pose"]["x"], 1.5);
}

fn script(sup: &Supervisor) -> Vec<(u16, Value)> {
    let steps: [(&str, &str, Option<Value>); 10] = [
        ("GET", "/config", None),
        ("GET", "/sense/pose", None),
        ("GET", "/sense/object_glimpse", None),
        ("POST", "/act/move_distance", Some(json!({"value": 1.3}))),
        ("POST", "/act/rotate_angle", Some(json!({"value": 0.7}))),
        ("GET", "/sense/pose", None),
        ("GET", "/sense/laser", None),
        ("GET", "/sense/object_glimpse", None),
        ("POST", "/robot/reset", None),
        ("GET", "/sense/object_glimpse", None),
    ];
    steps.into_iter().map(|(m, p, b)| call(sup, m, p, b)).collect()
}

#[test]
fn same_config_and_seed_give_same_payloads() {
    let a = serve("semantic_slam:active:noisy", "carter", &["house:1"], 5);
    let b = serve("semantic_slam:active:noisy", "carter", &["house:1"], 5);
    assert_eq!(script(&a), script(&b));
}

#[test]
fn glimpse_noise_redraws_between_reads() {
    let sup = serve("semantic_slam:active:noisy", "carter", &["house:1"], 5);
    let (_, first) = call(&sup, "GET", "/sense/object_glimpse", None);
    let (_, second) = call(&sup, "GET", "/sense/object_glimpse", None);
    assert!(!first["result"]["glimpses"].as_array().unwrap().is_empty());
    assert_ne!(first, second);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_route_answers_with_an_envelope(
        method in prop::sample::select(vec!["GET", "POST", "PUT", "DELETE"]),
        head in prop::sample::select(vec!["status", "config", "connections", "sense", "act", "robot", "x", ""]),
        tail in "[a-z_]{0,12}",
        extra in proptest::option::of("[a-z]{1,4}"),
        body in prop::sample::select(vec!["", "{}", "{\"value\": 0.1}", "[1]", "nul", "{\"value\": null}"]),
    ) {
        let sup = shared_supervisor();
        let mut path = format!("/{head}/{tail}");
        if let Some(e) = extra {
            path.push('/');
            path.push_str(&e);
        }
        let reply = sup.handle(method, &path, body.as_bytes());
        let obj = reply.body.as_object().expect("object body");
        prop_assert_eq!(obj.len(), 1);
        if reply.status == 200 {
            prop_assert!(obj.contains_key("result"));
        } else {
            prop_assert!((400..600).contains(&reply.status));
            let err = &obj["error"];
            prop_assert!(err["code"].is_string());
            prop_assert!(err["message"].is_string());
        }
    }
}

fn shared_supervisor() -> &'static Supervisor {
    static SUP: std::sync::OnceLock<Supervisor> = std::sync::OnceLock::new();
    SUP.get_or_init(|| serve("scd:active:ground_truth", "sim_bot", &["house:1", "house:2"], 0))
}
