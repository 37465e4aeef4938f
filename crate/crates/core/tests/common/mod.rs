#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use taskbench::geometry::{clearance, Bounds, Pose, Segment};
use taskbench::pool::{Channel, Connection, EnvironmentDef, PlatformKind, Pools, ResolvedConfig, RobotDef, SimParams};
use taskbench::supervisor::Supervisor;

pub const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");
pub const BIN: &str = env!("CARGO_BIN_EXE_taskbench");

pub fn pools() -> Pools {
    Pools::load(POOLS).expect("bundled pools load")
}

pub fn config(task: &str, robot: &str, envs: &[&str], seed: u64) -> ResolvedConfig {
    pools().validate_selection(task, robot, envs, seed).expect("valid selection")
}

pub fn serve(task: &str, robot: &str, envs: &[&str], seed: u64) -> Supervisor {
    Supervisor::serve(config(task, robot, envs, seed), "127.0.0.1:0").expect("ephemeral port binds")
}

/// Command line that runs a bundled agent through the binary.
pub fn agent_command(name: &str) -> String {
    format!("'{BIN}' agent {name}")
}

pub fn sim_robot(radius: f64, glimpse_sigma: f64) -> RobotDef {
    let mut connections = BTreeMap::new();
    for (name, channel) in [
        ("pose", Channel::Sensor),
        ("laser", Channel::Sensor),
        ("object_glimpse", Channel::Sensor),
        ("move_distance", Channel::Actuator),
        ("rotate_angle", Channel::Actuator),
        ("move_next", Channel::Actuator),
    ] {
        connections.insert(
            name.to_string(),
            Connection { channel, backend_topic: name.to_string() },
        );
    }
    RobotDef {
        name: "fuzz_bot".into(),
        kind: PlatformKind::Sim,
        connections,
        radius,
        sim: SimParams { glimpse_sigma, ..SimParams::default() },
    }
}

fn free_pose(rng: &mut ChaCha8Rng, walls: &[Segment], radius: f64) -> Pose {
    loop {
        let p = [rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)];
        if clearance(walls, p) >= radius + 0.05 {
            return Pose::new(p[0], p[1], rng.gen_range(-3.1..3.1));
        }
    }
}

/// A 10 m x 10 m walled room with random interior walls and a trajectory
/// of free poses.
pub fn random_walled_env(seed: u64, radius: f64) -> EnvironmentDef {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corner = |x: f64, y: f64| [x, y];
    let mut walls = vec![
        Segment { a: corner(0.0, 0.0), b: corner(10.0, 0.0) },
        Segment { a: corner(10.0, 0.0), b: corner(10.0, 10.0) },
        Segment { a: corner(10.0, 10.0), b: corner(0.0, 10.0) },
        Segment { a: corner(0.0, 10.0), b: corner(0.0, 0.0) },
    ];
    for _ in 0..rng.gen_range(2..8) {
        walls.push(Segment {
            a: [rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)],
            b: [rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)],
        });
    }
    let start_pose = free_pose(&mut rng, &walls, radius);
    let trajectory = (0..rng.gen_range(1..6)).map(|_| free_pose(&mut rng, &walls, radius)).collect();
    EnvironmentDef {
        name: format!("fuzz{seed}"),
        variant: 1,
        kind: PlatformKind::Sim,
        bounds: Bounds { min: [0.0, 0.0], max: [10.0, 10.0] },
        walls,
        start_pose,
        trajectory,
        objects: Vec::new(),
        class_list: vec!["thing".into()],
        metadata: BTreeMap::new(),
    }
}

/// Sends one request and returns the status with the raw body.
pub fn request(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let url = format!("http://{addr}{path}");
    let req = ureq::request(method, &url);
    let res = match body {
        Some(b) => req.set("Content-Type", "application/json").send_string(b),
        None => req.call(),
    };
    match res {
        Ok(r) => (r.status(), r.into_string().unwrap()),
        Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
        Err(e) => panic!("{method} {path}: {e}"),
    }
}

/// Exact point-to-segment distance, written independently of the library.
pub fn point_segment_distance(p: [f64; 2], s: &Segment) -> f64 {
    let (dx, dy) = (s.b[0] - s.a[0], s.b[1] - s.a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - s.a[0]) * dx + (p[1] - s.a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (s.a[0] + t * dx, s.a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}
