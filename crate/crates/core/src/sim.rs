//! Deterministic 2.5D simulated robot.
//!
//! Motion is planar. Walls are 2D segments and objects carry 3D boxes.
//! The controller truncates motion before it would bring the robot closer
//! than `radius + safety_margin` to a wall, so the true pose never collides.
//! All randomness (odometry drift, glimpse noise) comes from a ChaCha
//! generator seeded per session.

use crate::geometry::{clearance, normalize_angle, Pose};
use crate::pool::{topics, Channel, ControlMode, EnvironmentDef, Localisation, RobotDef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Slack for floating-point comparisons against clearance thresholds.
const CLEARANCE_EPS: f64 = 1e-9;
const MAX_COMMAND_MAGNITUDE: f64 = 100.0;

/// Odometry drift: standard deviation per meter travelled and per radian turned.
pub const ODOM_SIGMA_PER_METER: f64 = 0.01;
pub const ODOM_SIGMA_PER_RADIAN: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    MoveDistance,
    RotateAngle,
    MoveNext,
}

impl MotionKind {
    pub fn from_topic(topic: &str) -> Option<Self> {
        match topic {
            topics::MOVE_DISTANCE => Some(MotionKind::MoveDistance),
            topics::ROTATE_ANGLE => Some(MotionKind::RotateAngle),
            topics::MOVE_NEXT => Some(MotionKind::MoveNext),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotionKind::MoveDistance => topics::MOVE_DISTANCE,
            MotionKind::RotateAngle => topics::ROTATE_ANGLE,
            MotionKind::MoveNext => topics::MOVE_NEXT,
        }
    }

    pub fn allowed_in(self, mode: ControlMode) -> bool {
        match mode {
            ControlMode::Active => self != MotionKind::MoveNext,
            ControlMode::Passive => self == MotionKind::MoveNext,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionCommand {
    pub kind: MotionKind,
    /// Meters for `move_distance`, radians for `rotate_angle`, unused by `move_next`.
    pub value: Option<f64>,
}

impl MotionCommand {
    pub fn move_distance(meters: f64) -> Self {
        Self { kind: MotionKind::MoveDistance, value: Some(meters) }
    }

    pub fn rotate_angle(radians: f64) -> Self {
        Self { kind: MotionKind::RotateAngle, value: Some(radians) }
    }

    pub fn move_next() -> Self {
        Self { kind: MotionKind::MoveNext, value: None }
    }

    fn checked_value(&self) -> Result<f64, SimError> {
        match self.value {
            Some(v) if v.is_finite() && v.abs() <= MAX_COMMAND_MAGNITUDE => Ok(v),
            Some(v) => Err(SimError::InvalidCommand(format!(
                "{} value {v} must be finite with magnitude <= {MAX_COMMAND_MAGNITUDE}",
                self.kind.as_str()
            ))),
            None => Err(SimError::InvalidCommand(format!("{} requires a value", self.kind.as_str()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionStatus {
    Completed,
    Obstructed,
    FinishedTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub status: ActionStatus,
    pub distance_travelled: f64,
    pub angle_turned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glimpse {
    pub class: String,
    pub centroid: [f64; 3],
    pub extent: [f64; 3],
    pub range: f64,
}

/// One sensor reading, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorFrame {
    Pose { pose: Pose },
    /// `(angle relative to heading, range)` pairs.
    Laser { laser: Vec<[f64; 2]> },
    ObjectGlimpse { glimpses: Vec<Glimpse> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("`{action}` is not permitted in {mode} control mode")]
    ModeViolation { action: String, mode: &'static str },
    #[error("the session has finished its trajectory")]
    SessionFinished,
    #[error("unknown connection `{0}`")]
    NotFound(String),
    #[error("connection `{name}` is a {channel}, not a {expected}")]
    WrongChannel {
        name: String,
        channel: Channel,
        expected: Channel,
    },
    #[error("variant `{got}` does not belong to environment `{expected}`")]
    VariantMismatch { expected: String, got: String },
}

/// Simulator truth for one running environment.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    env: EnvironmentDef,
    robot: RobotDef,
    localisation: Localisation,
    seed: u64,
    pose_true: Pose,
    pose_odom: Pose,
    trajectory_cursor: usize,
    collided: bool,
    finished: bool,
    step_count: u64,
    rng: ChaCha8Rng,
}

/// Serializable snapshot: the environment definition plus runtime fields.
#[derive(Debug, Clone, Serialize)]
pub struct WorldDump<'a> {
    #[serde(flatten)]
    pub env: &'a EnvironmentDef,
    pub robot: &'a str,
    pub localisation: Localisation,
    pub seed: u64,
    pub pose_true: Pose,
    pub pose_odom: Pose,
    pub trajectory_cursor: usize,
    pub collided: bool,
    pub finished: bool,
    pub step_count: u64,
}

fn check_start(env: &EnvironmentDef, robot: &RobotDef) -> Result<(), SimError> {
    let d = clearance(&env.walls, env.start_pose.position());
    if d < robot.radius {
        return Err(SimError::InvalidEnvironment(format!(
            "start pose of `{}` is {d:.3} m from a wall, robot radius is {} m",
            env.id(),
            robot.radius
        )));
    }
    Ok(())
}

impl World {
    pub fn new(env: EnvironmentDef, robot: RobotDef, localisation: Localisation, seed: u64) -> Result<Self, SimError> {
        check_start(&env, &robot)?;
        if robot.sim.substep >= robot.radius + robot.sim.safety_margin {
            return Err(SimError::InvalidEnvironment(format!(
                "substep {} must be smaller than radius plus margin",
                robot.sim.substep
            )));
        }
        let start = env.start_pose;
        Ok(World {
            env,
            robot,
            localisation,
            seed,
            pose_true: start,
            pose_odom: start,
            trajectory_cursor: 0,
            collided: false,
            finished: false,
            step_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn env(&self) -> &EnvironmentDef {
        &self.env
    }

    pub fn robot(&self) -> &RobotDef {
        &self.robot
    }

    pub fn pose_true(&self) -> Pose {
        self.pose_true
    }

    pub fn pose_odom(&self) -> Pose {
        self.pose_odom
    }

    pub fn trajectory_cursor(&self) -> usize {
        self.trajectory_cursor
    }

    pub fn collided(&self) -> bool {
        self.collided
    }

    pub fn finished(&self) -> bool {
        self.finished
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn dump(&self) -> WorldDump<'_> {
        WorldDump {
            env: &self.env,
            robot: &self.robot.name,
            localisation: self.localisation,
            seed: self.seed,
            pose_true: self.pose_true,
            pose_odom: self.pose_odom,
            trajectory_cursor: self.trajectory_cursor,
            collided: self.collided,
            finished: self.finished,
            step_count: self.step_count,
        }
    }

    /// Debug dump as YAML.
    pub fn dump_yaml(&self) -> String {
        serde_yaml::to_string(&self.dump()).expect("world dump is always serializable")
    }

    /// Back to the start pose with a freshly seeded generator.
    pub fn reset(&mut self) {
        let start = self.env.start_pose;
        self.pose_true = start;
        self.pose_odom = start;
        self.trajectory_cursor = 0;
        self.collided = false;
        self.finished = false;
        self.step_count = 0;
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    /// Swaps in another variant of the same environment. The generator state carries over.
    pub fn apply_variant(&mut self, variant: EnvironmentDef) -> Result<(), SimError> {
        if variant.name != self.env.name {
            return Err(SimError::VariantMismatch {
                expected: self.env.name.clone(),
                got: variant.id(),
            });
        }
        check_start(&variant, &self.robot)?;
        self.env = variant;
        let start = self.env.start_pose;
        self.pose_true = start;
        self.pose_odom = start;
        self.trajectory_cursor = 0;
        self.collided = false;
        self.finished = false;
        self.step_count = 0;
        Ok(())
    }

    fn required_clearance(&self) -> f64 {
        self.robot.radius + self.robot.sim.safety_margin
    }

    /// Executes one motion command.
    pub fn step(&mut self, cmd: MotionCommand, mode: ControlMode) -> Result<ActionOutcome, SimError> {
        if !cmd.kind.allowed_in(mode) {
            return Err(SimError::ModeViolation {
                action: cmd.kind.as_str().to_string(),
                mode: mode.as_str(),
            });
        }
        if self.finished {
            return Err(SimError::SessionFinished);
        }
        let before = self.pose_true;
        let outcome = match cmd.kind {
            MotionKind::MoveDistance => self.move_distance(cmd.checked_value()?),
            MotionKind::RotateAngle => {
                let angle = cmd.checked_value()?;
                self.pose_true.yaw = normalize_angle(self.pose_true.yaw + angle);
                ActionOutcome {
                    status: ActionStatus::Completed,
                    distance_travelled: 0.0,
                    angle_turned: angle,
                }
            }
            MotionKind::MoveNext => self.move_next(),
        };
        self.update_odometry(&before);
        self.step_count += 1;
        Ok(outcome)
    }

    fn move_distance(&mut self, distance: f64) -> ActionOutcome {
        let start = self.pose_true;
        let (sin, cos) = start.yaw.sin_cos();
        let sign = distance.signum();
        let length = distance.abs();
        let substep = self.robot.sim.substep;
        let required = self.required_clearance();
        let n = (length / substep - CLEARANCE_EPS).ceil().max(0.0) as u64;

        let at = |s: f64| [start.x + sign * s * cos, start.y + sign * s * sin];
        let mut reached = 0.0;
        let mut current_clearance = clearance(&self.env.walls, start.position());
        let mut obstructed = false;
        for k in 1..=n {
            let s = if k == n { length } else { k as f64 * substep };
            let c = clearance(&self.env.walls, at(s));
            // Inside the margin band, only moves that gain clearance are allowed.
            let ok = c + CLEARANCE_EPS >= required || (c >= current_clearance && c >= self.robot.radius);
            if !ok {
                obstructed = true;
                break;
            }
            reached = s;
            current_clearance = c;
        }
        let p = at(reached);
        self.pose_true = Pose::new(p[0], p[1], start.yaw);
        ActionOutcome {
            status: if obstructed { ActionStatus::Obstructed } else { ActionStatus::Completed },
            distance_travelled: reached,
            angle_turned: 0.0,
        }
    }

    fn move_next(&mut self) -> ActionOutcome {
        let len = self.env.trajectory.len();
        let before = self.pose_true;
        if self.trajectory_cursor < len {
            self.pose_true = self.env.trajectory[self.trajectory_cursor];
            self.trajectory_cursor += 1;
            if clearance(&self.env.walls, self.pose_true.position()) < self.robot.radius {
                self.collided = true;
            }
        }
        let status = if self.trajectory_cursor >= len {
            self.finished = true;
            ActionStatus::FinishedTrajectory
        } else {
            ActionStatus::Completed
        };
        let delta = before.relative(&self.pose_true);
        ActionOutcome {
            status,
            distance_travelled: delta.x.hypot(delta.y),
            angle_turned: delta.yaw,
        }
    }

    fn update_odometry(&mut self, before: &Pose) {
        match self.localisation {
            Localisation::GroundTruth => self.pose_odom = self.pose_true,
            Localisation::Noisy => {
                let delta = before.relative(&self.pose_true);
                let dist = delta.x.hypot(delta.y);
                let turn = delta.yaw.abs();
                let trans_noise = Normal::new(0.0, ODOM_SIGMA_PER_METER * dist)
                    .expect("finite sigma")
                    .sample(&mut self.rng);
                let rot_noise = Normal::new(0.0, ODOM_SIGMA_PER_RADIAN * turn)
                    .expect("finite sigma")
                    .sample(&mut self.rng);
                let scale = if dist > 0.0 { 1.0 + trans_noise / dist } else { 1.0 };
                let noisy = Pose::new(delta.x * scale, delta.y * scale, delta.yaw + rot_noise);
                self.pose_odom = self.pose_odom.compose(&noisy);
            }
        }
    }

    /// The pose reported to clients: true pose or drifting odometry.
    pub fn reported_pose(&self) -> Pose {
        match self.localisation {
            Localisation::GroundTruth => self.pose_true,
            Localisation::Noisy => self.pose_odom,
        }
    }

    /// Reads a sensor connection declared by the robot.
    pub fn sense(&mut self, connection: &str) -> Result<SensorFrame, SimError> {
        let conn = self
            .robot
            .connection(connection)
            .ok_or_else(|| SimError::NotFound(connection.to_string()))?;
        if conn.channel != Channel::Sensor {
            return Err(SimError::WrongChannel {
                name: connection.to_string(),
                channel: conn.channel,
                expected: Channel::Sensor,
            });
        }
        match conn.backend_topic.as_str() {
            topics::POSE => Ok(SensorFrame::Pose { pose: self.reported_pose() }),
            topics::LASER => Ok(SensorFrame::Laser { laser: self.laser_scan() }),
            topics::OBJECT_GLIMPSE => Ok(SensorFrame::ObjectGlimpse { glimpses: self.glimpses() }),
            other => Err(SimError::NotFound(other.to_string())),
        }
    }

    /// Beam angles relative to heading, evenly spread over [-π/2, π/2].
    pub fn beam_angles(&self) -> Vec<f64> {
        let n = self.robot.sim.laser_beams;
        let span = 2.0 * FRAC_PI_2;
        (0..n)
            .map(|i| -FRAC_PI_2 + span * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn laser_scan(&self) -> Vec<[f64; 2]> {
        let max_range = self.robot.sim.laser_max_range;
        let origin = self.pose_true.position();
        self.beam_angles()
            .into_iter()
            .map(|rel| {
                let heading = self.pose_true.yaw + rel;
                let range = self
                    .env
                    .walls
                    .iter()
                    .filter_map(|w| w.ray_hit(origin, heading))
                    .fold(max_range, f64::min);
                [rel, range]
            })
            .collect()
    }

    fn glimpses(&mut self) -> Vec<Glimpse> {
        let params = self.robot.sim;
        let noise = Normal::new(0.0, params.glimpse_sigma).expect("validated sigma");
        let pose = self.pose_true;
        let mut out = Vec::new();
        for obj in &self.env.objects {
            let dx = obj.centroid[0] - pose.x;
            let dy = obj.centroid[1] - pose.y;
            let range = dx.hypot(dy);
            let bearing = normalize_angle(dy.atan2(dx) - pose.yaw);
            if range > params.glimpse_range || bearing.abs() > params.glimpse_half_fov {
                continue;
            }
            let mut centroid = obj.centroid;
            for c in &mut centroid {
                *c += noise.sample(&mut self.rng);
            }
            if self.localisation == Localisation::Noisy {
                let xy = pose.transfer_point(&self.pose_odom, [centroid[0], centroid[1]]);
                centroid[0] = xy[0];
                centroid[1] = xy[1];
            }
            out.push(Glimpse {
                class: obj.class.clone(),
                centroid,
                extent: obj.extent,
                range,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::GroundTruthObject;
    use crate::geometry::{Bounds, Segment};
    use crate::pool::{Connection, PlatformKind, SimParams};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    pub(crate) fn robot() -> RobotDef {
        let mut connections = BTreeMap::new();
        for s in topics::SENSORS {
            connections.insert(s.to_string(), Connection { channel: Channel::Sensor, backend_topic: s.into() });
        }
        for a in topics::ACTUATORS {
            connections.insert(a.to_string(), Connection { channel: Channel::Actuator, backend_topic: a.into() });
        }
        RobotDef {
            name: "bot".into(),
            kind: PlatformKind::Sim,
            connections,
            radius: 0.2,
            sim: SimParams::default(),
        }
    }

    fn env(walls: Vec<Segment>, start: Pose) -> EnvironmentDef {
        EnvironmentDef {
            name: "room".into(),
            variant: 1,
            kind: PlatformKind::Sim,
            bounds: Bounds { min: [-20.0, -20.0], max: [20.0, 20.0] },
            walls,
            start_pose: start,
            trajectory: vec![Pose::new(1.0, 0.0, 0.0), Pose::new(1.0, 1.0, PI / 2.0)],
            objects: vec![GroundTruthObject {
                class: "chair".into(),
                centroid: [2.0, 0.0, 0.0],
                extent: [0.5, 0.5, 1.0],
                state: Default::default(),
            }],
            class_list: vec!["chair".into()],
            metadata: Default::default(),
        }
    }

    fn world(walls: Vec<Segment>) -> World {
        World::new(env(walls, Pose::new(0.0, 0.0, 0.0)), robot(), Localisation::GroundTruth, 7).unwrap()
    }

    fn wall_x1() -> Segment {
        Segment::new([1.0, -5.0], [1.0, 5.0])
    }

    #[test]
    fn init_places_robot_at_start() {
        let w = world(vec![]);
        assert_eq!(w.pose_true(), Pose::new(0.0, 0.0, 0.0));
        assert_eq!(w.pose_odom(), w.pose_true());
        assert!(!w.collided() && !w.finished());
        assert_eq!(w.trajectory_cursor(), 0);
        assert_eq!(w, world(vec![]));
    }

    #[test]
    fn start_too_close_to_wall() {
        let e = env(vec![Segment::new([0.1, -1.0], [0.1, 1.0])], Pose::new(0.0, 0.0, 0.0));
        assert!(matches!(
            World::new(e, robot(), Localisation::GroundTruth, 0),
            Err(SimError::InvalidEnvironment(_))
        ));
    }

    #[test]
    fn free_move() {
        let mut w = world(vec![]);
        let out = w.step(MotionCommand::move_distance(1.0), ControlMode::Active).unwrap();
        assert_eq!(out.status, ActionStatus::Completed);
        assert_eq!(out.distance_travelled, 1.0);
        assert_eq!(w.pose_true(), Pose::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn blocked_move_stops_at_margin() {
        let mut w = world(vec![wall_x1()]);
        let out = w.step(MotionCommand::move_distance(2.0), ControlMode::Active).unwrap();
        assert_eq!(out.status, ActionStatus::Obstructed);
        assert!((w.pose_true().x - 0.79).abs() <= 0.01 + 1e-12, "{:?}", w.pose_true());
        assert!(out.distance_travelled < 2.0);
        assert!(!w.collided());
    }

    #[test]
    fn backing_away_from_margin_band() {
        let mut w = world(vec![wall_x1()]);
        w.step(MotionCommand::move_distance(2.0), ControlMode::Active).unwrap();
        let out = w.step(MotionCommand::move_distance(-0.5), ControlMode::Active).unwrap();
        assert_eq!(out.status, ActionStatus::Completed);
    }

    #[test]
    fn rotate() {
        let mut w = world(vec![]);
        let out = w.step(MotionCommand::rotate_angle(PI / 2.0), ControlMode::Active).unwrap();
        assert_eq!(out.status, ActionStatus::Completed);
        assert_eq!(w.pose_true().yaw, PI / 2.0);
    }

    #[test]
    fn mode_and_value_checks() {
        let mut w = world(vec![]);
        assert!(matches!(w.step(MotionCommand::move_next(), ControlMode::Active), Err(SimError::ModeViolation { .. })));
        assert!(matches!(
            w.step(MotionCommand::move_distance(1.0), ControlMode::Passive),
            Err(SimError::ModeViolation { .. })
        ));
        assert!(matches!(
            w.step(MotionCommand::move_distance(f64::NAN), ControlMode::Active),
            Err(SimError::InvalidCommand(_))
        ));
        assert!(matches!(
            w.step(MotionCommand::rotate_angle(101.0), ControlMode::Active),
            Err(SimError::InvalidCommand(_))
        ));
        assert!(matches!(
            w.step(MotionCommand { kind: MotionKind::MoveDistance, value: None }, ControlMode::Active),
            Err(SimError::InvalidCommand(_))
        ));
    }

    #[test]
    fn passive_trajectory() {
        let mut w = world(vec![]);
        let a = w.step(MotionCommand::move_next(), ControlMode::Passive).unwrap();
        assert_eq!(a.status, ActionStatus::Completed);
        assert_eq!(w.pose_true(), Pose::new(1.0, 0.0, 0.0));
        let b = w.step(MotionCommand::move_next(), ControlMode::Passive).unwrap();
        assert_eq!(b.status, ActionStatus::FinishedTrajectory);
        assert!(w.finished());
        assert_eq!(w.pose_true(), Pose::new(1.0, 1.0, PI / 2.0));
        assert_eq!(w.step(MotionCommand::move_next(), ControlMode::Passive), Err(SimError::SessionFinished));
    }

    #[test]
    fn trajectory_pose_inside_wall_sets_collided() {
        let mut e = env(vec![Segment::new([1.0, -0.1], [1.0, 0.1])], Pose::new(0.0, 0.0, 0.0));
        e.trajectory = vec![Pose::new(1.05, 0.0, 0.0), Pose::new(-1.0, 0.0, 0.0)];
        let mut w = World::new(e, robot(), Localisation::GroundTruth, 0).unwrap();
        w.step(MotionCommand::move_next(), ControlMode::Passive).unwrap();
        assert!(w.collided());
        w.step(MotionCommand::move_next(), ControlMode::Passive).unwrap();
        assert!(w.collided(), "collided stays set until reset");
        w.reset();
        assert!(!w.collided());
    }

    #[test]
    fn laser_ranges() {
        let mut w = world(vec![wall_x1()]);
        let SensorFrame::Laser { laser } = w.sense("laser").unwrap() else { panic!() };
        assert_eq!(laser.len(), 31);
        assert!(laser[15][0].abs() < 1e-12);
        assert!((laser[15][1] - 1.0).abs() < 1e-12);
        assert_eq!(laser[0][0], -PI / 2.0);
        assert!((laser[30][0] - PI / 2.0).abs() < 1e-12);
        assert_eq!(laser[0][1], 10.0);

        let mut empty = world(vec![]);
        let SensorFrame::Laser { laser } = empty.sense("laser").unwrap() else { panic!() };
        assert!(laser.iter().all(|b| b[1] == 10.0));
    }

    #[test]
    fn zero_noise_glimpse() {
        let mut r = robot();
        r.sim.glimpse_sigma = 0.0;
        let mut w = World::new(env(vec![], Pose::new(0.0, 0.0, 0.0)), r, Localisation::GroundTruth, 1).unwrap();
        let SensorFrame::ObjectGlimpse { glimpses } = w.sense("object_glimpse").unwrap() else { panic!() };
        assert_eq!(glimpses.len(), 1);
        assert_eq!(glimpses[0].class, "chair");
        assert_eq!(glimpses[0].centroid, [2.0, 0.0, 0.0]);
        assert_eq!(glimpses[0].range, 2.0);

        w.step(MotionCommand::rotate_angle(PI), ControlMode::Active).unwrap();
        let SensorFrame::ObjectGlimpse { glimpses } = w.sense("object_glimpse").unwrap() else { panic!() };
        assert!(glimpses.is_empty(), "object behind the robot");
    }

    #[test]
    fn noisy_glimpse_redraws() {
        let mut w = world(vec![]);
        let a = w.sense("object_glimpse").unwrap();
        let b = w.sense("object_glimpse").unwrap();
        assert_ne!(a, b);
        assert_eq!(w.sense("pose").unwrap(), w.sense("pose").unwrap());
    }

    #[test]
    fn sense_errors() {
        let mut w = world(vec![]);
        assert_eq!(w.sense("camera"), Err(SimError::NotFound("camera".into())));
        assert!(matches!(w.sense("move_distance"), Err(SimError::WrongChannel { .. })));
    }

    #[test]
    fn variant_switch_and_reset() {
        let mut w = world(vec![]);
        w.step(MotionCommand::move_distance(1.0), ControlMode::Active).unwrap();
        let mut v2 = env(vec![], Pose::new(-1.0, 0.0, 0.0));
        v2.variant = 2;
        v2.objects.clear();
        w.apply_variant(v2.clone()).unwrap();
        assert_eq!(w.pose_true(), Pose::new(-1.0, 0.0, 0.0));
        assert!(w.env().objects.is_empty());

        let mut other = v2.clone();
        other.name = "office".into();
        assert!(matches!(w.apply_variant(other), Err(SimError::VariantMismatch { .. })));

        for _ in 0..10 {
            w.step(MotionCommand::rotate_angle(0.3), ControlMode::Active).unwrap();
        }
        w.reset();
        let once = w.clone();
        w.reset();
        assert_eq!(w, once);
        assert_eq!(w.pose_true(), v2.start_pose);
    }

    #[test]
    fn noisy_odometry_drifts_but_truth_does_not() {
        let mut w = World::new(env(vec![], Pose::new(0.0, 0.0, 0.0)), robot(), Localisation::Noisy, 3).unwrap();
        for _ in 0..5 {
            w.step(MotionCommand::move_distance(2.0), ControlMode::Active).unwrap();
            w.step(MotionCommand::rotate_angle(1.0), ControlMode::Active).unwrap();
        }
        assert_ne!(w.pose_odom(), w.pose_true());
        let err = (w.pose_odom().x - w.pose_true().x).hypot(w.pose_odom().y - w.pose_true().y);
        assert!(err < 1.0, "drift {err}");
        assert_eq!(w.sense("pose").unwrap(), SensorFrame::Pose { pose: w.pose_odom() });
    }

    #[test]
    fn dump_contains_runtime_fields() {
        let w = world(vec![]);
        let text = w.dump_yaml();
        assert!(text.contains("trajectory_cursor: 0"));
        assert!(text.contains("start_pose:"));
        assert!(text.contains("collided: false"));
    }
}
