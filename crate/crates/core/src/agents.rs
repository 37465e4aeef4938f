//! Reference agents bundled with the harness.

use crate::client::{Action, Agent, AgentError, Observations};
use crate::pool::{topics, TaskType};
use crate::eval::ObjectState;
use crate::results::{ProposedObject, ResultsFile, StateProbs};
use crate::sim::{ActionOutcome, ActionStatus, SensorFrame};
use std::f64::consts::FRAC_PI_3;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
struct Track {
    class: String,
    centroid: [f64; 3],
    extent: [f64; 3],
    count: usize,
}

/// Fuses object glimpses into one object map per scene.
///
/// A glimpse joins the nearest track of the same class within
/// `merge_radius`, otherwise it starts a new track. Track centroids are
/// running means.
#[derive(Debug, Clone)]
pub struct ObjectMapBuilder {
    merge_radius: f64,
    scenes: Vec<Vec<Track>>,
}

impl Default for ObjectMapBuilder {
    fn default() -> Self {
        Self::new(0.25)
    }
}

impl ObjectMapBuilder {
    pub fn new(merge_radius: f64) -> Self {
        ObjectMapBuilder {
            merge_radius,
            scenes: vec![Vec::new()],
        }
    }

    pub fn ingest(&mut self, observations: &Observations) {
        let scene = self.scenes.last_mut().expect("at least one scene");
        for frame in observations.values() {
            let SensorFrame::ObjectGlimpse { glimpses } = frame else {
                continue;
            };
            for g in glimpses {
                let nearest = scene
                    .iter_mut()
                    .filter(|t| t.class == g.class)
                    .map(|t| (dist(&t.centroid, &g.centroid), t))
                    .filter(|(d, _)| *d <= self.merge_radius)
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                match nearest {
                    Some((_, track)) => {
                        track.count += 1;
                        let n = track.count as f64;
                        for k in 0..3 {
                            track.centroid[k] += (g.centroid[k] - track.centroid[k]) / n;
                        }
                    }
                    None => scene.push(Track {
                        class: g.class.clone(),
                        centroid: g.centroid,
                        extent: g.extent,
                        count: 1,
                    }),
                }
            }
        }
    }

    pub fn start_scene(&mut self) {
        self.scenes.push(Vec::new());
    }

    pub fn object_count(&self, scene: usize) -> usize {
        self.scenes.get(scene).map_or(0, Vec::len)
    }

    fn proposal(track: &Track, class_list: &[String], state: Option<ObjectState>) -> Option<ProposedObject> {
        let idx = class_list.iter().position(|c| *c == track.class)?;
        let mut label_probs = vec![0.0; class_list.len()];
        label_probs[idx] = 1.0;
        Some(ProposedObject {
            label_probs,
            centroid: track.centroid,
            extent: track.extent,
            state_probs: state.map(StateProbs::one_hot),
        })
    }

    /// Fills `results.objects`. Scene change maps list only objects whose
    /// presence differs between the first and last scene.
    pub fn build(&self, mut results: ResultsFile) -> ResultsFile {
        let scd = results.task_id().map(|t| t.task_type == TaskType::Scd).unwrap_or(false);
        let classes = results.class_list.clone();
        results.objects = if !scd {
            self.scenes[0]
                .iter()
                .filter_map(|t| Self::proposal(t, &classes, None))
                .collect()
        } else {
            let before = &self.scenes[0];
            let after = self.scenes.last().expect("at least one scene");
            let present_in = |track: &Track, other: &[Track]| {
                other
                    .iter()
                    .any(|o| o.class == track.class && dist(&o.centroid, &track.centroid) <= self.merge_radius)
            };
            let removed = before
                .iter()
                .filter(|t| !present_in(t, after))
                .filter_map(|t| Self::proposal(t, &classes, Some(ObjectState::Removed)));
            let added = after
                .iter()
                .filter(|t| !present_in(t, before))
                .filter_map(|t| Self::proposal(t, &classes, Some(ObjectState::Added)));
            removed.chain(added).collect()
        };
        results
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

/// Finishes immediately and reports an empty map.
#[derive(Debug, Default, Clone)]
pub struct IdleAgent;

impl Agent for IdleAgent {
    fn is_done(&mut self, _: &Observations, _: Option<&ActionOutcome>) -> bool {
        true
    }

    fn pick_action(&mut self, _: &Observations, _: &[String]) -> Result<Action, AgentError> {
        Err("idle agent never acts".into())
    }

    fn save_result(&mut self, path: &Path, results: ResultsFile) -> Result<(), AgentError> {
        results.write_atomic(path)?;
        Ok(())
    }
}

/// Follows the environment trajectory with `move_next` and maps every
/// glimpsed object.
#[derive(Debug, Default, Clone)]
pub struct PassiveMapper {
    pub map: ObjectMapBuilder,
}

impl Agent for PassiveMapper {
    fn is_done(&mut self, observations: &Observations, last: Option<&ActionOutcome>) -> bool {
        self.map.ingest(observations);
        last.is_some_and(|o| o.status == ActionStatus::FinishedTrajectory)
    }

    fn pick_action(&mut self, _: &Observations, actuators: &[String]) -> Result<Action, AgentError> {
        if actuators.iter().any(|a| a == topics::MOVE_NEXT) {
            Ok(Action::move_next())
        } else {
            Err("passive mapper needs the move_next actuator".into())
        }
    }

    fn save_result(&mut self, path: &Path, results: ResultsFile) -> Result<(), AgentError> {
        self.map.build(results).write_atomic(path)?;
        Ok(())
    }

    fn scene_changed(&mut self, _: usize) {
        self.map.start_scene();
    }
}

/// Laser-guided wandering for active tasks: drive toward open space,
/// turn toward the more open side when blocked. Each scene gets
/// `steps_per_scene` actions.
#[derive(Debug, Clone)]
pub struct Explorer {
    pub map: ObjectMapBuilder,
    pub steps_per_scene: usize,
    scene_count: usize,
    steps_in_scene: usize,
    scene: usize,
}

impl Explorer {
    pub fn new(steps_per_scene: usize, scene_count: usize) -> Self {
        Explorer {
            map: ObjectMapBuilder::default(),
            steps_per_scene,
            scene_count: scene_count.max(1),
            steps_in_scene: 0,
            scene: 0,
        }
    }
}

impl Agent for Explorer {
    fn is_done(&mut self, observations: &Observations, _: Option<&ActionOutcome>) -> bool {
        self.map.ingest(observations);
        self.steps_in_scene >= self.steps_per_scene && self.scene + 1 >= self.scene_count
    }

    fn pick_action(&mut self, observations: &Observations, _: &[String]) -> Result<Action, AgentError> {
        if self.steps_in_scene >= self.steps_per_scene {
            return Ok(Action::next_scene());
        }
        self.steps_in_scene += 1;
        let laser = observations.values().find_map(|f| match f {
            SensorFrame::Laser { laser } => Some(laser),
            _ => None,
        });
        let Some(laser) = laser.filter(|l| !l.is_empty()) else {
            return Ok(Action::new(topics::ROTATE_ANGLE, Some(FRAC_PI_3)));
        };
        let front = laser
            .iter()
            .min_by(|a, b| a[0].abs().total_cmp(&b[0].abs()))
            .map_or(0.0, |b| b[1]);
        if front > 1.0 {
            return Ok(Action::new(topics::MOVE_DISTANCE, Some((front - 0.6).min(1.0))));
        }
        let side_mean = |positive: bool| {
            let ranges: Vec<f64> = laser
                .iter()
                .filter(|b| (b[0] > 0.0) == positive && b[0] != 0.0)
                .map(|b| b[1])
                .collect();
            ranges.iter().sum::<f64>() / ranges.len().max(1) as f64
        };
        let turn = if side_mean(true) >= side_mean(false) { FRAC_PI_3 } else { -FRAC_PI_3 };
        Ok(Action::new(topics::ROTATE_ANGLE, Some(turn)))
    }

    fn save_result(&mut self, path: &Path, results: ResultsFile) -> Result<(), AgentError> {
        self.map.build(results).write_atomic(path)?;
        Ok(())
    }

    fn scene_changed(&mut self, scene: usize) {
        self.scene = scene;
        self.steps_in_scene = 0;
        self.map.start_scene();
    }
}

/// Bundled agent by name: `idle`, `mapper` or `explorer`.
pub fn by_name(name: &str, steps_per_scene: usize, scene_count: usize) -> Option<Box<dyn Agent>> {
    match name {
        "idle" => Some(Box::new(IdleAgent)),
        "mapper" => Some(Box::new(PassiveMapper::default())),
        "explorer" => Some(Box::new(Explorer::new(steps_per_scene, scene_count))),
        _ => None,
    }
}
