//! Object Map Quality (OMQ) evaluation.
//!
//! A proposed object map is compared with the ground-truth map of an
//! environment in three steps:
//!
//! 1. every proposal/ground-truth pair gets a [`PairwiseQuality`]: the
//!    probability the proposal assigns to the true class, the 3D IoU of the
//!    boxes and, for scene change detection, the probability assigned to the
//!    true change state. The pair's overall quality is the geometric mean of
//!    those components, so any zero component zeroes the pair;
//! 2. proposals and ground-truth objects are matched one-to-one to maximise
//!    the total overall quality ([`assign`]);
//! 3. the score is the summed quality of the matches divided by
//!    `|TP| + |FP| + |FN|`.
//!
//! For scene change detection the ground truth is the set of objects added
//! or removed between the two environment variants.

mod assign;
mod iou;

pub use assign::{assign, total_quality};
pub use iou::{iou3d, Box3};

use crate::pool::{EnvironmentDef, Pools, TaskType, OMQ_V1};
use crate::results::{ProposedObject, ResultsError, ResultsFile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two objects in different variants are the same object when their classes
/// agree and their centroids are at most this far apart.
pub const SAME_OBJECT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectState {
    Added,
    Removed,
    #[default]
    Constant,
}

impl ObjectState {
    fn is_constant(&self) -> bool {
        *self == ObjectState::Constant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthObject {
    pub class: String,
    pub centroid: [f64; 3],
    pub extent: [f64; 3],
    #[serde(default, skip_serializing_if = "ObjectState::is_constant")]
    pub state: ObjectState,
}

impl GroundTruthObject {
    pub fn bbox(&self) -> Box3 {
        Box3::new(self.centroid, self.extent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseQuality {
    pub label_q: f64,
    pub spatial_q: f64,
    pub state_q: Option<f64>,
    pub overall_q: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("nothing to summarise")]
    EmptyInput,
    #[error("no evaluation method for task `{0}`")]
    NoMethod(String),
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
}

impl From<ResultsError> for EvalError {
    fn from(e: ResultsError) -> Self {
        EvalError::SchemaMismatch(e.to_string())
    }
}

/// Quality of matching `proposal` to `gt`.
pub fn pairwise_quality(
    proposal: &ProposedObject,
    gt: &GroundTruthObject,
    class_list: &[String],
    task_type: TaskType,
) -> Result<PairwiseQuality, EvalError> {
    if proposal.label_probs.len() != class_list.len() {
        return Err(EvalError::SchemaMismatch(format!(
            "label_probs has {} entries, class list has {}",
            proposal.label_probs.len(),
            class_list.len()
        )));
    }
    let class_idx = class_list
        .iter()
        .position(|c| *c == gt.class)
        .ok_or_else(|| EvalError::SchemaMismatch(format!("class `{}` not in class list", gt.class)))?;
    let label_q = proposal.label_probs[class_idx].clamp(0.0, 1.0);
    let spatial_q = iou3d(&proposal.bbox(), &gt.bbox());
    let state_q = match task_type {
        TaskType::SemanticSlam => None,
        TaskType::Scd => {
            let probs = proposal.state_probs.ok_or_else(|| {
                EvalError::SchemaMismatch("state_probs required for scene change detection".into())
            })?;
            Some(probs.get(gt.state).clamp(0.0, 1.0))
        }
    };
    let overall_q = if spatial_q == 0.0 {
        0.0
    } else {
        match state_q {
            None => (label_q * spatial_q).sqrt(),
            Some(s) => (label_q * spatial_q * s).cbrt(),
        }
    };
    Ok(PairwiseQuality {
        label_q,
        spatial_q,
        state_q,
        overall_q,
    })
}

/// Marks objects of `after` missing from `before` as added, and objects of
/// `before` missing from `after` as removed. Everything else is constant.
/// Returned order: all of `before` (removed or constant), then added objects.
pub fn derive_changes(before: &EnvironmentDef, after: &EnvironmentDef) -> Vec<GroundTruthObject> {
    let same = |a: &GroundTruthObject, b: &GroundTruthObject| {
        let d2: f64 = (0..3).map(|k| (a.centroid[k] - b.centroid[k]).powi(2)).sum();
        a.class == b.class && d2.sqrt() <= SAME_OBJECT_TOLERANCE
    };
    let mut after_used = vec![false; after.objects.len()];
    let mut out = Vec::with_capacity(before.objects.len() + after.objects.len());
    for obj in &before.objects {
        let hit = after
            .objects
            .iter()
            .enumerate()
            .find(|(j, other)| !after_used[*j] && same(obj, other))
            .map(|(j, _)| j);
        let state = match hit {
            Some(j) => {
                after_used[j] = true;
                ObjectState::Constant
            }
            None => ObjectState::Removed,
        };
        out.push(GroundTruthObject { state, ..obj.clone() });
    }
    for (obj, used) in after.objects.iter().zip(after_used) {
        if !used {
            out.push(GroundTruthObject {
                state: ObjectState::Added,
                ..obj.clone()
            });
        }
    }
    out
}

/// The ground truth a results file for `task_type` is scored against.
pub fn ground_truth(envs: &[EnvironmentDef], task_type: TaskType) -> Result<Vec<GroundTruthObject>, EvalError> {
    match (task_type, envs) {
        (TaskType::SemanticSlam, [env]) => Ok(env.objects.clone()),
        (TaskType::Scd, [before, after]) => Ok(derive_changes(before, after)
            .into_iter()
            .filter(|o| o.state != ObjectState::Constant)
            .collect()),
        _ => Err(EvalError::SchemaMismatch(format!(
            "{} evaluation needs {} environment(s), got {}",
            task_type.as_str(),
            task_type.scene_count(),
            envs.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePositive {
    pub proposal: usize,
    pub gt: usize,
    #[serde(flatten)]
    pub quality: PairwiseQuality,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentMeans {
    pub label: Option<f64>,
    pub spatial: Option<f64>,
    pub state: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub task_name: String,
    pub environments: Vec<String>,
    pub score: f64,
    pub true_positives: Vec<TruePositive>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
    pub component_means: ComponentMeans,
}

impl EvalReport {
    pub fn write(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        crate::results::write_json_atomic(path.as_ref(), self)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores an object map against the ground truth taken from `envs`.
pub fn evaluate(results: &ResultsFile, envs: &[EnvironmentDef], task_type: TaskType) -> Result<EvalReport, EvalError> {
    results.validate()?;
    let declared = results.task_id()?.task_type;
    if declared != task_type {
        return Err(EvalError::SchemaMismatch(format!(
            "results are for `{}`, evaluating as {}",
            results.task_details.name,
            task_type.as_str()
        )));
    }
    let declared_envs: Vec<String> = results.environment_details.iter().map(|e| e.id()).collect();
    let given_envs: Vec<String> = envs.iter().map(EnvironmentDef::id).collect();
    if declared_envs != given_envs {
        return Err(EvalError::SchemaMismatch(format!(
            "results list environments {declared_envs:?} but ground truth is for {given_envs:?}"
        )));
    }
    let class_list = &envs[0].class_list;
    if &results.class_list != class_list {
        return Err(EvalError::SchemaMismatch(
            "class_list differs from the environment's class list".into(),
        ));
    }

    let gts = ground_truth(envs, task_type)?;
    let qualities = results
        .objects
        .iter()
        .map(|p| {
            gts.iter()
                .map(|g| pairwise_quality(p, g, class_list, task_type))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let overall: Vec<Vec<f64>> = qualities
        .iter()
        .map(|row| row.iter().map(|q| q.overall_q).collect())
        .collect();

    let pairs = assign(&overall);
    let true_positives: Vec<TruePositive> = pairs
        .iter()
        .map(|&(p, g)| TruePositive {
            proposal: p,
            gt: g,
            quality: qualities[p][g],
        })
        .collect();
    let mut proposal_matched = vec![false; results.objects.len()];
    let mut gt_matched = vec![false; gts.len()];
    for &(p, g) in &pairs {
        proposal_matched[p] = true;
        gt_matched[g] = true;
    }
    let false_positives: Vec<usize> = (0..results.objects.len()).filter(|&i| !proposal_matched[i]).collect();
    let false_negatives: Vec<usize> = (0..gts.len()).filter(|&i| !gt_matched[i]).collect();

    let denominator = true_positives.len() + false_positives.len() + false_negatives.len();
    // Folding from +0.0 keeps an empty sum from being -0.0.
    let numerator = true_positives.iter().fold(0.0, |acc, tp| acc + tp.quality.overall_q);
    // An empty map against empty ground truth is a perfect answer.
    let score = if denominator == 0 {
        1.0
    } else {
        (numerator / denominator as f64).clamp(0.0, 1.0)
    };

    let component_means = ComponentMeans {
        label: mean(true_positives.iter().map(|tp| tp.quality.label_q)),
        spatial: mean(true_positives.iter().map(|tp| tp.quality.spatial_q)),
        state: mean(true_positives.iter().filter_map(|tp| tp.quality.state_q)),
    };

    Ok(EvalReport {
        metric: OMQ_V1.to_string(),
        task_name: results.task_details.name.clone(),
        environments: given_envs,
        score,
        true_positives,
        false_positives,
        false_negatives,
        component_means,
    })
}

/// Evaluates `results` with the method the pool assigns to its task and the
/// ground truth of the environments it names.
pub fn evaluate_with_pools(results: &ResultsFile, pools: &Pools) -> Result<EvalReport, EvalError> {
    let name = &results.task_details.name;
    let task = pools.task(name).map_err(|_| EvalError::NoMethod(name.clone()))?;
    let method = pools
        .eval_method(&task.eval_method)
        .map_err(|_| EvalError::NoMethod(name.clone()))?;
    if !method.results_formats.contains(&results.task_details.results_format) {
        return Err(EvalError::SchemaMismatch(format!(
            "method `{}` does not accept results format `{}`",
            method.name, results.task_details.results_format
        )));
    }
    let envs = results
        .environment_details
        .iter()
        .map(|e| {
            pools
                .environment(&e.id())
                .cloned()
                .map_err(|_| EvalError::UnknownEnvironment(e.id()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    evaluate(results, &envs, task.name.task_type)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub task_name: String,
    pub environments: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metric: String,
    pub mean_score: f64,
    pub per_report: Vec<SummaryEntry>,
}

/// Mean score over several reports.
pub fn summarise(reports: &[EvalReport]) -> Result<Summary, EvalError> {
    let mean_score = mean(reports.iter().map(|r| r.score)).ok_or(EvalError::EmptyInput)?;
    Ok(Summary {
        metric: OMQ_V1.to_string(),
        mean_score,
        per_report: reports
            .iter()
            .map(|r| SummaryEntry {
                task_name: r.task_name.clone(),
                environments: r.environments.clone(),
                score: r.score,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::results::{EnvironmentDetails, StateProbs, TaskDetails};

    fn classes() -> Vec<String> {
        vec!["chair".into(), "table".into(), "plant".into()]
    }

    fn gt(class: &str, centroid: [f64; 3]) -> GroundTruthObject {
        GroundTruthObject {
            class: class.into(),
            centroid,
            extent: [0.5, 0.5, 1.0],
            state: ObjectState::Constant,
        }
    }

    fn proposal(label_probs: [f64; 3], centroid: [f64; 3]) -> ProposedObject {
        ProposedObject {
            label_probs: label_probs.to_vec(),
            centroid,
            extent: [0.5, 0.5, 1.0],
            state_probs: None,
        }
    }

    #[test]
    fn perfect_pair() {
        let q = pairwise_quality(
            &proposal([1.0, 0.0, 0.0], [1.0, 1.0, 0.5]),
            &gt("chair", [1.0, 1.0, 0.5]),
            &classes(),
            TaskType::SemanticSlam,
        )
        .unwrap();
        assert_eq!(q, PairwiseQuality { label_q: 1.0, spatial_q: 1.0, state_q: None, overall_q: 1.0 });
    }

    #[test]
    fn half_label_mass() {
        let q = pairwise_quality(
            &proposal([0.5, 0.5, 0.0], [1.0, 1.0, 0.5]),
            &gt("chair", [1.0, 1.0, 0.5]),
            &classes(),
            TaskType::SemanticSlam,
        )
        .unwrap();
        assert!((q.overall_q - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn spatial_gate() {
        let q = pairwise_quality(
            &proposal([1.0, 0.0, 0.0], [5.0, 5.0, 0.5]),
            &gt("chair", [1.0, 1.0, 0.5]),
            &classes(),
            TaskType::SemanticSlam,
        )
        .unwrap();
        assert_eq!(q.overall_q, 0.0);
    }

    #[test]
    fn misaligned_labels() {
        let mut p = proposal([1.0, 0.0, 0.0], [0.0; 3]);
        p.label_probs.pop();
        assert!(matches!(
            pairwise_quality(&p, &gt("chair", [0.0; 3]), &classes(), TaskType::SemanticSlam),
            Err(EvalError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn overall_between_min_and_max_component() {
        for (l, s) in [(0.2f64, 0.9f64), (0.9, 0.2), (0.5, 0.5)] {
            let overall = (l * s).sqrt();
            assert!(overall >= f64::min(l, s) - 1e-15 && overall <= f64::max(l, s) + 1e-15);
        }
    }

    fn env(variant: u32, objects: Vec<GroundTruthObject>) -> EnvironmentDef {
        EnvironmentDef {
            name: "room".into(),
            variant,
            kind: crate::pool::PlatformKind::Sim,
            bounds: crate::geometry::Bounds { min: [-10.0, -10.0], max: [10.0, 10.0] },
            walls: vec![],
            start_pose: crate::geometry::Pose::new(0.0, 0.0, 0.0),
            trajectory: vec![],
            objects,
            class_list: classes(),
            metadata: Default::default(),
        }
    }

    fn results(task: &str, envs: &[&EnvironmentDef], objects: Vec<ProposedObject>) -> ResultsFile {
        ResultsFile {
            task_details: TaskDetails { name: task.into(), results_format: "object_map".into() },
            environment_details: envs
                .iter()
                .map(|e| EnvironmentDetails { name: e.name.clone(), variant: e.variant })
                .collect(),
            class_list: classes(),
            objects,
        }
    }

    const SLAM: &str = "semantic_slam:passive:ground_truth";

    #[test]
    fn empty_map_scores_zero() {
        let e = env(1, vec![gt("chair", [0.0; 3]), gt("table", [2.0, 0.0, 0.0]), gt("plant", [4.0, 0.0, 0.0])]);
        let report = evaluate(&results(SLAM, &[&e], vec![]), std::slice::from_ref(&e), TaskType::SemanticSlam).unwrap();
        assert_eq!(report.score, 0.0);
        assert_eq!(report.false_negatives, vec![0, 1, 2]);
        assert!(report.true_positives.is_empty());
        assert_eq!(report.component_means, ComponentMeans::default());
    }

    #[test]
    fn perfect_map_scores_one() {
        let e = env(1, vec![gt("chair", [0.0; 3]), gt("table", [2.0, 0.0, 0.0])]);
        let objects = vec![proposal([0.0, 1.0, 0.0], [2.0, 0.0, 0.0]), proposal([1.0, 0.0, 0.0], [0.0; 3])];
        let report = evaluate(&results(SLAM, &[&e], objects), std::slice::from_ref(&e), TaskType::SemanticSlam).unwrap();
        assert_eq!(report.score, 1.0);
        assert_eq!(report.true_positives.len(), 2);
        assert_eq!(report.true_positives[0].gt, 1);
    }

    #[test]
    fn single_half_confident_match() {
        let e = env(1, vec![gt("chair", [0.0; 3])]);
        let objects = vec![proposal([0.5, 0.5, 0.0], [0.0; 3])];
        let report = evaluate(&results(SLAM, &[&e], objects), std::slice::from_ref(&e), TaskType::SemanticSlam).unwrap();
        assert!((report.score - 0.5f64.sqrt()).abs() < 1e-9);
        assert_eq!(report.component_means.label, Some(0.5));
    }

    #[test]
    fn unmatched_proposal_is_false_positive() {
        let e = env(1, vec![gt("chair", [0.0; 3])]);
        let objects = vec![proposal([1.0, 0.0, 0.0], [0.0; 3]), proposal([1.0, 0.0, 0.0], [8.0, 8.0, 0.0])];
        let report = evaluate(&results(SLAM, &[&e], objects), std::slice::from_ref(&e), TaskType::SemanticSlam).unwrap();
        assert_eq!(report.false_positives, vec![1]);
        assert_eq!(report.score, 0.5);
    }

    #[test]
    fn environment_mismatch_rejected() {
        let e = env(1, vec![]);
        let other = env(2, vec![]);
        let r = results(SLAM, &[&other], vec![]);
        assert!(matches!(evaluate(&r, &[e], TaskType::SemanticSlam), Err(EvalError::SchemaMismatch(_))));
    }

    #[test]
    fn change_derivation() {
        let before = env(1, vec![gt("chair", [0.0; 3]), gt("table", [2.0, 0.0, 0.0])]);
        let after = env(2, vec![gt("chair", [0.005, 0.0, 0.0]), gt("plant", [4.0, 0.0, 0.0])]);
        let changes = derive_changes(&before, &after);
        let states: Vec<_> = changes.iter().map(|o| (o.class.as_str(), o.state)).collect();
        assert_eq!(
            states,
            vec![("chair", ObjectState::Constant), ("table", ObjectState::Removed), ("plant", ObjectState::Added)]
        );
    }

    #[test]
    fn scd_constant_objects_excluded() {
        let before = env(1, vec![gt("chair", [0.0; 3]), gt("table", [2.0, 0.0, 0.0])]);
        let after = env(2, vec![gt("chair", [0.0; 3])]);
        let mut removed = proposal([0.0, 1.0, 0.0], [2.0, 0.0, 0.0]);
        removed.state_probs = Some(StateProbs::one_hot(ObjectState::Removed));
        let mut constant = proposal([1.0, 0.0, 0.0], [0.0; 3]);
        constant.state_probs = Some(StateProbs::one_hot(ObjectState::Added));
        let r = results("scd:passive:ground_truth", &[&before, &after], vec![removed, constant]);
        let report = evaluate(&r, &[before.clone(), after.clone()], TaskType::Scd).unwrap();
        assert_eq!(report.true_positives.len(), 1);
        assert_eq!(report.false_positives, vec![1]);
        assert_eq!(report.score, 0.5);
        assert_eq!(report.component_means.state, Some(1.0));
    }

    #[test]
    fn summary_means() {
        let mk = |score| EvalReport {
            metric: OMQ_V1.into(),
            task_name: SLAM.into(),
            environments: vec![],
            score,
            true_positives: vec![],
            false_positives: vec![],
            false_negatives: vec![],
            component_means: ComponentMeans::default(),
        };
        assert_eq!(summarise(&[mk(1.0), mk(0.0)]).unwrap().mean_score, 0.5);
        assert_eq!(summarise(&[mk(0.3)]).unwrap().mean_score, 0.3);
        assert!((summarise(&[mk(0.2), mk(0.4), mk(0.6)]).unwrap().mean_score - 0.4).abs() < 1e-12);
        assert!(matches!(summarise(&[]), Err(EvalError::EmptyInput)));
    }
}
