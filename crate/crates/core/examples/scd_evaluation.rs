// Derive scene-change ground truth from two variants and score change reports.

use taskbench::eval::{derive_changes, evaluate, ObjectState};
use taskbench::pool::{Pools, TaskType};
use taskbench::results::{EnvironmentDetails, ProposedObject, ResultsFile, StateProbs, TaskDetails};

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn report(changes: &[taskbench::eval::GroundTruthObject], classes: &[String], state_mass: f64) -> ResultsFile {
    let objects = changes
        .iter()
        .map(|c| {
            let mut state = StateProbs { added: 0.0, removed: 0.0, constant: 0.0 };
            let rest = (1.0 - state_mass) / 2.0;
            for s in [ObjectState::Added, ObjectState::Removed, ObjectState::Constant] {
                let p = if s == c.state { state_mass } else { rest };
                match s {
                    ObjectState::Added => state.added = p,
                    ObjectState::Removed => state.removed = p,
                    ObjectState::Constant => state.constant = p,
                }
            }
            ProposedObject {
                label_probs: classes.iter().map(|k| if *k == c.class { 1.0 } else { 0.0 }).collect(),
                centroid: c.centroid,
                extent: c.extent,
                state_probs: Some(state),
            }
        })
        .collect();
    ResultsFile {
        task_details: TaskDetails { name: "scd:passive:ground_truth".into(), results_format: "object_map".into() },
        environment_details: vec![
            EnvironmentDetails { name: "house".into(), variant: 1 },
            EnvironmentDetails { name: "house".into(), variant: 2 },
        ],
        class_list: classes.to_vec(),
        objects,
    }
}

fn main() {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    let envs = [
        pools.environment("house:1").unwrap().clone(),
        pools.environment("house:2").unwrap().clone(),
    ];
    let mut changes = derive_changes(&envs[0], &envs[1]);
    for c in &changes {
        println!("{:?} {} at {:?}", c.state, c.class, c.centroid);
    }
    // Only changes are reported; constant objects are not part of the ground truth.
    changes.retain(|c| c.state != ObjectState::Constant);

    let classes = envs[0].class_list.clone();
    for mass in [1.0, 0.5, 0.0] {
        let omq = evaluate(&report(&changes, &classes, mass), &envs, TaskType::Scd).unwrap().score;
        println!("state mass {mass:.1} on the true state: OMQ {omq:.6}");
    }
}
