// Score a hand-written object map and inspect the per-pair qualities.

use taskbench::eval::{evaluate, iou3d, summarise, Box3};
use taskbench::pool::{Pools, TaskType};
use taskbench::results::{EnvironmentDetails, ProposedObject, ResultsFile, TaskDetails};

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn one_hot(classes: &[String], class: &str, p: f64) -> Vec<f64> {
    classes.iter().map(|c| if c == class { p } else { 0.0 }).collect()
}

fn main() {
    let unit = |x| Box3 { centroid: [x, 0.0, 0.0], extent: [2.0, 2.0, 2.0] };
    println!("IoU of unit-offset cubes: {:.4}", iou3d(&unit(0.0), &unit(1.0)));

    let pools = Pools::load(POOLS).expect("bundled pools load");
    let env = pools.environment("office:1").unwrap().clone();
    let classes = env.class_list.clone();
    let mut results = ResultsFile {
        task_details: TaskDetails {
            name: "semantic_slam:passive:ground_truth".into(),
            results_format: "object_map".into(),
        },
        environment_details: vec![EnvironmentDetails { name: env.name.clone(), variant: env.variant }],
        class_list: classes.clone(),
        objects: Vec::new(),
    };
    for (i, gt) in env.objects.iter().enumerate() {
        // Unsure about the first object's class, slightly off on the second's position.
        let confidence = if i == 0 { 0.5 } else { 1.0 };
        let mut centroid = gt.centroid;
        if i == 1 {
            centroid[0] += 0.05;
        }
        results.objects.push(ProposedObject {
            label_probs: one_hot(&classes, &gt.class, confidence),
            centroid,
            extent: gt.extent,
            state_probs: None,
        });
    }
    // A confident plant where there is none.
    results.objects.push(ProposedObject {
        label_probs: one_hot(&classes, "plant", 1.0),
        centroid: [0.5, 3.5, 0.5],
        extent: [0.4, 0.4, 1.0],
        state_probs: None,
    });

    let report = evaluate(&results, &[env], TaskType::SemanticSlam).unwrap();
    for tp in &report.true_positives {
        println!(
            "proposal {} -> gt {}: label {:.3} spatial {:.3} overall {:.3}",
            tp.proposal, tp.gt, tp.quality.label_q, tp.quality.spatial_q, tp.quality.overall_q
        );
    }
    println!("false positives {:?}, false negatives {:?}", report.false_positives, report.false_negatives);
    println!("OMQ {:.4}", report.score);

    results.objects.truncate(3);
    let env = pools.environment("office:1").unwrap().clone();
    let cleaner = evaluate(&results, &[env], TaskType::SemanticSlam).unwrap();
    let summary = summarise(&[report, cleaner]).unwrap();
    println!("mean over both maps: {:.4}", summary.mean_score);
}
