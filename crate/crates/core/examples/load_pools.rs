// Load the bundled pools, list what they offer and resolve a few selections.

use taskbench::pool::{PoolKind, Pools};

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn main() {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    for kind in PoolKind::ALL {
        println!("{kind}: {}", pools.list_options(kind).join(", "));
    }

    let config = pools
        .validate_selection("scd:passive:ground_truth", "sim_bot", &["house:1", "house:2"], 7)
        .expect("valid selection");
    println!(
        "resolved {} on {} with seed {} ({} scenes, eval method {})",
        config.task.name,
        config.env_id(),
        config.seed,
        config.scene_count(),
        config.eval_method
    );

    let attempts: [(&str, &str, &[&str]); 3] = [
        ("semantic_slam:active:ground_truth", "real_bot", &["house:1"]),
        ("scd:active:ground_truth", "sim_bot", &["house:1"]),
        ("semantic_slam:active:ground_truth", "sim_bot", &["garage:1"]),
    ];
    for (task, robot, envs) in attempts {
        let err = pools
            .validate_selection(task, robot, envs, 0)
            .expect_err("selection is rejected");
        println!("{task} / {robot} / {envs:?}: {err}");
    }
}
