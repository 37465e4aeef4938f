// Sweep three environments with a bundled agent and read back the profile.
//
// The example doubles as the submitted solution: the batch launches this
// same executable with `agent` as its only argument.

use taskbench::agents::PassiveMapper;
use taskbench::batch::{run_batch, BatchSpec};
use taskbench::client::run_agent_from_env;
use taskbench::pool::Pools;

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn sweep(command: &str) {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    let dir = tempfile::tempdir().unwrap();
    let mut spec = BatchSpec::new(
        "semantic_slam:passive:ground_truth",
        "carter",
        &["house:1", "house:2", "office:1"],
        command,
        dir.path(),
    );
    spec.seed = 11;
    spec.port = 0;

    let profile = run_batch(&spec, &pools, |entry| {
        println!("{} (seed {}): {:?}", entry.env_id, entry.seed, entry.score);
    })
    .expect("at least one entry scores");
    println!("mean OMQ {:.4} across {} environments", profile.mean_score.unwrap(), profile.entries.len());
    let written = std::fs::read_to_string(dir.path().join("profile.json")).unwrap();
    println!("profile.json is {} bytes", written.len());
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("agent") {
        run_agent_from_env(&mut PassiveMapper::default()).expect("agent run");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    sweep(&format!("'{}' agent", exe.display()));
}
