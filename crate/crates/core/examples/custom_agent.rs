// Write an agent against the three-method contract and score what it saves.

use std::path::Path;
use taskbench::agents::ObjectMapBuilder;
use taskbench::client::{run_agent, Action, Agent, AgentError, ClientHandle, Observations};
use taskbench::eval::evaluate_with_pools;
use taskbench::pool::Pools;
use taskbench::results::ResultsFile;
use taskbench::sim::ActionOutcome;
use taskbench::supervisor::Supervisor;

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

/// Spins on the spot in eighth turns and maps whatever it glimpses.
struct Spinner {
    turns: usize,
    map: ObjectMapBuilder,
}

impl Agent for Spinner {
    fn is_done(&mut self, observations: &Observations, _last: Option<&ActionOutcome>) -> bool {
        self.map.ingest(observations);
        self.turns == 8
    }

    fn pick_action(&mut self, _observations: &Observations, _actuators: &[String]) -> Result<Action, AgentError> {
        self.turns += 1;
        Ok(Action::new("rotate_angle", Some(std::f64::consts::FRAC_PI_4)))
    }

    fn save_result(&mut self, path: &Path, results: ResultsFile) -> Result<(), AgentError> {
        self.map.build(results).write_atomic(path)?;
        Ok(())
    }
}

fn main() {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    let config = pools
        .validate_selection("semantic_slam:active:ground_truth", "sim_bot", &["house:1"], 0)
        .unwrap();
    let supervisor = Supervisor::serve(config, "127.0.0.1:0").unwrap();
    let handle = ClientHandle::connect(&supervisor.addr().to_string()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spinner.json");
    let mut agent = Spinner { turns: 0, map: ObjectMapBuilder::default() };
    let stats = run_agent(&handle, &mut agent, &path).unwrap();
    supervisor.shutdown();

    let results = ResultsFile::load(&path).unwrap();
    let report = evaluate_with_pools(&results, &pools).unwrap();
    println!(
        "{} actions, {} proposals: OMQ {:.3} (TP {}, FP {}, FN {})",
        stats.actions,
        results.objects.len(),
        report.score,
        report.true_positives.len(),
        report.false_positives.len(),
        report.false_negatives.len()
    );
}
