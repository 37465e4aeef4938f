// Serve a session over HTTP and drive it with the client API by hand.

use taskbench::client::ClientHandle;
use taskbench::pool::Pools;
use taskbench::sim::SensorFrame;
use taskbench::supervisor::Supervisor;

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn main() {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    let config = pools
        .validate_selection("semantic_slam:active:ground_truth", "sim_bot", &["office:1"], 0)
        .unwrap();
    let supervisor = Supervisor::serve(config, "127.0.0.1:0").expect("port 0 always binds");
    println!("supervisor on {}", supervisor.addr());

    let handle = ClientHandle::connect(&supervisor.addr().to_string()).unwrap();
    println!("task {} sensors {:?} actuators {:?}", handle.task(), handle.sensors(), handle.actuators());

    for step in 0..3 {
        let observations = handle.observe().unwrap();
        if let Some(SensorFrame::Pose { pose }) = observations.get("pose") {
            println!("step {step}: pose ({:.2}, {:.2}, {:.2})", pose.x, pose.y, pose.yaw);
        }
        let outcome = handle.act("move_distance", Some(0.5)).unwrap();
        println!("        {:?} after {:.2} m", outcome.status, outcome.distance_travelled);
    }

    // Passive-only actions are refused in an active task.
    match handle.act("move_next", None) {
        Err(e) => println!("move_next refused: {e}"),
        Ok(o) => println!("unexpected outcome {o:?}"),
    }

    handle.reset().unwrap();
    println!("after reset, collided: {}", handle.is_collided().unwrap());
    supervisor.shutdown();
}
