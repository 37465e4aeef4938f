// Drive the simulator directly: sensing, blocked moves and trajectory playback.

use taskbench::pool::{ControlMode, Localisation, Pools};
use taskbench::sim::{MotionCommand, SensorFrame, World};

const POOLS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../pools");

fn main() {
    let pools = Pools::load(POOLS).expect("bundled pools load");
    let env = pools.environment("house:1").unwrap().clone();
    let robot = pools.robot("carter").unwrap().clone();
    let mut world = World::new(env, robot, Localisation::Noisy, 42).expect("valid world");

    if let Ok(SensorFrame::Laser { laser }) = world.sense("laser") {
        let ahead = laser.iter().min_by(|a, b| a[0].abs().total_cmp(&b[0].abs())).unwrap();
        println!("{} beams, {:.2} m free ahead", laser.len(), ahead[1]);
    }

    // The partition at x = 4 stops the robot short of the wall.
    let outcome = world.step(MotionCommand::move_distance(5.0), ControlMode::Active).unwrap();
    println!(
        "asked for 5 m, travelled {:.2} m ({:?}); true pose {:?}, odometry {:?}",
        outcome.distance_travelled,
        outcome.status,
        world.pose_true(),
        world.pose_odom()
    );

    world.step(MotionCommand::rotate_angle(std::f64::consts::PI), ControlMode::Active).unwrap();
    if let Ok(SensorFrame::ObjectGlimpse { glimpses }) = world.sense("object_glimpse") {
        for g in glimpses {
            println!("glimpsed {} at {:.2?} ({:.2} m away)", g.class, g.centroid, g.range);
        }
    }

    world.reset();
    let mut poses = 0;
    while !world.finished() {
        world.step(MotionCommand::move_next(), ControlMode::Passive).unwrap();
        poses += 1;
    }
    println!("trajectory replayed in {poses} steps, collided: {}", world.collided());
    println!("final state:\n{}", world.dump_yaml());
}
