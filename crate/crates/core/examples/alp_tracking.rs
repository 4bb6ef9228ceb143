// Absolute learning progress on a scripted sequence of episodes.
//
// Each reward is compared with the reward of the closest earlier task.

use again_core::alp::{AlpTracker, RewardSpan};
use again_core::space::{TaskParams, TaskSpace};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let space = TaskSpace::stump_tracks();
    let mut tracker = AlpTracker::new(space.dim(), 250, RewardSpan::default())?;

    // (stump height, spacing) and the reward a walker got on it
    let episodes = [
        ([0.2, 5.5], -40.0),
        ([0.25, 5.4], 60.0), // same region, better: high progress
        ([2.8, 0.5], -120.0),
        ([2.7, 0.6], -118.0), // hard region, no change
        ([0.3, 5.2], 180.0),
        ([1.5, 3.0], 400.0), // above the span, clamped to 350
    ];
    println!("{:>5} {:>6} {:>6} {:>8} {:>6}", "ep", "height", "space", "reward", "alp");
    for (i, (raw, reward)) in episodes.iter().enumerate() {
        let p = space.normalize(&TaskParams(raw.to_vec()))?;
        let rec = tracker.record(p.values(), *reward)?;
        println!("{i:>5} {:>6.2} {:>6.2} {reward:>8.1} {:>6.3}", raw[0], raw[1], rec.alp_norm);
    }
    println!("clamped rewards: {}", tracker.clamped_rewards());
    print!("{}", tracker.history_csv(&space)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
