// The two-stage pipeline for one seed: ALP-GMM first, then AGAIN-R and
// IN-R built from its trace, with and without a fresh student.

use again_core::harness::{run_condition, Condition, ExperimentConfig};
use again_core::student::ResetMode;
use again_core::teacher::InVariant;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        budget: 8000,
        checkpoint_every: 1000,
        ..ExperimentConfig::default()
    };
    let conditions = [
        Condition::AlpGmm,
        Condition::Again(InVariant::Reward, ResetMode::Scratch),
        Condition::Again(InVariant::Reward, ResetMode::FineTune),
        Condition::In(InVariant::Reward, ResetMode::Scratch),
    ];
    for condition in conditions {
        let run = run_condition(&config, condition, 0)?;
        let curve: Vec<String> = run
            .checkpoints
            .iter()
            .map(|c| format!("{}:{:.0}", c.episode, 100.0 * c.mastery))
            .collect();
        println!("{:<20} {}", condition.to_string(), curve.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
