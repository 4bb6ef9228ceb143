// A small multi-seed sweep written to disk, then summarized with
// Welch's t-test against ALP-GMM.

use again_core::harness::{self, Condition, ExperimentConfig, Seeds};
use again_core::stats::welch_t_test;
use again_core::student::ResetMode;
use again_core::teacher::InVariant;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        budget: 4000,
        checkpoint_every: 1000,
        seeds: Seeds::Count(4),
        conditions: vec![
            Condition::AlpGmm,
            Condition::Again(InVariant::Reward, ResetMode::Scratch),
            Condition::Random,
        ],
        ..ExperimentConfig::default()
    };
    let results = harness::sweep(&config)?;
    let out = std::env::temp_dir().join("again-sweep-example");
    harness::emit_results(&results, Some(&config), &out)?;

    for row in harness::report(&out)? {
        let p = row.p_vs_alpgmm.map_or("-".to_string(), |p| format!("{p:.3}{}", row.marker));
        println!("{:<10} mean {:.3}  p {p}", row.condition.to_string(), row.mean.unwrap_or(0.0));
    }

    let finals = |c: Condition| -> Vec<f64> {
        results.iter().filter(|r| r.condition == c).filter_map(|r| r.final_mastery()).collect()
    };
    let w = welch_t_test(&finals(Condition::AlpGmm), &finals(Condition::Random))?;
    println!("ALP-GMM vs Random: t = {:.2}, df = {:.1}, p = {:.2e}", w.t, w.df, w.p);
    println!("results in {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
