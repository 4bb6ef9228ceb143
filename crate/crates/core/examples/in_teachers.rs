// How the three IN variants walk through an expert curriculum.

use again_core::curriculum::FilteredCurriculum;
use again_core::gmm::{GmmSnapshot, WeightedGaussian};
use again_core::harness::ExperimentConfig;
use again_core::teacher::{ExpertStepper, InVariant};

fn snapshot(x: f64, lp: f64, fit_episode: u64) -> GmmSnapshot {
    let cov = vec![0.01, 0.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0, 0.001];
    GmmSnapshot {
        components: vec![WeightedGaussian::new(vec![x, 1.0 - x, lp], cov, 1.0)],
        fit_episode,
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let curriculum = FilteredCurriculum {
        snapshots: vec![snapshot(0.1, 0.3, 250), snapshot(0.2, 0.2, 500), snapshot(0.3, 0.15, 750)],
        thresholds: vec![50.0, 120.0, 200.0],
    };
    let config = ExperimentConfig::default();

    // a student whose reward creeps up by one point per episode
    for variant in [InVariant::Pool, InVariant::Time, InVariant::Reward] {
        let mut stepper = ExpertStepper::new(curriculum.clone(), config.expert(variant))?;
        let mut moves = Vec::new();
        for episode in 0..600 {
            let before = stepper.index();
            stepper.observe(episode as f64 - 20.0);
            if stepper.index() != before {
                moves.push(format!("{}->{} at {}", before, stepper.index(), episode + 1));
            }
        }
        println!(
            "IN-{}: {} components in play, moves [{}]",
            variant.letter(),
            stepper.current_mixture().len(),
            moves.join(", ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
