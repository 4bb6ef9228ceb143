// ALP-GMM teaching a surrogate walker from scratch.

use again_core::harness::{evaluate, ExperimentConfig};
use again_core::student::{Student, StudentProfile, SurrogateStudent};
use again_core::teacher::{AlpGmmTeacher, Teacher};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::default();
    let mut teacher = AlpGmmTeacher::new(config.space.clone(), config.alpgmm(), 3)?;
    let mut student = SurrogateStudent::with_profile(config.space.clone(), StudentProfile::Strong, 3)?;
    let tests = config.test_set.points(&config.space);

    for episode in 1..=4000 {
        let task = teacher.propose()?;
        let reward = student.train_on(&task)?;
        teacher.observe(&task, reward)?;
        if episode % 1000 == 0 {
            let mastery = evaluate(&mut student, &tests, config.test_set.threshold)?;
            let k = teacher.snapshot().map_or(0, |s| s.len());
            println!("episode {episode:>5}: {k} components, {:.0}% of test tasks mastered", 100.0 * mastery);
        }
    }
    let mix = teacher.snapshot().expect("fitted after the bootstrap");
    let space = &config.space;
    for g in &mix.components {
        let center = space.denormalize(&g.mean[..2].to_vec().into())?;
        println!("  lp {:.3} at height {:.2}, spacing {:.2}", g.lp, center.0[0], center.0[1]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
