// Records an ALP-GMM run as a trace, saves it and distills the expert
// curriculum the IN teachers replay.

use again_core::curriculum::CurriculumTrace;
use again_core::harness::ExperimentConfig;
use again_core::student::{Student, StudentProfile, SurrogateStudent};
use again_core::teacher::{AlpGmmTeacher, Teacher};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::default();
    let mut teacher = AlpGmmTeacher::new(config.space.clone(), config.alpgmm(), 11)?;
    let mut student = SurrogateStudent::with_profile(config.space.clone(), StudentProfile::Strong, 11)?;
    for _ in 0..3000 {
        let task = teacher.propose()?;
        let reward = student.train_on(&task)?;
        teacher.observe(&task, reward)?;
    }

    let path = std::env::temp_dir().join("again-distill-example.json");
    teacher.trace().save(&path)?;
    let trace = CurriculumTrace::load_for(&path, &config.space)?;
    std::fs::remove_file(&path)?;

    let curriculum = trace.filter(config.teacher.delta_lp);
    println!(
        "{} snapshots, {} survive the lp >= {} filter",
        trace.len(),
        curriculum.len(),
        config.teacher.delta_lp
    );
    for (snap, threshold) in curriculum.snapshots.iter().zip(&curriculum.thresholds) {
        let lps: Vec<String> = snap.components.iter().map(|c| format!("{:.2}", c.lp)).collect();
        println!("  fit at {:>5}: lp [{}], reward threshold {threshold:.1}", snap.fit_episode, lps.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
