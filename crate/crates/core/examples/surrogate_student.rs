// The surrogate walker: competence spreads outward from easy tasks, and
// time spent on tasks it cannot learn makes later learning slower.

use again_core::space::{TaskParams, TaskSpace};
use again_core::student::{ResetMode, Student, StudentProfile, SurrogateStudent};

fn show(s: &SurrogateStudent) {
    let grid = s.config().grid;
    for row in (0..grid).step_by(2).rev() {
        let line: String = (0..grid)
            .step_by(2)
            .map(|col| match s.competence()[row * grid + col] {
                c if c > 0.8 => '#',
                c if c > 0.3 => '+',
                c if c > 0.0 => '.',
                _ => ' ',
            })
            .collect();
        println!("    |{line}|");
    }
}

fn episodes_to_learn(s: &mut SurrogateStudent, task: &TaskParams) -> Result<u32, Box<dyn std::error::Error>> {
    let mut n = 0;
    while s.competence_at(task)? < 0.9 {
        s.train_on(task)?;
        n += 1;
    }
    Ok(n)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let space = TaskSpace::stump_tracks();
    let mut student = SurrogateStudent::with_profile(space.clone(), StudentProfile::Strong, 1)?;
    println!("learnable share of the space: {:.0}%", 100.0 * student.learnable_fraction());

    // walk the diagonal from low, widely spaced stumps toward high, dense ones
    for i in 0..3000 {
        let d = 0.5 * i as f64 / 3000.0;
        student.train_on(&space.denormalize(&TaskParams(vec![d, 1.0 - d]))?)?;
    }
    println!("after a 3000-episode diagonal walk (height right, spacing up):");
    show(&student);

    let easy = TaskParams(vec![0.3, 5.5]);
    let impossible = TaskParams(vec![2.9, 0.3]);
    student.reset(ResetMode::Scratch)?;
    println!("fresh student learns an easy task in {} episodes", episodes_to_learn(&mut student, &easy)?);
    student.reset(ResetMode::Scratch)?;
    for _ in 0..300 {
        student.train_on(&impossible)?;
    }
    println!(
        "after 300 impossible episodes (plasticity {:.2}) it needs {}",
        student.plasticity(),
        episodes_to_learn(&mut student, &easy)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
