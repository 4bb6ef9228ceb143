// A student living in another process, driven over the line protocol.
//
// Run without arguments, the example starts a copy of itself with
// `--serve` as the student. Any program that answers the protocol on
// stdin/stdout works the same way, e.g. `again serve-student`.

use std::collections::HashMap;
use std::io;

use again_core::harness::{run_condition, Condition, ExperimentConfig, StudentSpec};
use again_core::space::TaskParams;
use again_core::student::{protocol, ExternalSpec, ResetMode, Student};

/// Counts visits per coarse cell; reward grows with practice on easy tasks.
#[derive(Default)]
pub struct Tabular {
    visits: HashMap<(i64, i64), u32>,
}

impl Tabular {
    fn cell(p: &TaskParams) -> (i64, i64) {
        ((p.0[0] * 2.0) as i64, (p.0[1] * 2.0) as i64)
    }

    fn score(&self, p: &TaskParams) -> f64 {
        let practice = *self.visits.get(&Self::cell(p)).unwrap_or(&0) as f64;
        let ease = (p.0[1] / 6.0 - p.0[0] / 3.0 + 1.0) / 2.0;
        -150.0 + 500.0 * ease * (1.0 - (-practice / 20.0).exp())
    }
}

impl Student for Tabular {
    fn train_on(&mut self, p: &TaskParams) -> again_core::Result<f64> {
        *self.visits.entry(Self::cell(p)).or_default() += 1;
        Ok(self.score(p))
    }

    fn evaluate(&mut self, p: &TaskParams) -> again_core::Result<f64> {
        Ok(self.score(p))
    }

    fn reset(&mut self, mode: ResetMode) -> again_core::Result<()> {
        if mode == ResetMode::Scratch {
            self.visits.clear();
        }
        Ok(())
    }
}

pub fn run_example_with(student: ExternalSpec) -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        budget: 2000,
        checkpoint_every: 500,
        student: StudentSpec::External(student),
        ..ExperimentConfig::default()
    };
    for condition in [Condition::Random, Condition::AlpGmm] {
        let run = run_condition(&config, condition, 0)?;
        let last = run.checkpoints.last().map_or(0.0, |c| c.mastery);
        println!("{condition}: {:?}, {:.0}% mastered", run.status, 100.0 * last);
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let me = std::env::current_exe()?;
    run_example_with(ExternalSpec::new(me.display().to_string(), ["--serve"]))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::args().any(|a| a == "--serve") {
        protocol::serve(&mut Tabular::default(), io::stdin().lock(), io::stdout().lock())?;
        return Ok(());
    }
    run_example()
}
