use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use again_core::curriculum::CurriculumTrace;
use again_core::harness::{self, Condition, ExperimentConfig, RunResult, Seeds};
use again_core::space::TaskSpace;
use again_core::student::{protocol, EchoStudent, Student, StudentProfile, SurrogateStudent};
use again_core::Result;

#[derive(Parser)]
#[command(name = "again", version, about = "Curriculum teachers for continuous task spaces")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override the budget in episodes.
    #[arg(long)]
    budget: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(b) = self.budget {
            config.budget = b;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one condition for one seed.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        condition: Condition,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Result directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Save the preliminary-stage trace (or the ALP-GMM trace) here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Skip the preliminary stage and distill the curriculum from this trace.
        #[arg(long)]
        trace_in: Option<PathBuf>,
    },
    /// Run every configured condition over every seed.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Override the seeds with `0..n`.
        #[arg(long)]
        seeds: Option<u64>,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(short, long)]
        jobs: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Show the expert curriculum distilled from a trace.
    Distill {
        trace: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        delta_lp: f64,
        /// Write the filtered curriculum as a trace file instead of a listing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild summary and curve CSVs of a result directory.
    Report { dir: PathBuf },
    /// Serve a student over the line protocol on stdin/stdout.
    ServeStudent {
        #[arg(long, default_value = "weak")]
        profile: StudentProfile,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reward is the first task coordinate.
        #[arg(long)]
        echo: bool,
    },
}

fn print_summary(rows: &[harness::SummaryRow]) {
    println!("{:<20} {:>5} {:>7} {:>9} {:>9} {:>11}", "condition", "runs", "failed", "mean", "std", "p vs ALP-GMM");
    for r in rows {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let p = r.p_vs_alpgmm.map_or_else(|| "-".to_string(), |p| format!("{p:.2e}{}", r.marker));
        println!(
            "{:<20} {:>5} {:>7} {:>9} {:>9} {:>11}",
            r.condition.to_string(),
            r.runs,
            r.failed,
            fmt(r.mean),
            fmt(r.std),
            p
        );
    }
}

fn finish(results: &[RunResult]) -> ExitCode {
    let failed = results.iter().filter(|r| !r.completed()).count();
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see manifest.json");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, condition, seed, out, trace_out, trace_in } => {
            let mut config = config.load()?;
            config.conditions = vec![condition];
            config.seeds = Seeds::List(vec![seed]);
            let result = match trace_in {
                Some(path) => {
                    let trace = CurriculumTrace::load_for(path, &config.space)?;
                    harness::run_stage_two(&config, condition, seed, trace)?
                }
                None => harness::run_condition(&config, condition, seed)?,
            };
            if let (Some(path), Some(trace)) = (trace_out, &result.trace) {
                trace.save(path)?;
            }
            let results = [result];
            harness::emit_results(&results, Some(&config), &out)?;
            if let Some(m) = results[0].final_mastery() {
                println!("{condition} seed {seed}: final mastery {:.2}%", 100.0 * m);
            }
            Ok(finish(&results))
        }
        Command::Sweep { config, seeds, jobs, out } => {
            let mut config = config.load()?;
            if let Some(n) = seeds {
                config.seeds = Seeds::Count(n);
            }
            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| again_core::Error::Config(e.to_string()))?;
            }
            let results = harness::sweep(&config)?;
            harness::emit_results(&results, Some(&config), &out)?;
            print_summary(&harness::summarize(&results));
            Ok(finish(&results))
        }
        Command::Distill { trace, delta_lp, out } => {
            let trace = CurriculumTrace::load(trace)?;
            let filtered = trace.filter(delta_lp);
            println!(
                "{} of {} snapshots kept, {} components",
                filtered.len(),
                trace.len(),
                filtered.component_count()
            );
            if let Some(path) = out {
                filtered.into_trace(trace.meta.clone()).save(path)?;
                return Ok(ExitCode::SUCCESS);
            }
            let space = TaskSpace::new(trace.meta.lower.clone(), trace.meta.upper.clone())?;
            for (snap, threshold) in filtered.snapshots.iter().zip(&filtered.thresholds) {
                println!("episode {:>7}  threshold {:>8.2}", snap.fit_episode, threshold);
                for c in &snap.components {
                    let d = space.dim();
                    let center = space.denormalize(&c.mean[..d].to_vec().into())?;
                    let coords: Vec<String> = center.values().iter().map(|x| format!("{x:.3}")).collect();
                    println!("    lp {:.3}  center [{}]", c.lp, coords.join(", "));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let rows = harness::report(&dir)?;
            print_summary(&rows);
            Ok(ExitCode::SUCCESS)
        }
        Command::ServeStudent { profile, seed, echo } => {
            let stdin = io::stdin().lock();
            let stdout = BufWriter::new(io::stdout().lock());
            let mut student: Box<dyn Student> = if echo {
                Box::new(EchoStudent)
            } else {
                Box::new(SurrogateStudent::with_profile(TaskSpace::stump_tracks(), profile, seed)?)
            };
            protocol::serve(&mut student, stdin, stdout)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
