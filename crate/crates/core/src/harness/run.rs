use rayon::prelude::*;

use super::{Condition, ExperimentConfig, StudentSpec};
use crate::curriculum::CurriculumTrace;
use crate::error::{Error, Result};
use crate::rng;
use crate::space::TaskParams;
use crate::student::{ExternalStudent, ResetMode, Student, SurrogateStudent};
use crate::teacher::{AgainTeacher, AlpGmmTeacher, InTeacher, OracleTeacher, RandomTeacher, Teacher};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Training episodes consumed so far, across both stages.
    pub episode: u64,
    /// 1 for single-stage runs and preliminary stages, 2 after the switch.
    pub stage: u8,
    pub mastery: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub condition: Condition,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub status: RunStatus,
    /// The expert curriculum was empty after filtering and the second stage
    /// fell back to a simpler teacher.
    pub degraded: bool,
    /// Training episodes actually run.
    pub episodes: u64,
    /// Preliminary-stage trace for two-stage runs, the full trace for ALP-GMM.
    pub trace: Option<CurriculumTrace>,
}

impl RunResult {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Mastery at the last checkpoint of a completed run.
    pub fn final_mastery(&self) -> Option<f64> {
        if !self.completed() {
            return None;
        }
        self.checkpoints.last().map(|c| c.mastery)
    }
}

/// Fraction of `test_set` on which the student's reward is strictly above `threshold`.
pub fn evaluate<S: Student + ?Sized>(student: &mut S, test_set: &[TaskParams], threshold: f64) -> Result<f64> {
    if test_set.is_empty() {
        return Ok(0.0);
    }
    let mut mastered = 0usize;
    for p in test_set {
        if student.evaluate(p)? > threshold {
            mastered += 1;
        }
    }
    Ok(mastered as f64 / test_set.len() as f64)
}

#[derive(Debug)]
enum StudentBox {
    Surrogate(SurrogateStudent),
    External(ExternalStudent),
}

impl StudentBox {
    fn try_clone(&self) -> Option<StudentBox> {
        match self {
            StudentBox::Surrogate(s) => Some(StudentBox::Surrogate(s.clone())),
            StudentBox::External(_) => None,
        }
    }

    fn as_surrogate(&self) -> Option<&SurrogateStudent> {
        match self {
            StudentBox::Surrogate(s) => Some(s),
            StudentBox::External(_) => None,
        }
    }
}

impl Student for StudentBox {
    fn train_on(&mut self, params: &TaskParams) -> Result<f64> {
        match self {
            StudentBox::Surrogate(s) => s.train_on(params),
            StudentBox::External(s) => s.train_on(params),
        }
    }

    fn evaluate(&mut self, params: &TaskParams) -> Result<f64> {
        match self {
            StudentBox::Surrogate(s) => s.evaluate(params),
            StudentBox::External(s) => s.evaluate(params),
        }
    }

    fn reset(&mut self, mode: ResetMode) -> Result<()> {
        match self {
            StudentBox::Surrogate(s) => s.reset(mode),
            StudentBox::External(s) => s.reset(mode),
        }
    }
}

/// State after the preliminary ALP-GMM stage. ALP-GMM runs and every
/// two-stage condition of a seed share it.
#[derive(Debug)]
struct StageOne {
    teacher: AlpGmmTeacher,
    student: StudentBox,
    checkpoints: Vec<Checkpoint>,
}

impl StageOne {
    fn try_clone(&self) -> Option<StageOne> {
        Some(StageOne {
            teacher: self.teacher.clone(),
            student: self.student.try_clone()?,
            checkpoints: self.checkpoints.clone(),
        })
    }
}

#[derive(Default)]
struct Outcome {
    checkpoints: Vec<Checkpoint>,
    degraded: bool,
    episodes: u64,
    trace: Option<CurriculumTrace>,
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    test_set: Vec<TaskParams>,
}

impl<'a> Runner<'a> {
    fn new(config: &'a ExperimentConfig) -> Self {
        Self {
            test_set: config.test_set.points(&config.space),
            config,
        }
    }

    fn spawn_student(&self, seed: u64) -> Result<StudentBox> {
        let student_seed = rng::child_seed(seed, rng::STUDENT);
        match &self.config.student {
            StudentSpec::External(spec) => Ok(StudentBox::External(ExternalStudent::spawn(spec)?)),
            spec @ StudentSpec::Surrogate { .. } => {
                let sc = spec.surrogate_config(self.config.reward_span).expect("surrogate spec");
                Ok(StudentBox::Surrogate(SurrogateStudent::new(self.config.space.clone(), sc, student_seed)?))
            }
        }
    }

    fn checkpoint(&self, student: &mut StudentBox, episode: u64, stage: u8, out: &mut Outcome) -> Result<()> {
        let mastery = evaluate(student, &self.test_set, self.config.test_set.threshold)?;
        out.checkpoints.push(Checkpoint { episode, stage, mastery });
        Ok(())
    }

    /// Trains episodes `from+1..=to`, evaluating on the checkpoint grid and at `to`.
    fn train(
        &self,
        teacher: &mut dyn Teacher,
        student: &mut StudentBox,
        from: u64,
        to: u64,
        stage: u8,
        out: &mut Outcome,
    ) -> Result<()> {
        let every = self.config.checkpoint_every;
        for episode in from + 1..=to {
            let params = teacher.propose()?;
            let reward = student.train_on(&params)?;
            teacher.observe(&params, reward)?;
            out.episodes += 1;
            if episode % every == 0 || episode == to {
                self.checkpoint(student, episode, stage, out)?;
            }
        }
        Ok(())
    }

    fn stage_one(&self, seed: u64, cache: &mut Option<StageOne>, out: &mut Outcome) -> Result<StageOne> {
        if let Some(cached) = cache.as_ref().and_then(StageOne::try_clone) {
            out.checkpoints.extend_from_slice(&cached.checkpoints);
            out.episodes += self.config.stage_one_budget();
            return Ok(cached);
        }
        let teacher_seed = rng::child_seed(seed, rng::STAGE_ONE_TEACHER);
        let mut teacher = AlpGmmTeacher::new(self.config.space.clone(), self.config.alpgmm(), teacher_seed)?;
        let mut student = self.spawn_student(seed)?;
        let start = out.checkpoints.len();
        self.checkpoint(&mut student, 0, 1, out)?;
        self.train(&mut teacher, &mut student, 0, self.config.stage_one_budget(), 1, out)?;
        let stage = StageOne {
            teacher,
            student,
            checkpoints: out.checkpoints[start..].to_vec(),
        };
        *cache = stage.try_clone();
        Ok(stage)
    }

    fn execute(&self, condition: Condition, seed: u64, cache: &mut Option<StageOne>, out: &mut Outcome) -> Result<()> {
        let config = self.config;
        let space = config.space.clone();
        let budget = config.budget;
        let half = config.stage_one_budget();
        let single_seed = rng::child_seed(seed, rng::SINGLE_STAGE_TEACHER);
        match condition {
            Condition::Random | Condition::Oracle => {
                let mut teacher: Box<dyn Teacher> = match condition {
                    Condition::Random => Box::new(RandomTeacher::new(space, single_seed)),
                    _ => Box::new(OracleTeacher::new(space, config.oracle.clone(), single_seed)?),
                };
                let mut student = self.spawn_student(seed)?;
                self.checkpoint(&mut student, 0, 1, out)?;
                self.train(teacher.as_mut(), &mut student, 0, budget, 1, out)?;
                self.self_check(&student, out);
            }
            Condition::AlpGmm => {
                let StageOne { mut teacher, mut student, .. } = self.stage_one(seed, cache, out)?;
                self.train(&mut teacher, &mut student, half, budget, 1, out)?;
                out.trace = Some(teacher.trace());
                self.self_check(&student, out);
            }
            Condition::In(_, mode) | Condition::Again(_, mode) => {
                let StageOne { teacher, mut student, .. } = self.stage_one(seed, cache, out)?;
                student.reset(mode)?;
                self.stage_two(condition, seed, teacher.trace(), student, out)?;
            }
        }
        Ok(())
    }

    fn stage_two(
        &self,
        condition: Condition,
        seed: u64,
        trace: CurriculumTrace,
        mut student: StudentBox,
        out: &mut Outcome,
    ) -> Result<()> {
        let config = self.config;
        let space = config.space.clone();
        let (Condition::In(variant, _) | Condition::Again(variant, _)) = condition else {
            unreachable!("single-stage condition {condition} has no second stage")
        };
        let curriculum = trace.filter(config.teacher.delta_lp);
        let stage_two_seed = rng::child_seed(seed, rng::STAGE_TWO_TEACHER);
        out.degraded = curriculum.is_empty();
        let mut next: Box<dyn Teacher> = match condition {
            Condition::Again(..) => Box::new(AgainTeacher::new(space, curriculum, config.again(variant), stage_two_seed)?),
            _ if curriculum.is_empty() => {
                log::warn!("{condition} seed {seed}: expert curriculum is empty, sampling uniformly");
                Box::new(RandomTeacher::new(space, stage_two_seed))
            }
            _ => Box::new(InTeacher::new(space, curriculum, config.expert(variant), stage_two_seed)?),
        };
        out.trace = Some(trace);
        let half = config.stage_one_budget();
        self.checkpoint(&mut student, half, 2, out)?;
        self.train(next.as_mut(), &mut student, half, config.budget, 2, out)?;
        self.self_check(&student, out);
        Ok(())
    }

    /// Surrogates never forget, so mastery within a stage must not drop.
    fn self_check(&self, student: &StudentBox, out: &Outcome) {
        if student.as_surrogate().is_none() {
            return;
        }
        for pair in out.checkpoints.windows(2) {
            if pair[0].stage == pair[1].stage && pair[1].mastery < pair[0].mastery {
                log::warn!(
                    "mastery dropped from {} to {} at episode {}",
                    pair[0].mastery,
                    pair[1].mastery,
                    pair[1].episode
                );
            }
        }
    }

    fn run(&self, condition: Condition, seed: u64, cache: &mut Option<StageOne>) -> RunResult {
        let mut out = Outcome::default();
        let status = match self.execute(condition, seed, cache, &mut out) {
            Ok(()) => RunStatus::Completed,
            Err(e) => {
                log::error!("{condition} seed {seed} failed: {e}");
                RunStatus::Failed(e.to_string())
            }
        };
        log::info!("{condition} seed {seed}: {} episodes", out.episodes);
        RunResult {
            condition,
            seed,
            checkpoints: out.checkpoints,
            status,
            degraded: out.degraded,
            episodes: out.episodes,
            trace: out.trace,
        }
    }
}

/// Runs one condition for one seed. Failures are reported in the result
/// together with the checkpoints reached before them.
pub fn run_condition(config: &ExperimentConfig, condition: Condition, seed: u64) -> Result<RunResult> {
    config.validate()?;
    Ok(Runner::new(config).run(condition, seed, &mut None))
}

/// Runs only the second stage of a scratch-mode two-stage condition, with a
/// fresh student and the curriculum distilled from `trace`. Episodes are
/// numbered as in a full run, starting at half the budget.
pub fn run_stage_two(
    config: &ExperimentConfig,
    condition: Condition,
    seed: u64,
    trace: CurriculumTrace,
) -> Result<RunResult> {
    config.validate()?;
    if condition.reset_mode() != Some(ResetMode::Scratch) {
        return Err(Error::Config(format!(
            "{condition} needs the preliminary student; only scratch two-stage conditions can start from a trace"
        )));
    }
    trace.check_space(&config.space)?;
    let runner = Runner::new(config);
    let mut out = Outcome::default();
    let status = match runner
        .spawn_student(seed)
        .and_then(|student| runner.stage_two(condition, seed, trace.clone(), student, &mut out))
    {
        Ok(()) => RunStatus::Completed,
        Err(e) => RunStatus::Failed(e.to_string()),
    };
    Ok(RunResult {
        condition,
        seed,
        checkpoints: out.checkpoints,
        status,
        degraded: out.degraded,
        episodes: out.episodes,
        trace: out.trace.or(Some(trace)),
    })
}

/// Runs every configured condition for every seed, seeds in parallel.
/// Results are ordered by condition, then seed.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    let runner = Runner::new(config);
    let seeds = config.seeds.to_vec();
    let per_seed: Vec<Vec<RunResult>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut cache = None;
            config
                .conditions
                .iter()
                .map(|&condition| runner.run(condition, seed, &mut cache))
                .collect()
        })
        .collect();
    let mut columns: Vec<_> = per_seed.into_iter().map(Vec::into_iter).collect();
    let mut results = Vec::with_capacity(seeds.len() * config.conditions.len());
    for _ in &config.conditions {
        results.extend(columns.iter_mut().filter_map(Iterator::next));
    }
    Ok(results)
}
