//! Inferred-progress-niche teachers replaying a filtered curriculum.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ProposalSlot, Teacher};
use crate::curriculum::{FilteredCurriculum, REWARD_MEMORY};
use crate::error::{Error, Result};
use crate::gmm::{sample_component_by_lp, sample_task_from, WeightedGaussian};
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

/// How the replayed curriculum is stepped through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InVariant {
    /// All components of all snapshots as one constant mixture.
    Pool,
    /// A new snapshot every `period` episodes.
    Time,
    /// A new snapshot once the recent mean reward reaches the recorded threshold.
    Reward,
}

impl InVariant {
    pub fn letter(self) -> char {
        match self {
            InVariant::Pool => 'P',
            InVariant::Time => 'T',
            InVariant::Reward => 'R',
        }
    }
}

impl fmt::Display for InVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for InVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" | "pool" | "Pool" => Ok(InVariant::Pool),
            "T" | "t" | "time" | "Time" => Ok(InVariant::Time),
            "R" | "r" | "reward" | "Reward" => Ok(InVariant::Reward),
            other => Err(Error::Config(format!("unknown IN variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertConfig {
    pub variant: InVariant,
    /// Episodes per snapshot for the Time variant.
    pub period: usize,
    /// Reward window size for the Reward variant.
    pub reward_memory: usize,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            variant: InVariant::Reward,
            period: 250,
            reward_memory: REWARD_MEMORY,
        }
    }
}

/// Curriculum index bookkeeping shared by the IN teachers and AGAIN.
#[derive(Debug, Clone)]
pub struct ExpertStepper {
    curriculum: FilteredCurriculum,
    config: ExpertConfig,
    index: usize,
    episodes: u64,
    window: VecDeque<f64>,
    pool: Vec<WeightedGaussian>,
}

impl ExpertStepper {
    pub fn new(curriculum: FilteredCurriculum, config: ExpertConfig) -> Result<Self> {
        if curriculum.is_empty() {
            return Err(Error::EmptyCurriculum);
        }
        if config.period == 0 || config.reward_memory == 0 {
            return Err(Error::Config("IN period and reward memory must be positive".into()));
        }
        let pool = match config.variant {
            InVariant::Pool => curriculum
                .snapshots
                .iter()
                .flat_map(|s| s.components.iter().cloned())
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            curriculum,
            config,
            index: 0,
            episodes: 0,
            window: VecDeque::with_capacity(config.reward_memory),
            pool,
        })
    }

    pub fn variant(&self) -> InVariant {
        self.config.variant
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn curriculum(&self) -> &FilteredCurriculum {
        &self.curriculum
    }

    pub fn current_mixture(&self) -> &[WeightedGaussian] {
        match self.config.variant {
            InVariant::Pool => &self.pool,
            _ => &self.curriculum.snapshots[self.index].components,
        }
    }

    fn last_index(&self) -> usize {
        self.curriculum.len() - 1
    }

    /// Counts one episode; the index follows `min(episodes / period, |C| − 1)`.
    pub fn step_time(&mut self) {
        self.episodes += 1;
        let block = (self.episodes / self.config.period as u64) as usize;
        self.index = block.min(self.last_index());
    }

    /// Pushes a reward; once the window is full and its mean reaches the
    /// current threshold, advances (saturating) and clears the window.
    pub fn step_reward(&mut self, reward: f64) {
        self.episodes += 1;
        if self.window.len() == self.config.reward_memory {
            self.window.pop_front();
        }
        self.window.push_back(reward);
        if self.window.len() < self.config.reward_memory {
            return;
        }
        let mean = self.window.iter().sum::<f64>() / self.window.len() as f64;
        if mean >= self.curriculum.thresholds[self.index] {
            self.index = (self.index + 1).min(self.last_index());
            self.window.clear();
        }
    }

    /// Advances according to the variant's stepping rule.
    pub fn observe(&mut self, reward: f64) {
        match self.config.variant {
            InVariant::Pool => self.episodes += 1,
            InVariant::Time => self.step_time(),
            InVariant::Reward => self.step_reward(reward),
        }
    }
}

/// IN-P / IN-T / IN-R: LP-proportional sampling from the current expert mixture.
#[derive(Debug, Clone)]
pub struct InTeacher {
    space: TaskSpace,
    stepper: ExpertStepper,
    rng: RandomStream,
    slot: ProposalSlot,
    name: String,
}

impl InTeacher {
    pub fn new(space: TaskSpace, curriculum: FilteredCurriculum, config: ExpertConfig, seed: u64) -> Result<Self> {
        let name = format!("IN-{}", config.variant);
        Ok(Self {
            space,
            stepper: ExpertStepper::new(curriculum, config)?,
            rng: rng::stream(seed, rng::PROPOSALS),
            slot: ProposalSlot::default(),
            name,
        })
    }

    pub fn stepper(&self) -> &ExpertStepper {
        &self.stepper
    }
}

impl Teacher for InTeacher {
    fn propose(&mut self) -> Result<TaskParams> {
        let mix = self.stepper.current_mixture();
        let idx = sample_component_by_lp(mix, &mut self.rng)?;
        let p = sample_task_from(&mix[idx], &self.space, &mut self.rng)?;
        self.slot.open(&p)?;
        Ok(p)
    }

    fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<()> {
        self.slot.close(params)?;
        self.stepper.observe(reward);
        Ok(())
    }

    fn name(&self) -> &str {
        &self.name
    }
}
