use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ProposalSlot, Teacher};
use crate::error::{Error, Result};
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

/// Hand-made expert curriculum: a fixed-width Gaussian walked from the
/// easiest corner to the hardest in equal increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Raw coordinates of the easiest tasks.
    pub easy: Vec<f64>,
    /// Raw coordinates of the hardest tasks.
    pub hard: Vec<f64>,
    /// Standard deviation in normalized units.
    pub std: f64,
    pub increments: usize,
    pub threshold: f64,
    pub reward_memory: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        // stump tracks: low and widely spaced stumps first
        Self {
            easy: vec![0.0, 6.0],
            hard: vec![3.0, 0.0],
            std: 0.05,
            increments: 50,
            threshold: 230.0,
            reward_memory: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleTeacher {
    space: TaskSpace,
    config: OracleConfig,
    easy: Vec<f64>,
    hard: Vec<f64>,
    step: usize,
    window: VecDeque<f64>,
    rng: RandomStream,
    slot: ProposalSlot,
}

impl OracleTeacher {
    pub fn new(space: TaskSpace, config: OracleConfig, seed: u64) -> Result<Self> {
        if config.increments == 0 || config.reward_memory == 0 || !(config.std >= 0.0) {
            return Err(Error::Config("oracle needs positive increments, memory and std".into()));
        }
        let easy = space.normalize(&TaskParams(config.easy.clone()))?.0;
        let hard = space.normalize(&TaskParams(config.hard.clone()))?.0;
        Ok(Self {
            space,
            window: VecDeque::with_capacity(config.reward_memory),
            config,
            easy,
            hard,
            step: 0,
            rng: rng::stream(seed, rng::PROPOSALS),
            slot: ProposalSlot::default(),
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Current Gaussian center in normalized coordinates.
    pub fn center(&self) -> Vec<f64> {
        let t = self.step as f64 / self.config.increments as f64;
        self.easy.iter().zip(&self.hard).map(|(e, h)| e + t * (h - e)).collect()
    }
}

impl Teacher for OracleTeacher {
    fn propose(&mut self) -> Result<TaskParams> {
        let x: Vec<f64> = self
            .center()
            .into_iter()
            .map(|c| c + self.config.std * self.rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p = self.space.clip(&self.space.denormalize(&TaskParams(x))?)?;
        self.slot.open(&p)?;
        Ok(p)
    }

    fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<()> {
        self.slot.close(params)?;
        if self.window.len() == self.config.reward_memory {
            self.window.pop_front();
        }
        self.window.push_back(reward);
        if self.window.len() == self.config.reward_memory {
            let mean = self.window.iter().sum::<f64>() / self.window.len() as f64;
            if mean >= self.config.threshold {
                self.step = (self.step + 1).min(self.config.increments);
                self.window.clear();
            }
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "Oracle"
    }
}
