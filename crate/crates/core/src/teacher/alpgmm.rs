use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProposalSlot, Teacher};
use crate::alp::{AlpTracker, RewardSpan};
use crate::curriculum::{CurriculumTrace, TraceMeta, TraceRecorder};
use crate::error::{Error, Result};
use crate::gmm::{sample_component_by_lp, sample_task_from, select_best_k, EmConfig, GmmSnapshot};
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlpGmmConfig {
    /// Episodes between refits, and the window capacity.
    pub fit_rate: usize,
    pub k_max: usize,
    /// Probability of a uniform exploration task once the bootstrap is over.
    pub rho_rnd: f64,
    pub reward_span: RewardSpan,
    /// Propose uniform tasks for the first `fit_rate` episodes.
    pub bootstrap: bool,
    pub em: EmConfig,
}

impl Default for AlpGmmConfig {
    fn default() -> Self {
        Self {
            fit_rate: 250,
            k_max: 10,
            rho_rnd: 0.1,
            reward_span: RewardSpan::default(),
            bootstrap: true,
            em: EmConfig::default(),
        }
    }
}

impl AlpGmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(Error::Config(format!("k_max must be at least 2, got {}", self.k_max)));
        }
        if self.fit_rate < self.k_max {
            return Err(Error::Config(format!(
                "fit rate {} must be at least k_max {}",
                self.fit_rate, self.k_max
            )));
        }
        if !(0.0..=1.0).contains(&self.rho_rnd) {
            return Err(Error::Config(format!("rho_rnd {} outside [0,1]", self.rho_rnd)));
        }
        self.reward_span.validate()
    }

    pub(crate) fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// History, window, periodic refits and trace recording, without any
/// proposal policy. Shared by the standalone teacher and AGAIN.
#[derive(Debug, Clone)]
pub struct AlpGmmCore {
    space: TaskSpace,
    config: AlpGmmConfig,
    tracker: AlpTracker,
    mixture: Option<GmmSnapshot>,
    observed: u64,
    fit_rng: RandomStream,
    recorder: TraceRecorder,
    last_fit_points: Option<Vec<Vec<f64>>>,
}

impl AlpGmmCore {
    pub fn new(space: TaskSpace, config: AlpGmmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let meta = TraceMeta {
            lower: space.lower().to_vec(),
            upper: space.upper().to_vec(),
            reward_span: config.reward_span,
            config_hash: config.digest(),
            seed,
            fit_rate: config.fit_rate,
        };
        Ok(Self {
            tracker: AlpTracker::new(space.dim(), config.fit_rate, config.reward_span)?,
            space,
            config,
            mixture: None,
            observed: 0,
            fit_rng: rng::stream(seed, rng::FITS),
            recorder: TraceRecorder::new(meta),
            last_fit_points: None,
        })
    }

    pub fn set_config_hash(&mut self, hash: String) {
        let mut meta = self.recorder.to_trace().meta;
        meta.config_hash = hash;
        let mut fresh = TraceRecorder::new(meta);
        // only ever called before the first fit
        debug_assert!(self.recorder.is_empty());
        std::mem::swap(&mut self.recorder, &mut fresh);
    }

    pub fn config(&self) -> &AlpGmmConfig {
        &self.config
    }

    pub fn space(&self) -> &TaskSpace {
        &self.space
    }

    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn mixture(&self) -> Option<&GmmSnapshot> {
        self.mixture.as_ref()
    }

    pub fn tracker(&self) -> &AlpTracker {
        &self.tracker
    }

    /// Rows the latest mixture was fitted on.
    pub fn last_fit_points(&self) -> Option<&[Vec<f64>]> {
        self.last_fit_points.as_deref()
    }

    pub fn trace(&self) -> CurriculumTrace {
        self.recorder.to_trace()
    }

    /// Records the episode; refits on the window every `fit_rate` observations.
    /// Returns whether a refit happened.
    pub fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<bool> {
        let p_norm = self.space.normalize(params)?;
        self.tracker.record(p_norm.values(), reward)?;
        self.recorder.push_reward(reward);
        self.observed += 1;
        if !self.observed.is_multiple_of(self.config.fit_rate as u64) {
            return Ok(false);
        }
        let points = self.tracker.window().rows();
        let selection = select_best_k(&points, self.config.k_max, &self.config.em, &mut self.fit_rng)?;
        let snapshot = selection.best.into_snapshot(self.observed);
        self.recorder.push_snapshot(snapshot.clone());
        self.mixture = Some(snapshot);
        self.last_fit_points = Some(points);
        Ok(true)
    }
}

/// The ALP-GMM teacher: uniform bootstrap, then LP-proportional sampling
/// over the latest mixture with `rho_rnd` uniform exploration.
#[derive(Debug, Clone)]
pub struct AlpGmmTeacher {
    core: AlpGmmCore,
    rng: RandomStream,
    slot: ProposalSlot,
}

impl AlpGmmTeacher {
    pub fn new(space: TaskSpace, config: AlpGmmConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            core: AlpGmmCore::new(space, config, seed)?,
            rng: rng::stream(seed, rng::PROPOSALS),
            slot: ProposalSlot::default(),
        })
    }

    pub fn core(&self) -> &AlpGmmCore {
        &self.core
    }

    pub fn core_mut(&mut self) -> &mut AlpGmmCore {
        &mut self.core
    }

    pub fn trace(&self) -> CurriculumTrace {
        self.core.trace()
    }

    pub fn in_bootstrap(&self) -> bool {
        self.core.config.bootstrap && self.core.observed < self.core.config.fit_rate as u64
    }

    fn draw(&mut self) -> Result<TaskParams> {
        let space = &self.core.space;
        if self.in_bootstrap() {
            return Ok(space.sample_uniform(&mut self.rng));
        }
        let explore = self.rng.random::<f64>() < self.core.config.rho_rnd;
        match &self.core.mixture {
            Some(mix) if !explore => {
                let idx = sample_component_by_lp(&mix.components, &mut self.rng)?;
                sample_task_from(&mix.components[idx], space, &mut self.rng)
            }
            _ => Ok(space.sample_uniform(&mut self.rng)),
        }
    }
}

impl Teacher for AlpGmmTeacher {
    fn propose(&mut self) -> Result<TaskParams> {
        let p = self.draw()?;
        self.slot.open(&p)?;
        Ok(p)
    }

    fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<()> {
        self.slot.close(params)?;
        self.core.observe(params, reward)?;
        Ok(())
    }

    fn snapshot(&self) -> Option<&GmmSnapshot> {
        self.core.mixture()
    }

    fn name(&self) -> &str {
        "ALP-GMM"
    }
}
