use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AlpGmmConfig, AlpGmmCore, ExpertConfig, ExpertStepper, InVariant, ProposalSlot, Teacher};
use crate::curriculum::{CurriculumTrace, FilteredCurriculum};
use crate::error::{Error, Result};
use crate::gmm::{sample_component_by_lp, sample_task_from, GmmSnapshot, WeightedGaussian};
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgainConfig {
    pub expert: ExpertConfig,
    pub rho_low: f64,
    /// Inner ALP-GMM; its bootstrap flag and `rho_rnd` are ignored.
    pub alpgmm: AlpGmmConfig,
}

impl Default for AgainConfig {
    fn default() -> Self {
        Self {
            expert: ExpertConfig::default(),
            rho_low: 0.02,
            alpgmm: AlpGmmConfig {
                bootstrap: false,
                rho_rnd: 0.0,
                ..AlpGmmConfig::default()
            },
        }
    }
}

/// Where the last proposal came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Exploration,
    AlpGmm,
    Expert,
}

/// Samples from the union of a live low-exploration ALP-GMM mixture and the
/// current expert-curriculum mixture, selected by LP.
#[derive(Debug, Clone)]
pub struct AgainTeacher {
    space: TaskSpace,
    alpgmm: AlpGmmCore,
    expert: Option<ExpertStepper>,
    rho_low: f64,
    rng: RandomStream,
    slot: ProposalSlot,
    composite: Vec<WeightedGaussian>,
    /// Components `..split` of `composite` come from ALP-GMM.
    split: usize,
    stale: bool,
    last_origin: Option<Origin>,
    name: String,
}

impl AgainTeacher {
    /// An empty curriculum degrades to ALP-GMM alone, with a warning.
    pub fn new(space: TaskSpace, curriculum: FilteredCurriculum, config: AgainConfig, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.rho_low) {
            return Err(Error::Config(format!("rho_low {} outside [0,1]", config.rho_low)));
        }
        let inner = AlpGmmConfig {
            bootstrap: false,
            rho_rnd: 0.0,
            ..config.alpgmm
        };
        let expert = if curriculum.is_empty() {
            log::warn!("expert curriculum is empty; AGAIN falls back to ALP-GMM alone");
            None
        } else {
            Some(ExpertStepper::new(curriculum, config.expert)?)
        };
        Ok(Self {
            alpgmm: AlpGmmCore::new(space.clone(), inner, seed)?,
            space,
            expert,
            rho_low: config.rho_low,
            rng: rng::stream(seed, rng::PROPOSALS),
            slot: ProposalSlot::default(),
            composite: Vec::new(),
            split: 0,
            stale: true,
            last_origin: None,
            name: format!("AGAIN-{}", config.expert.variant),
        })
    }

    /// Filters `trace` with `delta_lp` and builds the teacher from it.
    pub fn from_trace(
        space: TaskSpace,
        trace: &CurriculumTrace,
        delta_lp: f64,
        config: AgainConfig,
        seed: u64,
    ) -> Result<Self> {
        trace.check_space(&space)?;
        Self::new(space, trace.filter(delta_lp), config, seed)
    }

    pub fn variant(&self) -> InVariant {
        self.expert.as_ref().map_or(InVariant::Pool, ExpertStepper::variant)
    }

    pub fn alpgmm(&self) -> &AlpGmmCore {
        &self.alpgmm
    }

    pub fn expert(&self) -> Option<&ExpertStepper> {
        self.expert.as_ref()
    }

    pub fn last_origin(&self) -> Option<Origin> {
        self.last_origin
    }

    fn refresh(&mut self) {
        if !self.stale {
            return;
        }
        self.composite.clear();
        if let Some(mix) = self.alpgmm.mixture() {
            self.composite.extend(mix.components.iter().cloned());
        }
        self.split = self.composite.len();
        if let Some(expert) = &self.expert {
            self.composite.extend(expert.current_mixture().iter().cloned());
        }
        self.stale = false;
    }

    /// ALP-GMM components (empty before its first fit) followed by the
    /// expert's current components.
    pub fn composite_mixture(&mut self) -> &[WeightedGaussian] {
        self.refresh();
        &self.composite
    }

    fn draw(&mut self) -> Result<(TaskParams, Origin)> {
        self.refresh();
        let explore = self.rng.random::<f64>() < self.rho_low;
        if explore || self.composite.is_empty() {
            return Ok((self.space.sample_uniform(&mut self.rng), Origin::Exploration));
        }
        let idx = sample_component_by_lp(&self.composite, &mut self.rng)?;
        let p = sample_task_from(&self.composite[idx], &self.space, &mut self.rng)?;
        let origin = if idx < self.split { Origin::AlpGmm } else { Origin::Expert };
        Ok((p, origin))
    }
}

impl Teacher for AgainTeacher {
    fn propose(&mut self) -> Result<TaskParams> {
        let (p, origin) = self.draw()?;
        self.slot.open(&p)?;
        self.last_origin = Some(origin);
        Ok(p)
    }

    fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<()> {
        self.slot.close(params)?;
        if self.alpgmm.observe(params, reward)? {
            self.stale = true;
        }
        if let Some(expert) = &mut self.expert {
            let before = expert.index();
            expert.observe(reward);
            if expert.index() != before {
                self.stale = true;
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> Option<&GmmSnapshot> {
        self.alpgmm.mixture()
    }

    fn name(&self) -> &str {
        &self.name
    }
}
