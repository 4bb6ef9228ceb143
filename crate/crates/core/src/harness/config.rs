use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Condition;
use crate::alp::RewardSpan;
use crate::error::{Error, Result};
use crate::gmm::EmConfig;
use crate::space::{TaskParams, TaskSpace};
use crate::student::{ExternalSpec, StudentProfile, SurrogateConfig, SurrogateStudent};
use crate::teacher::{AgainConfig, AlpGmmConfig, ExpertConfig, InVariant, OracleConfig};

/// Either a count (seeds `0..n`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

/// Teacher hyperparameters shared by every condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherSettings {
    pub fit_rate: usize,
    pub k_max: usize,
    pub rho_rnd: f64,
    pub rho_low: f64,
    pub delta_lp: f64,
    /// Episodes per curriculum entry for the Time variants.
    pub period: usize,
    pub reward_memory: usize,
    pub em: EmConfig,
}

impl Default for TeacherSettings {
    fn default() -> Self {
        let again = AgainConfig::default();
        let alpgmm = AlpGmmConfig::default();
        Self {
            fit_rate: alpgmm.fit_rate,
            k_max: alpgmm.k_max,
            rho_rnd: alpgmm.rho_rnd,
            rho_low: again.rho_low,
            delta_lp: 0.1,
            period: again.expert.period,
            reward_memory: again.expert.reward_memory,
            em: alpgmm.em,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSetSpec {
    /// Points per dimension, placed at cell centers.
    pub grid: usize,
    /// A test task is mastered when its reward is strictly above this.
    pub threshold: f64,
}

impl Default for TestSetSpec {
    fn default() -> Self {
        Self { grid: 10, threshold: 230.0 }
    }
}

impl TestSetSpec {
    pub fn points(&self, space: &TaskSpace) -> Vec<TaskParams> {
        let dim = space.dim();
        let g = self.grid;
        let total = g.pow(dim as u32);
        (0..total)
            .map(|mut n| {
                let x: Vec<f64> = (0..dim)
                    .map(|_| {
                        let i = n % g;
                        n /= g;
                        (i as f64 + 0.5) / g as f64
                    })
                    .collect();
                space.denormalize(&TaskParams(x)).expect("dimension matches")
            })
            .collect()
    }
}

/// Which student a run trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StudentSpec {
    External(ExternalSpec),
    Surrogate {
        profile: StudentProfile,
        /// Replaces the profile constants entirely when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        custom: Option<SurrogateConfig>,
    },
}

impl Default for StudentSpec {
    fn default() -> Self {
        StudentSpec::Surrogate { profile: StudentProfile::Weak, custom: None }
    }
}

impl StudentSpec {
    /// Surrogate constants, with the experiment's reward span.
    pub fn surrogate_config(&self, span: RewardSpan) -> Option<SurrogateConfig> {
        match self {
            StudentSpec::External(_) => None,
            StudentSpec::Surrogate { profile, custom } => {
                let mut config = custom.clone().unwrap_or_else(|| profile.config());
                config.reward_span = span;
                Some(config)
            }
        }
    }
}

fn all_conditions() -> Vec<Condition> {
    Condition::roster()
}

/// Everything a sweep needs. Loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Training episodes per run; two-stage conditions split it in halves.
    pub budget: u64,
    pub checkpoint_every: u64,
    pub seeds: Seeds,
    #[serde(default = "all_conditions")]
    pub conditions: Vec<Condition>,
    /// Write each run's preliminary trace next to the results.
    pub save_traces: bool,
    pub space: TaskSpace,
    pub reward_span: RewardSpan,
    pub teacher: TeacherSettings,
    pub oracle: OracleConfig,
    pub test_set: TestSetSpec,
    pub student: StudentSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            budget: 20_000,
            checkpoint_every: 500,
            seeds: Seeds::Count(30),
            conditions: all_conditions(),
            save_traces: false,
            space: TaskSpace::stump_tracks(),
            reward_span: RewardSpan::default(),
            teacher: TeacherSettings::default(),
            oracle: OracleConfig::default(),
            test_set: TestSetSpec::default(),
            student: StudentSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 2 {
            return Err(Error::Config("budget must be at least 2 episodes".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint interval must be positive".into()));
        }
        if self.seeds.to_vec().is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if self.conditions.is_empty() {
            return Err(Error::Config("no conditions".into()));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if self.conditions[..i].contains(c) {
                return Err(Error::Config(format!("condition {c} listed twice")));
            }
        }
        if self.test_set.grid == 0 {
            return Err(Error::Config("test grid must have at least one point".into()));
        }
        if !self.teacher.delta_lp.is_finite() {
            return Err(Error::Config("delta_lp must be finite".into()));
        }
        self.reward_span.validate()?;
        self.alpgmm().validate()?;
        self.again(InVariant::Reward).alpgmm.validate()?;
        if !(0.0..=1.0).contains(&self.teacher.rho_low) {
            return Err(Error::Config(format!("rho_low {} outside [0,1]", self.teacher.rho_low)));
        }
        if self.teacher.period == 0 || self.teacher.reward_memory == 0 {
            return Err(Error::Config("period and reward memory must be positive".into()));
        }
        for corner in [&self.oracle.easy, &self.oracle.hard] {
            if !self.space.contains(&TaskParams(corner.clone())) {
                return Err(Error::Config(format!("oracle corner {corner:?} outside the task space")));
            }
        }
        if let Some(sc) = self.student.surrogate_config(self.reward_span) {
            SurrogateStudent::new(self.space.clone(), sc, 0)?;
        }
        Ok(())
    }

    pub fn alpgmm(&self) -> AlpGmmConfig {
        AlpGmmConfig {
            fit_rate: self.teacher.fit_rate,
            k_max: self.teacher.k_max,
            rho_rnd: self.teacher.rho_rnd,
            reward_span: self.reward_span,
            bootstrap: true,
            em: self.teacher.em,
        }
    }

    pub fn expert(&self, variant: InVariant) -> ExpertConfig {
        ExpertConfig {
            variant,
            period: self.teacher.period,
            reward_memory: self.teacher.reward_memory,
        }
    }

    pub fn again(&self, variant: InVariant) -> AgainConfig {
        AgainConfig {
            expert: self.expert(variant),
            rho_low: self.teacher.rho_low,
            alpgmm: AlpGmmConfig {
                bootstrap: false,
                rho_rnd: 0.0,
                ..self.alpgmm()
            },
        }
    }

    /// Episodes of the preliminary stage of two-stage conditions.
    pub fn stage_one_budget(&self) -> u64 {
        self.budget / 2
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
