//! Task-proposing teachers.
//!
//! Every teacher follows the same episode loop: `propose` a task, let the
//! student train on it, then `observe` the reward for exactly that task.

mod again;
mod alpgmm;
mod expert;
mod oracle;

pub use again::{AgainConfig, AgainTeacher, Origin};
pub use alpgmm::{AlpGmmConfig, AlpGmmCore, AlpGmmTeacher};
pub use expert::{ExpertConfig, ExpertStepper, InTeacher, InVariant};
pub use oracle::{OracleConfig, OracleTeacher};

use crate::error::{Error, Result};
use crate::gmm::GmmSnapshot;
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

pub trait Teacher {
    fn propose(&mut self) -> Result<TaskParams>;

    /// Reports the reward of the task returned by the last `propose`.
    fn observe(&mut self, params: &TaskParams, reward: f64) -> Result<()>;

    /// Mixture currently used for sampling, if the teacher keeps one.
    fn snapshot(&self) -> Option<&GmmSnapshot> {
        None
    }

    fn name(&self) -> &str;
}

/// Enforces strict propose/observe alternation.
#[derive(Debug, Clone, Default)]
pub(crate) struct ProposalSlot(Option<TaskParams>);

impl ProposalSlot {
    pub(crate) fn open(&mut self, params: &TaskParams) -> Result<()> {
        if self.0.is_some() {
            return Err(Error::Contract("propose called twice without observe".into()));
        }
        self.0 = Some(params.clone());
        Ok(())
    }

    pub(crate) fn close(&mut self, params: &TaskParams) -> Result<()> {
        match self.0.take() {
            None => Err(Error::Contract("observe called without a pending proposal".into())),
            Some(expected) if &expected != params => {
                let msg = format!("observed {:?} but last proposed {:?}", params.0, expected.0);
                self.0 = Some(expected);
                Err(Error::Contract(msg))
            }
            Some(_) => Ok(()),
        }
    }
}

/// Uniform sampling over the whole space.
#[derive(Debug, Clone)]
pub struct RandomTeacher {
    space: TaskSpace,
    rng: RandomStream,
    slot: ProposalSlot,
}

impl RandomTeacher {
    pub fn new(space: TaskSpace, seed: u64) -> Self {
        Self {
            space,
            rng: rng::stream(seed, rng::PROPOSALS),
            slot: ProposalSlot::default(),
        }
    }
}

impl Teacher for RandomTeacher {
    fn propose(&mut self) -> Result<TaskParams> {
        let p = self.space.sample_uniform(&mut self.rng);
        self.slot.open(&p)?;
        Ok(p)
    }

    fn observe(&mut self, params: &TaskParams, _reward: f64) -> Result<()> {
        self.slot.close(params)
    }

    fn name(&self) -> &str {
        "Random"
    }
}
