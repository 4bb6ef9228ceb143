//! Students trained by the teachers.
//!
//! A student turns a task into an episodic reward. [`SurrogateStudent`] is a
//! deterministic competence-field learner; [`ExternalStudent`] drives any
//! process speaking the line protocol in [`protocol`].

mod external;
pub mod protocol;
mod surrogate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use external::{ExternalSpec, ExternalStudent};
pub use surrogate::{StudentProfile, SurrogateConfig, SurrogateStudent};

use crate::error::{Error, Result};
use crate::space::TaskParams;

pub trait Student {
    /// Runs one training episode on `params` and returns its reward.
    fn train_on(&mut self, params: &TaskParams) -> Result<f64>;

    /// Reward the student would get on `params`, without learning from it.
    fn evaluate(&mut self, params: &TaskParams) -> Result<f64>;

    fn reset(&mut self, mode: ResetMode) -> Result<()>;
}

impl<S: Student + ?Sized> Student for Box<S> {
    fn train_on(&mut self, params: &TaskParams) -> Result<f64> {
        (**self).train_on(params)
    }

    fn evaluate(&mut self, params: &TaskParams) -> Result<f64> {
        (**self).evaluate(params)
    }

    fn reset(&mut self, mode: ResetMode) -> Result<()> {
        (**self).reset(mode)
    }
}

/// What happens to the student between the two stages of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    /// Back to the initial state.
    #[default]
    Scratch,
    /// Keep everything learned so far.
    FineTune,
}

impl fmt::Display for ResetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResetMode::Scratch => "scratch",
            ResetMode::FineTune => "fine-tune",
        })
    }
}

impl FromStr for ResetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scratch" => Ok(ResetMode::Scratch),
            "fine-tune" | "fine_tune" | "finetune" => Ok(ResetMode::FineTune),
            other => Err(Error::Config(format!("unknown reset mode {other:?}"))),
        }
    }
}

/// Returns the first task coordinate as reward. Handy for wiring tests.
#[derive(Debug, Clone, Default)]
pub struct EchoStudent;

impl Student for EchoStudent {
    fn train_on(&mut self, params: &TaskParams) -> Result<f64> {
        self.evaluate(params)
    }

    fn evaluate(&mut self, params: &TaskParams) -> Result<f64> {
        params
            .0
            .first()
            .copied()
            .ok_or(Error::DimensionMismatch { expected: 1, got: 0 })
    }

    fn reset(&mut self, _mode: ResetMode) -> Result<()> {
        Ok(())
    }
}
