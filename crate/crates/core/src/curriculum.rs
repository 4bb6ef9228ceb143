//! Curriculum traces: the sequence of mixtures fitted during a preliminary
//! run together with the mean reward earned under each, their LP-filtered
//! form, and the on-disk trace format.
//!
//! # File format
//!
//! A trace file is a single JSON object:
//!
//! ```json
//! {"format":"again-curriculum-trace","version":1,"sha256":"<hex>","trace":{...}}
//! ```
//!
//! `sha256` is the digest of the exact bytes of the `trace` value as they
//! appear in the file. Floats are written in shortest round-trip decimal
//! form and parsed with correct rounding, so every `f64` survives
//! `save → load` bit for bit.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::alp::RewardSpan;
use crate::error::{Error, Result};
use crate::gmm::GmmSnapshot;
use crate::space::TaskSpace;

pub const TRACE_FORMAT: &str = "again-curriculum-trace";
pub const TRACE_VERSION: u32 = 1;

/// Rewards averaged per snapshot for the threshold list.
pub const REWARD_MEMORY: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub reward_span: RewardSpan,
    pub config_hash: String,
    pub seed: u64,
    pub fit_rate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumTrace {
    pub meta: TraceMeta,
    pub snapshots: Vec<GmmSnapshot>,
    /// Mean episodic reward of the last tasks served by each snapshot.
    pub reward_means: Vec<f64>,
}

/// Snapshots whose every component has `lp ≥ δ`, with their paired thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredCurriculum {
    pub snapshots: Vec<GmmSnapshot>,
    pub thresholds: Vec<f64>,
}

impl FilteredCurriculum {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.snapshots.iter().map(GmmSnapshot::len).sum()
    }

    pub fn into_trace(self, meta: TraceMeta) -> CurriculumTrace {
        CurriculumTrace {
            meta,
            snapshots: self.snapshots,
            reward_means: self.thresholds,
        }
    }
}

impl CurriculumTrace {
    pub fn empty(meta: TraceMeta) -> Self {
        Self {
            meta,
            snapshots: Vec::new(),
            reward_means: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots.len() != self.reward_means.len() {
            return Err(Error::TraceFormat(format!(
                "{} snapshots but {} reward means",
                self.snapshots.len(),
                self.reward_means.len()
            )));
        }
        if self.meta.lower.len() != self.meta.upper.len() {
            return Err(Error::TraceFormat("bounds of unequal length".into()));
        }
        for pair in self.snapshots.windows(2) {
            if pair[1].fit_episode <= pair[0].fit_episode {
                return Err(Error::TraceFormat(format!(
                    "fit episodes not strictly increasing ({} then {})",
                    pair[0].fit_episode, pair[1].fit_episode
                )));
            }
        }
        let dim = self.meta.lower.len() + 1;
        for s in &self.snapshots {
            for c in &s.components {
                if c.mean.len() != dim || c.covariance.len() != dim * dim {
                    return Err(Error::TraceFormat(format!(
                        "component of dimension {} in a {}-parameter trace",
                        c.mean.len(),
                        dim - 1
                    )));
                }
                let finite = c.mean.iter().chain(&c.covariance).all(|v| v.is_finite())
                    && c.lp.is_finite()
                    && c.mixture_weight.is_finite();
                if !finite {
                    return Err(Error::TraceFormat("non-finite component value".into()));
                }
            }
        }
        if !self.reward_means.iter().all(|v| v.is_finite()) {
            return Err(Error::TraceFormat("non-finite reward mean".into()));
        }
        Ok(())
    }

    /// Checks that the trace was recorded over `space`.
    pub fn check_space(&self, space: &TaskSpace) -> Result<()> {
        if self.meta.lower.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.meta.lower.len(),
            });
        }
        if self.meta.lower != space.lower() || self.meta.upper != space.upper() {
            return Err(Error::TraceFormat(format!(
                "trace bounds {:?}..{:?} differ from the task space {:?}..{:?}",
                self.meta.lower,
                self.meta.upper,
                space.lower(),
                space.upper()
            )));
        }
        Ok(())
    }

    /// Drops components with `lp < delta_lp`, then snapshots left empty along
    /// with their reward means. Order is preserved.
    pub fn filter(&self, delta_lp: f64) -> FilteredCurriculum {
        let mut snapshots = Vec::new();
        let mut thresholds = Vec::new();
        for (snap, mean) in self.snapshots.iter().zip(&self.reward_means) {
            let kept: Vec<_> = snap
                .components
                .iter()
                .filter(|c| c.lp >= delta_lp)
                .cloned()
                .collect();
            if !kept.is_empty() {
                snapshots.push(GmmSnapshot {
                    components: kept,
                    fit_episode: snap.fit_episode,
                });
                thresholds.push(*mean);
            }
        }
        FilteredCurriculum {
            snapshots,
            thresholds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let body = serde_json::to_string(self)?;
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        Ok(format!(
            "{{\"format\":\"{TRACE_FORMAT}\",\"version\":{TRACE_VERSION},\"sha256\":\"{digest}\",\"trace\":{body}}}\n"
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope<'a> {
            format: String,
            version: u32,
            sha256: String,
            #[serde(borrow)]
            trace: &'a RawValue,
        }
        let env: Envelope = serde_json::from_str(text)?;
        if env.format != TRACE_FORMAT {
            return Err(Error::TraceFormat(format!("unknown format tag {:?}", env.format)));
        }
        if env.version != TRACE_VERSION {
            return Err(Error::TraceVersion {
                found: env.version,
                expected: TRACE_VERSION,
            });
        }
        let computed = hex::encode(Sha256::digest(env.trace.get().as_bytes()));
        if computed != env.sha256 {
            return Err(Error::Checksum {
                stored: env.sha256,
                computed,
            });
        }
        let trace: CurriculumTrace = serde_json::from_str(env.trace.get())?;
        trace.validate()?;
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Loads a trace and checks it against the task space of the loading run.
    pub fn load_for(path: impl AsRef<Path>, space: &TaskSpace) -> Result<Self> {
        let trace = Self::load(path)?;
        trace.check_space(space)?;
        Ok(trace)
    }
}

/// Mean of the last [`REWARD_MEMORY`] rewards, `None` when empty.
pub fn record_reward_mean(rewards: &[f64]) -> Option<f64> {
    if rewards.is_empty() {
        return None;
    }
    let tail = &rewards[rewards.len().saturating_sub(REWARD_MEMORY)..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Builds a trace online: one reward ring buffer per fitted snapshot.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    meta: TraceMeta,
    snapshots: Vec<GmmSnapshot>,
    buffers: Vec<VecDeque<f64>>,
}

impl TraceRecorder {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            snapshots: Vec::new(),
            buffers: Vec::new(),
        }
    }

    pub fn push_snapshot(&mut self, snapshot: GmmSnapshot) {
        self.snapshots.push(snapshot);
        self.buffers.push(VecDeque::with_capacity(REWARD_MEMORY));
    }

    /// Attributes a reward to the current snapshot; ignored before the first fit.
    pub fn push_reward(&mut self, reward: f64) {
        if let Some(buf) = self.buffers.last_mut() {
            if buf.len() == REWARD_MEMORY {
                buf.pop_front();
            }
            buf.push_back(reward);
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// A snapshot that served no episode inherits its predecessor's mean; the
    /// very first falls back to the span minimum.
    pub fn to_trace(&self) -> CurriculumTrace {
        let mut means = Vec::with_capacity(self.buffers.len());
        let mut previous = self.meta.reward_span.min;
        for buf in &self.buffers {
            let rewards: Vec<f64> = buf.iter().copied().collect();
            let mean = record_reward_mean(&rewards).unwrap_or(previous);
            means.push(mean);
            previous = mean;
        }
        CurriculumTrace {
            meta: self.meta.clone(),
            snapshots: self.snapshots.clone(),
            reward_means: means,
        }
    }
}
