//! Absolute learning progress bookkeeping: the append-only history of
//! `(params, reward)` pairs and the FIFO window of `(params ⧺ alp)` rows
//! that mixtures are fitted on.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{TaskParams, TaskSpace};

/// Approximate reward range used to normalize ALP into `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpan {
    pub min: f64,
    pub max: f64,
}

impl RewardSpan {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let span = Self { min, max };
        span.validate()?;
        Ok(span)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!(
                "reward span [{}, {}] must be finite with max > min",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, r: f64) -> bool {
        self.min <= r && r <= self.max
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }

    /// Maps a raw reward to its position in the span, `0` at `min`, `1` at `max`.
    pub fn fraction(&self, r: f64) -> f64 {
        (r - self.min) / self.width()
    }
}

impl Default for RewardSpan {
    fn default() -> Self {
        Self {
            min: -150.0,
            max: 350.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub params_norm: Vec<f64>,
    pub reward: f64,
    pub alp_norm: f64,
}

const MAX_BUCKETS: usize = 4096;
/// Records per bucket the grid aims for before it is refined.
const BUCKET_LOAD: usize = 2;

/// Append-only history with an exact nearest-neighbor index over `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct HistoryDb {
    dim: usize,
    params: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    resolution: usize,
    buckets: Vec<Vec<u32>>,
}

impl HistoryDb {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            params: Vec::new(),
            rewards: Vec::new(),
            resolution: 1,
            buckets: vec![Vec::new()],
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self, i: usize) -> &[f64] {
        &self.params[i]
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.params.iter().map(Vec::as_slice).zip(self.rewards.iter().copied())
    }

    fn cell_coord(&self, v: f64) -> usize {
        let c = (v * self.resolution as f64).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.resolution - 1)
        }
    }

    fn bucket_of(&self, p: &[f64]) -> usize {
        p.iter().fold(0, |acc, v| acc * self.resolution + self.cell_coord(*v))
    }

    fn wanted_resolution(&self) -> usize {
        let target = (self.len() / BUCKET_LOAD).clamp(1, MAX_BUCKETS);
        let mut r = self.resolution;
        while (r + 1).checked_pow(self.dim as u32).is_some_and(|b| b <= target) {
            r += 1;
        }
        r
    }

    fn rebuild(&mut self, resolution: usize) {
        self.resolution = resolution;
        self.buckets = vec![Vec::new(); resolution.pow(self.dim as u32)];
        for i in 0..self.params.len() {
            let b = self.bucket_of(&self.params[i]);
            self.buckets[b].push(i as u32);
        }
    }

    pub fn push(&mut self, params_norm: Vec<f64>, reward: f64) -> Result<()> {
        if params_norm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: params_norm.len(),
            });
        }
        let b = self.bucket_of(&params_norm);
        self.buckets[b].push(self.params.len() as u32);
        self.params.push(params_norm);
        self.rewards.push(reward);
        let r = self.wanted_resolution();
        if r != self.resolution {
            self.rebuild(r);
        }
        Ok(())
    }

    /// Index of the nearest record by Euclidean distance; ties go to the earliest record.
    pub fn nearest(&self, query: &[f64]) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let res = self.resolution as isize;
        let center: Vec<isize> = query.iter().map(|v| self.cell_coord(*v) as isize).collect();
        let last_ring = center.iter().map(|c| (*c).max(res - 1 - c)).max().unwrap_or(0);
        let width = 1.0 / self.resolution as f64;
        let mut best: Option<(f64, usize)> = None;
        let mut offsets = vec![0isize; self.dim];
        let mut lo = vec![0isize; self.dim];
        let mut hi = vec![0isize; self.dim];
        for ring in 0..=last_ring {
            // every point at Chebyshev bucket offset >= ring lies more than (ring - 1) · width away
            if let Some((d2, _)) = best {
                let bound = (ring - 1) as f64 * width * (1.0 - 1e-9);
                if ring > 1 && d2 < bound * bound {
                    break;
                }
            }
            for a in 0..self.dim {
                lo[a] = (-ring).max(-center[a]);
                hi[a] = ring.min(res - 1 - center[a]);
            }
            offsets.copy_from_slice(&lo);
            loop {
                if offsets.iter().any(|o| o.abs() == ring) {
                    let b = offsets
                        .iter()
                        .zip(&center)
                        .fold(0, |acc, (o, c)| acc * self.resolution + (c + o) as usize);
                    for &idx in &self.buckets[b] {
                        let idx = idx as usize;
                        let d2 = squared_distance(&self.params[idx], query);
                        let better = match best {
                            None => true,
                            Some((bd, bi)) => d2 < bd || (d2 == bd && idx < bi),
                        };
                        if better {
                            best = Some((d2, idx));
                        }
                    }
                }
                // odometer over the clipped (2·ring+1)^d cube
                let mut axis = 0;
                while axis < self.dim {
                    offsets[axis] += 1;
                    if offsets[axis] > hi[axis] {
                        offsets[axis] = lo[axis];
                        axis += 1;
                    } else {
                        break;
                    }
                }
                if axis == self.dim {
                    break;
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// FIFO of the most recent `capacity` `(params ⧺ alp)` rows.
#[derive(Debug, Clone)]
pub struct AlpWindow {
    capacity: usize,
    entries: VecDeque<Vec<f64>>,
}

impl AlpWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(row);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.iter().cloned().collect()
    }
}

/// Normalized ALP of a new reward against its nearest predecessor.
///
/// Rewards are clamped into `span` before normalization. An empty
/// history yields `0`.
pub fn compute_alp(p_norm: &[f64], r_new: f64, db: &HistoryDb, span: &RewardSpan) -> Result<f64> {
    span.validate()?;
    Ok(match db.nearest(p_norm) {
        None => 0.0,
        Some(i) => alp_between(r_new, db.reward(i), span),
    })
}

fn alp_between(r_new: f64, r_old: f64, span: &RewardSpan) -> f64 {
    ((span.clamp(r_new) - span.clamp(r_old)).abs() / span.width()).clamp(0.0, 1.0)
}

/// History, window and span of one teacher run.
#[derive(Debug, Clone)]
pub struct AlpTracker {
    span: RewardSpan,
    history: HistoryDb,
    window: AlpWindow,
    alps: Vec<f64>,
    clamped_rewards: usize,
}

impl AlpTracker {
    pub fn new(dim: usize, window: usize, span: RewardSpan) -> Result<Self> {
        span.validate()?;
        Ok(Self {
            span,
            history: HistoryDb::new(dim),
            window: AlpWindow::new(window),
            alps: Vec::new(),
            clamped_rewards: 0,
        })
    }

    /// Computes ALP against the history, then appends to history and window.
    pub fn record(&mut self, p_norm: &[f64], reward: f64) -> Result<EpisodeRecord> {
        if p_norm.len() != self.history.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.history.dim(),
                got: p_norm.len(),
            });
        }
        if !self.span.contains(reward) {
            self.clamped_rewards += 1;
        }
        let alp = compute_alp(p_norm, reward, &self.history, &self.span)?;
        self.history.push(p_norm.to_vec(), reward)?;
        self.alps.push(alp);
        let mut row = p_norm.to_vec();
        row.push(alp);
        self.window.push(row);
        Ok(EpisodeRecord {
            params_norm: p_norm.to_vec(),
            reward,
            alp_norm: alp,
        })
    }

    pub fn history(&self) -> &HistoryDb {
        &self.history
    }

    pub fn window(&self) -> &AlpWindow {
        &self.window
    }

    pub fn span(&self) -> &RewardSpan {
        &self.span
    }

    /// ALP assigned to history record `i`.
    pub fn alp(&self, i: usize) -> f64 {
        self.alps[i]
    }

    /// `episode,p0,..,reward,alp_norm` with parameters mapped back into `space`.
    pub fn history_csv(&self, space: &TaskSpace) -> Result<String> {
        let dim = self.history.dim();
        let mut out = String::from("episode");
        for i in 0..dim {
            let _ = write!(out, ",p{i}");
        }
        out.push_str(",reward,alp_norm\n");
        for (i, (p, r)) in self.history.iter().enumerate() {
            let raw = space.denormalize(&TaskParams(p.to_vec()))?;
            let _ = write!(out, "{i}");
            for v in raw.values() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{r},{}", self.alps[i]);
        }
        Ok(out)
    }

    /// Rewards that fell outside the declared span and were clamped.
    pub fn clamped_rewards(&self) -> usize {
        self.clamped_rewards
    }
}
