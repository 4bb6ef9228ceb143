use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ResetMode, Student};
use crate::alp::RewardSpan;
use crate::error::{Error, Result};
use crate::rng::{self, RandomStream};
use crate::space::{TaskParams, TaskSpace};

const MAX_CELLS: usize = 1 << 22;

/// Constants of the competence-field learner. Coordinates are normalized.
///
/// A cell's difficulty is its mean L1 distance to the `easy` corner. Cells
/// harder than `mask_limit` can never be learned. A learnable cell is within
/// reach when it is a base cell (difficulty at most `base`) or when some
/// easier cell within `frontier_width` has competence of at least
/// `frontier_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    /// Cells per dimension.
    pub grid: usize,
    pub easy: Vec<f64>,
    pub mask_limit: f64,
    pub base: f64,
    pub frontier_width: f64,
    pub frontier_level: f64,
    pub learn_rate: f64,
    /// Standard deviation of the Gaussian gain kernel, cut at two deviations.
    pub kernel_std: f64,
    /// Each episode spent on an unlearnable or out-of-reach task lowers
    /// plasticity to `1 / (1 + clutter_decay * count)`.
    pub clutter_decay: f64,
    /// Reward noise as a fraction of the span width.
    pub noise: f64,
    pub reward_span: RewardSpan,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        StudentProfile::Strong.config()
    }
}

impl SurrogateConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.easy.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.easy.len() });
        }
        if self.grid == 0 {
            return Err(Error::Config("student grid must have at least one cell".into()));
        }
        let cells = (self.grid as f64).powi(dim as i32);
        if cells > MAX_CELLS as f64 {
            return Err(Error::Config(format!("student grid of {cells} cells is too large")));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !self.easy.iter().all(|&x| unit(x))
            || !unit(self.learn_rate)
            || !unit(self.frontier_level)
            || !(self.frontier_width >= 0.0)
            || !(self.kernel_std >= 0.0)
            || !(self.clutter_decay >= 0.0)
            || !(self.noise >= 0.0)
            || !self.mask_limit.is_finite()
            || !self.base.is_finite()
        {
            return Err(Error::Config("surrogate student constants out of range".into()));
        }
        self.reward_span.validate()
    }

    /// Difficulty of a normalized point.
    pub fn difficulty(&self, x: &[f64]) -> f64 {
        let sum: f64 = x.iter().zip(&self.easy).map(|(a, b)| (a - b).abs()).sum();
        sum / x.len().max(1) as f64
    }
}

/// Preset constants. `Strong` can learn half of the stump tracks space,
/// `Weak` about a quarter and is more easily thrown off by clutter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentProfile {
    Strong,
    Weak,
}

impl StudentProfile {
    pub fn config(self) -> SurrogateConfig {
        let strong = SurrogateConfig {
            grid: 50,
            easy: vec![0.0, 1.0],
            mask_limit: 0.5,
            base: 0.1,
            frontier_width: 0.06,
            frontier_level: 0.5,
            learn_rate: 0.15,
            kernel_std: 0.03,
            clutter_decay: 5e-3,
            noise: 0.01,
            reward_span: RewardSpan::default(),
        };
        match self {
            StudentProfile::Strong => strong,
            StudentProfile::Weak => SurrogateConfig {
                mask_limit: 0.35,
                base: 0.06,
                clutter_decay: 1e-2,
                ..strong
            },
        }
    }
}

impl fmt::Display for StudentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudentProfile::Strong => "strong",
            StudentProfile::Weak => "weak",
        })
    }
}

impl FromStr for StudentProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" | "default" => Ok(StudentProfile::Strong),
            "weak" | "short" => Ok(StudentProfile::Weak),
            other => Err(Error::Config(format!("unknown student profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
struct Offset {
    delta: Vec<isize>,
    weight: f64,
}

/// Deterministic learner whose competence lives on a grid over the
/// normalized task space.
#[derive(Debug, Clone)]
pub struct SurrogateStudent {
    space: TaskSpace,
    config: SurrogateConfig,
    seed: u64,
    competence: Vec<f64>,
    difficulty: Vec<f64>,
    learnable: Vec<bool>,
    kernel: Vec<Offset>,
    prerequisites: Vec<Offset>,
    clutter: u64,
    episodes: u64,
    rng: RandomStream,
}

impl SurrogateStudent {
    pub fn new(space: TaskSpace, config: SurrogateConfig, seed: u64) -> Result<Self> {
        let dim = space.dim();
        config.validate(dim)?;
        let g = config.grid;
        let cells = g.pow(dim as u32);
        let mut difficulty = Vec::with_capacity(cells);
        let mut learnable = Vec::with_capacity(cells);
        let mut idx = vec![0usize; dim];
        for _ in 0..cells {
            let center: Vec<f64> = idx.iter().map(|&i| (i as f64 + 0.5) / g as f64).collect();
            let d = config.difficulty(&center);
            difficulty.push(d);
            learnable.push(d <= config.mask_limit);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < g {
                    break;
                }
                *slot = 0;
            }
        }
        let kernel = offsets(dim, g, 2.0 * config.kernel_std, |dist| {
            if config.kernel_std > 0.0 {
                (-0.5 * (dist / config.kernel_std).powi(2)).exp()
            } else {
                1.0
            }
        });
        let prerequisites = offsets(dim, g, config.frontier_width, |_| 1.0)
            .into_iter()
            .filter(|o| o.delta.iter().any(|&d| d != 0))
            .collect();
        Ok(Self {
            competence: vec![0.0; cells],
            difficulty,
            learnable,
            kernel,
            prerequisites,
            clutter: 0,
            episodes: 0,
            rng: rng::stream(seed, rng::STUDENT),
            space,
            config,
            seed,
        })
    }

    pub fn with_profile(space: TaskSpace, profile: StudentProfile, seed: u64) -> Result<Self> {
        Self::new(space, profile.config(), seed)
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.config
    }

    pub fn space(&self) -> &TaskSpace {
        &self.space
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn clutter(&self) -> u64 {
        self.clutter
    }

    pub fn plasticity(&self) -> f64 {
        1.0 / (1.0 + self.config.clutter_decay * self.clutter as f64)
    }

    pub fn competence(&self) -> &[f64] {
        &self.competence
    }

    pub fn competence_at(&self, params: &TaskParams) -> Result<f64> {
        Ok(self.competence[self.cell_of(params)?])
    }

    pub fn is_learnable(&self, params: &TaskParams) -> Result<bool> {
        Ok(self.learnable[self.cell_of(params)?])
    }

    /// Share of grid cells inside the learnable mask.
    pub fn learnable_fraction(&self) -> f64 {
        self.learnable.iter().filter(|&&l| l).count() as f64 / self.learnable.len() as f64
    }

    /// Mean competence over cells whose center difficulty lies in `[lo, hi]`.
    pub fn mean_competence_between(&self, lo: f64, hi: f64) -> f64 {
        let (sum, n) = self
            .difficulty
            .iter()
            .zip(&self.competence)
            .filter(|(d, _)| (lo..=hi).contains(*d))
            .fold((0.0, 0usize), |(s, n), (_, c)| (s + c, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn in_reach(&self, params: &TaskParams) -> Result<bool> {
        let cell = self.cell_of(params)?;
        Ok(self.cell_in_reach(cell))
    }

    fn cell_in_reach(&self, cell: usize) -> bool {
        if !self.learnable[cell] {
            return false;
        }
        let d = self.difficulty[cell];
        if d <= self.config.base {
            return true;
        }
        let level = self.config.frontier_level;
        let idx = self.unflatten(cell);
        self.prerequisites.iter().any(|o| {
            self.shifted(&idx, &o.delta)
                .is_some_and(|q| self.difficulty[q] < d && self.competence[q] >= level)
        })
    }

    fn cell_of(&self, params: &TaskParams) -> Result<usize> {
        if !self.space.contains(params) {
            return Err(Error::OutOfBounds(params.0.clone()));
        }
        let norm = self.space.normalize(params)?;
        let g = self.config.grid;
        let mut flat = 0;
        let mut stride = 1;
        for &x in norm.values() {
            let i = ((x * g as f64).floor().max(0.0) as usize).min(g - 1);
            flat += i * stride;
            stride *= g;
        }
        Ok(flat)
    }

    fn unflatten(&self, mut cell: usize) -> Vec<usize> {
        let g = self.config.grid;
        (0..self.space.dim())
            .map(|_| {
                let i = cell % g;
                cell /= g;
                i
            })
            .collect()
    }

    fn shifted(&self, idx: &[usize], delta: &[isize]) -> Option<usize> {
        let g = self.config.grid as isize;
        let mut flat = 0isize;
        let mut stride = 1isize;
        for (&i, &d) in idx.iter().zip(delta) {
            let j = i as isize + d;
            if !(0..g).contains(&j) {
                return None;
            }
            flat += j * stride;
            stride *= g;
        }
        Some(flat as usize)
    }

    fn reward_for(&self, competence: f64, noise: f64) -> f64 {
        let span = self.config.reward_span;
        span.min + competence * span.width() + noise * self.config.noise * span.width()
    }
}

/// Grid offsets within `radius` (normalized Euclidean distance).
fn offsets(dim: usize, grid: usize, radius: f64, weight: impl Fn(f64) -> f64) -> Vec<Offset> {
    let reach = (radius * grid as f64).floor() as isize;
    let side = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for n in 0..side.pow(dim as u32) {
        let mut rest = n;
        let delta: Vec<isize> = (0..dim)
            .map(|_| {
                let d = (rest % side) as isize - reach;
                rest /= side;
                d
            })
            .collect();
        let dist = delta.iter().map(|&d| (d as f64).powi(2)).sum::<f64>().sqrt() / grid as f64;
        if dist <= radius + 1e-12 {
            out.push(Offset { weight: weight(dist), delta });
        }
    }
    out
}

impl Student for SurrogateStudent {
    fn train_on(&mut self, params: &TaskParams) -> Result<f64> {
        let cell = self.cell_of(params)?;
        self.episodes += 1;
        if self.cell_in_reach(cell) {
            let rate = self.config.learn_rate * self.plasticity();
            let idx = self.unflatten(cell);
            for o in &self.kernel {
                if let Some(q) = self.shifted(&idx, &o.delta) {
                    if self.learnable[q] {
                        let c = self.competence[q];
                        self.competence[q] = (c + rate * o.weight * (1.0 - c)).min(1.0);
                    }
                }
            }
        } else {
            self.clutter += 1;
        }
        let noise: f64 = self.rng.sample(StandardNormal);
        Ok(self.reward_for(self.competence[cell], noise))
    }

    fn evaluate(&mut self, params: &TaskParams) -> Result<f64> {
        let cell = self.cell_of(params)?;
        let key = params
            .0
            .iter()
            .fold(rng::splitmix64(self.seed), |h, x| rng::splitmix64(h ^ x.to_bits()));
        let noise: f64 = rng::stream(key, rng::STUDENT).sample(StandardNormal);
        Ok(self.reward_for(self.competence[cell], noise))
    }

    fn reset(&mut self, mode: ResetMode) -> Result<()> {
        if mode == ResetMode::Scratch {
            self.competence.iter_mut().for_each(|c| *c = 0.0);
            self.clutter = 0;
            self.episodes = 0;
            self.rng = rng::stream(self.seed, rng::STUDENT);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn student(profile: StudentProfile, seed: u64) -> SurrogateStudent {
        SurrogateStudent::with_profile(TaskSpace::stump_tracks(), profile, seed).unwrap()
    }

    fn raw(space: &TaskSpace, x: &[f64]) -> TaskParams {
        space.denormalize(&TaskParams(x.to_vec())).unwrap()
    }

    #[test]
    fn mask_areas_match_profiles() {
        let s = student(StudentProfile::Strong, 0);
        assert!((s.learnable_fraction() - 0.5).abs() < 0.02);
        let w = student(StudentProfile::Weak, 0);
        assert!((w.learnable_fraction() - 0.245).abs() < 0.02);
    }

    #[test]
    fn unlearnable_task_never_gains() {
        let mut s = student(StudentProfile::Strong, 1);
        let p = raw(s.space(), &[0.95, 0.05]);
        assert!(!s.is_learnable(&p).unwrap());
        let span = s.config().reward_span;
        let mut total = 0.0;
        for _ in 0..10_000 {
            total += s.train_on(&p).unwrap();
        }
        assert!(s.competence().iter().all(|&c| c == 0.0));
        assert!((total / 10_000.0 - span.min).abs() < 1.0);
    }

    #[test]
    fn easy_task_rises_monotonically_to_one() {
        let mut s = student(StudentProfile::Strong, 2);
        let p = raw(s.space(), &[0.01, 0.99]);
        let mut last = 0.0;
        for _ in 0..2000 {
            s.train_on(&p).unwrap();
            let c = s.competence_at(&p).unwrap();
            assert!(c >= last);
            last = c;
        }
        assert!(last > 0.999, "{last}");
    }

    #[test]
    fn far_beyond_frontier_gains_nothing() {
        let mut s = student(StudentProfile::Strong, 3);
        let p = raw(s.space(), &[0.4, 0.6]);
        assert!(s.is_learnable(&p).unwrap());
        assert!(!s.in_reach(&p).unwrap());
        for _ in 0..1000 {
            s.train_on(&p).unwrap();
        }
        assert!(s.competence().iter().all(|&c| c == 0.0));
        assert_eq!(s.clutter(), 1000);
    }

    #[test]
    fn frontier_moves_outward_from_the_base() {
        let mut s = student(StudentProfile::Strong, 4);
        let next = raw(s.space(), &[0.18, 0.94]);
        assert!(!s.in_reach(&next).unwrap());
        let base = raw(s.space(), &[0.14, 0.96]);
        for _ in 0..200 {
            s.train_on(&base).unwrap();
        }
        assert!(s.in_reach(&next).unwrap());
    }

    #[test]
    fn scratch_restores_the_initial_state() {
        let space = TaskSpace::stump_tracks();
        let fresh = student(StudentProfile::Weak, 5);
        let mut s = fresh.clone();
        let p = raw(&space, &[0.02, 0.98]);
        let q = raw(&space, &[0.9, 0.1]);
        for _ in 0..300 {
            s.train_on(&p).unwrap();
            s.train_on(&q).unwrap();
        }
        let before = s.evaluate(&p).unwrap();
        s.reset(ResetMode::FineTune).unwrap();
        assert_eq!(s.evaluate(&p).unwrap(), before);
        s.reset(ResetMode::Scratch).unwrap();
        let once = s.clone();
        s.reset(ResetMode::Scratch).unwrap();
        assert_eq!(s.competence(), once.competence());
        assert_eq!(s.competence(), fresh.competence());
        assert_eq!(s.clutter(), 0);
        let mut f = fresh.clone();
        assert_eq!(s.train_on(&p).unwrap(), f.train_on(&p).unwrap());
        let span = s.config().reward_span;
        let r = fresh.clone().evaluate(&q).unwrap();
        assert!((r - span.min).abs() < 25.0);
    }

    #[test]
    fn evaluation_has_no_side_effects() {
        let mut s = student(StudentProfile::Strong, 6);
        let p = raw(s.space(), &[0.02, 0.98]);
        for _ in 0..50 {
            s.train_on(&p).unwrap();
        }
        let snapshot = s.clone();
        let a = s.evaluate(&p).unwrap();
        let b = s.evaluate(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(s.competence(), snapshot.competence());
        assert_eq!(s.train_on(&p).unwrap(), snapshot.clone().train_on(&p).unwrap());
    }

    #[test]
    fn clutter_lowers_plasticity() {
        let mut s = student(StudentProfile::Weak, 7);
        let junk = raw(s.space(), &[0.9, 0.1]);
        let steps = (1.0 / s.config().clutter_decay).round() as usize;
        for _ in 0..steps {
            s.train_on(&junk).unwrap();
        }
        assert!((s.plasticity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let mut s = student(StudentProfile::Strong, 8);
        assert!(matches!(s.train_on(&vec![4.0, 1.0].into()), Err(Error::OutOfBounds(_))));
        assert!(matches!(s.evaluate(&vec![1.0].into()), Err(Error::OutOfBounds(_))));
    }
}
