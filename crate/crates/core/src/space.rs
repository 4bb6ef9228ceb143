//! Bounded box-shaped task-parameter spaces.
//!
//! Every distance and every mixture fit in this crate happens in the
//! normalized unit box `[0,1]^d`; raw parameters only exist at the
//! student boundary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in a task space (raw or normalized, depending on context).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskParams(pub Vec<f64>);

impl TaskParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for TaskParams {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Per-dimension bounds `lower[i] < upper[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct TaskSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawSpace> for TaskSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        TaskSpace::new(raw.lower, raw.upper)
    }
}

impl From<TaskSpace> for RawSpace {
    fn from(space: TaskSpace) -> Self {
        RawSpace {
            lower: space.lower,
            upper: space.upper,
        }
    }
}

impl TaskSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSpace("space needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidSpace(format!(
                    "dimension {i}: lower bound {lo} must be finite and below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Stump-track space: height in `[0,3]`, spacing in `[0,6]`.
    pub fn stump_tracks() -> Self {
        Self::new(vec![0.0, 0.0], vec![3.0, 6.0]).expect("static bounds are valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn check_dim(&self, p: &TaskParams) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &TaskParams) -> bool {
        p.dim() == self.dim()
            && p
                .values()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Affine map of each coordinate onto `[0,1]`.
    pub fn normalize(&self, p: &TaskParams) -> Result<TaskParams> {
        self.check_dim(p)?;
        Ok(p.values()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect::<Vec<_>>()
            .into())
    }

    pub fn denormalize(&self, p: &TaskParams) -> Result<TaskParams> {
        self.check_dim(p)?;
        Ok(p.values()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| lo + v * (hi - lo))
            .collect::<Vec<_>>()
            .into())
    }

    /// Coordinate-wise clamp into the bounds.
    pub fn clip(&self, p: &TaskParams) -> Result<TaskParams> {
        self.check_dim(p)?;
        Ok(p.values()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect::<Vec<_>>()
            .into())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> TaskParams {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect::<Vec<_>>()
            .into()
    }

    /// Uniform draw in the unit box of the same dimension.
    pub fn sample_uniform_normalized<R: Rng + ?Sized>(&self, rng: &mut R) -> TaskParams {
        (0..self.dim())
            .map(|_| rng.random::<f64>())
            .collect::<Vec<_>>()
            .into()
    }
}
