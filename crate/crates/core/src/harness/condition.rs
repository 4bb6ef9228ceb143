use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::student::ResetMode;
use crate::teacher::InVariant;

/// A teacher setup compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Again(InVariant, ResetMode),
    In(InVariant, ResetMode),
    AlpGmm,
    Oracle,
    Random,
}

impl Condition {
    /// All fifteen conditions in reporting order.
    pub fn roster() -> Vec<Condition> {
        let mut out = Vec::with_capacity(15);
        for v in [InVariant::Reward, InVariant::Time, InVariant::Pool] {
            for make in [Condition::Again as fn(InVariant, ResetMode) -> Condition, Condition::In] {
                out.push(make(v, ResetMode::Scratch));
                out.push(make(v, ResetMode::FineTune));
            }
        }
        out.extend([Condition::AlpGmm, Condition::Oracle, Condition::Random]);
        out
    }

    /// Position in [`Condition::roster`].
    pub fn rank(&self) -> usize {
        Self::roster().iter().position(|c| c == self).expect("roster is exhaustive")
    }

    /// Whether the run is split into a preliminary ALP-GMM stage and a second stage.
    pub fn is_two_stage(&self) -> bool {
        matches!(self, Condition::Again(..) | Condition::In(..))
    }

    pub fn reset_mode(&self) -> Option<ResetMode> {
        match self {
            Condition::Again(_, m) | Condition::In(_, m) => Some(*m),
            _ => None,
        }
    }

    /// File-system friendly name, e.g. `again-r-fine-tune`.
    pub fn slug(&self) -> String {
        self.to_string()
            .to_ascii_lowercase()
            .replace(['(', ')'], "-")
            .trim_end_matches('-')
            .replace("--", "-")
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (head, variant, mode) = match self {
            Condition::Again(v, m) => ("AGAIN", v, m),
            Condition::In(v, m) => ("IN", v, m),
            Condition::AlpGmm => return f.write_str("ALP-GMM"),
            Condition::Oracle => return f.write_str("Oracle"),
            Condition::Random => return f.write_str("Random"),
        };
        write!(f, "{head}-{}", variant.letter())?;
        if *mode == ResetMode::FineTune {
            f.write_str("(fine-tune)")?;
        }
        Ok(())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown condition {s:?}"));
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "alp-gmm" | "alpgmm" => return Ok(Condition::AlpGmm),
            "oracle" => return Ok(Condition::Oracle),
            "random" => return Ok(Condition::Random),
            _ => {}
        }
        let (body, mode) = match lower.strip_suffix("(fine-tune)") {
            Some(body) => (body, ResetMode::FineTune),
            None => (lower.as_str(), ResetMode::Scratch),
        };
        let (head, letter) = body.rsplit_once('-').ok_or_else(bad)?;
        let variant: InVariant = letter.parse().map_err(|_| bad())?;
        match head {
            "again" => Ok(Condition::Again(variant, mode)),
            "in" => Ok(Condition::In(variant, mode)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
