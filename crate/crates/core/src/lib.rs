//! Automated curriculum learning over continuous task spaces.
//!
//! The crate provides the ALP-GMM teacher, distillation of its fitted
//! mixtures into expert curricula (pool-, time- and reward-stepped), the
//! two-stage AGAIN teacher mixing both, surrogate students, and an
//! experiment harness that evaluates teachers over seed sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod alp;
pub mod curriculum;
pub mod error;
pub mod gmm;
pub mod harness;
pub mod rng;
pub mod space;
pub mod stats;
pub mod student;
pub mod teacher;

pub use error::{Error, Result};
