//! Monocular 3D pose fitting for isolated sign-language signs.
//!
//! The pipeline takes per-frame 2D body and hand keypoints, trims the sign,
//! estimates reference hand poses from reliable frames, picks a sign group
//! (from a HamNoSys-trained or hand-crafted decision tree) and fits an
//! articulated skeleton frame by frame under the group's hand-pose symmetry
//! and invariance priors.

pub mod classifier;
pub mod error;
pub mod hamnosys;
pub mod keypoints;
pub mod kinematics;
pub mod linguistic;
pub mod metrics_synth;
pub mod optimizer;
pub mod par;

pub use error::{Error, Result};
