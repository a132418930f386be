//! Fitted pose sequences on disk (JSON).

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{BodyPose, Camera, HandPose, JointRotation, Skeleton, HAND_JOINTS};
use crate::linguistic::{ConstraintSpec, SignClass, SignGroup};

use super::fit::SequenceFit;
use super::objective::{FitState, TermBreakdown};
use super::solver::Convergence;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseHeader {
    pub skeleton: String,
    pub skeleton_hash: String,
    pub camera: Camera,
    /// Echo of the configuration that produced the file.
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<SignClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<SignGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintSpec>,
    #[serde(default = "one")]
    pub bone_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub frame: usize,
    pub root_translation: [f64; 3],
    /// Body-joint axis-angles, flattened.
    pub body: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<TermBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
}

impl PoseRecord {
    pub fn from_state(frame: usize, s: &FitState) -> Self {
        PoseRecord {
            frame,
            root_translation: s.body.root_translation.into(),
            body: s.body.joints.iter().flat_map(|r| r.0.iter().copied()).collect(),
            left: s.left.to_flat(),
            right: s.right.to_flat(),
            left_coeffs: s.left.basis_coeffs.clone(),
            right_coeffs: s.right.basis_coeffs.clone(),
            terms: None,
            objective: None,
            iterations: None,
            convergence: None,
        }
    }

    pub fn state(&self, camera: Camera) -> FitState {
        let hand = |flat: &[f64], coeffs: &Option<Vec<f64>>| HandPose {
            basis_coeffs: coeffs.clone(),
            ..HandPose::from_flat(flat)
        };
        FitState {
            body: BodyPose {
                joints: self
                    .body
                    .chunks(3)
                    .map(|c| JointRotation(Vector3::from_column_slice(c)))
                    .collect(),
                root_translation: Vector3::from(self.root_translation),
            },
            left: hand(&self.left, &self.left_coeffs),
            right: hand(&self.right, &self.right_coeffs),
            camera,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub header: PoseHeader,
    pub frames: Vec<PoseRecord>,
}

impl PoseFile {
    pub fn from_states(skel: &Skeleton, camera: Camera, states: &[(usize, FitState)]) -> Self {
        PoseFile {
            header: PoseHeader {
                skeleton: skel.name.clone(),
                skeleton_hash: skel.hash(),
                camera,
                config: serde_json::Value::Null,
                class: None,
                group: None,
                constraints: None,
                bone_scale: 1.0,
            },
            frames: states.iter().map(|(f, s)| PoseRecord::from_state(*f, s)).collect(),
        }
    }

    pub fn from_fit(skel: &Skeleton, fit: &SequenceFit, config: serde_json::Value) -> Self {
        let frames = fit
            .frames
            .iter()
            .zip(&fit.states)
            .zip(fit.terms.iter().zip(&fit.reports))
            .map(|((&f, s), (terms, report))| PoseRecord {
                terms: Some(*terms),
                objective: Some(terms.total()),
                iterations: Some(report.iterations),
                convergence: Some(report.reason),
                ..PoseRecord::from_state(f, s)
            })
            .collect();
        PoseFile {
            header: PoseHeader {
                skeleton: skel.name.clone(),
                skeleton_hash: skel.hash(),
                camera: fit.camera,
                config,
                class: fit.class,
                group: fit.group,
                constraints: Some(fit.constraints),
                bone_scale: fit.bone_scale,
            },
            frames,
        }
    }

    pub fn states(&self) -> Vec<(usize, FitState)> {
        self.frames
            .iter()
            .map(|r| (r.frame, r.state(self.header.camera)))
            .collect()
    }

    /// Checks that every record has the joint counts of `skel`.
    pub fn check_against(&self, skel: &Skeleton) -> Result<()> {
        for r in &self.frames {
            let checks = [
                ("body pose", 3 * skel.body_joints.len(), r.body.len()),
                ("left hand pose", 3 * HAND_JOINTS, r.left.len()),
                ("right hand pose", 3 * HAND_JOINTS, r.right.len()),
            ];
            for (what, expected, found) in checks {
                if expected != found {
                    return Err(Error::JointCount {
                        what,
                        expected: expected / 3,
                        found: found / 3,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pose file serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PoseFile =
            serde_json::from_str(&text).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))?;
        Ok(file)
    }
}
