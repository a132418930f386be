use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hand::{HandPose, MirrorConvention, HAND_JOINTS};
use super::rotation::JointRotation;
use crate::error::{Error, Result};
use crate::keypoints::KeypointArray;
use crate::linguistic::Hand;

const DEFAULT_SKELETON: &str = include_str!("../../data/skeleton_upper_body.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub parent: Option<String>,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointBindingSpec {
    pub node: String,
    pub array: KeypointArray,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendJointSpec {
    pub joint: String,
    pub component: usize,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandJointsSpec {
    pub left: Vec<String>,
    pub right: Vec<String>,
}

/// On-disk skeleton definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub name: String,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub sites: Vec<JointSpec>,
    #[serde(default)]
    pub mirror_pairs: Vec<[String; 2]>,
    #[serde(default = "default_negate")]
    pub mirror_negate_components: Vec<usize>,
    pub hand_joints: HandJointsSpec,
    pub keypoint_map: Vec<KeypointBindingSpec>,
    #[serde(default)]
    pub bend_joints: Vec<BendJointSpec>,
    #[serde(default)]
    pub standing_joints: Vec<String>,
}

fn default_negate() -> Vec<usize> {
    vec![1, 2]
}

/// A point of the kinematic tree: an articulated joint or a rigid site
/// (fingertip, nose, hip marker) attached to a joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Joint(usize),
    Site(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointBinding {
    pub node: NodeRef,
    pub array: KeypointArray,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub parent: usize,
    pub offset: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendJoint {
    pub joint: usize,
    pub component: usize,
    pub sign: f64,
}

/// Articulated upper-body-and-hands model.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub name: String,
    pub joint_names: Vec<String>,
    /// Parent joint; `None` only for the root. Parents precede children.
    pub parent: Vec<Option<usize>>,
    pub rest_offset: Vec<Vector3<f64>>,
    pub site_names: Vec<String>,
    pub sites: Vec<Site>,
    /// Left/right joint pairs; involutive.
    pub mirror_map: Vec<(usize, usize)>,
    pub mirror: MirrorConvention,
    /// Joints of the body chain, in [`BodyPose`] order.
    pub body_joints: Vec<usize>,
    pub left_hand: Vec<usize>,
    pub right_hand: Vec<usize>,
    pub keypoint_map: Vec<KeypointBinding>,
    pub bend_joints: Vec<BendJoint>,
    pub standing_joints: Vec<usize>,
    source: SkeletonFile,
}

impl Skeleton {
    /// The shipped 41-joint upper body with two 15-joint hands.
    pub fn default_upper_body() -> Self {
        let file: SkeletonFile =
            serde_json::from_str(DEFAULT_SKELETON).expect("shipped skeleton is valid JSON");
        Skeleton::from_file(file).expect("shipped skeleton is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SkeletonFile = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))?;
        Skeleton::from_file(file)
    }

    pub fn from_file(file: SkeletonFile) -> Result<Self> {
        let bad = |m: String| Error::malformed("skeleton", m);
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut parent = Vec::with_capacity(file.joints.len());
        for (i, j) in file.joints.iter().enumerate() {
            let p = match &j.parent {
                None => None,
                Some(name) => Some(*index.get(name.as_str()).ok_or_else(|| {
                    bad(format!("joint {}: parent {name} unknown or listed after its child", j.name))
                })?),
            };
            if index.insert(&j.name, i).is_some() {
                return Err(bad(format!("duplicate joint name {}", j.name)));
            }
            parent.push(p);
        }
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(bad(format!("expected exactly one root joint, found {roots}")));
        }
        let joint = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| bad(format!("unknown joint {name}")))
        };

        let mut site_index: HashMap<&str, usize> = HashMap::new();
        let mut sites = Vec::new();
        for (i, s) in file.sites.iter().enumerate() {
            let p = s
                .parent
                .as_deref()
                .ok_or_else(|| bad(format!("site {} has no parent", s.name)))?;
            if index.contains_key(s.name.as_str()) || site_index.insert(&s.name, i).is_some() {
                return Err(bad(format!("duplicate node name {}", s.name)));
            }
            sites.push(Site {
                parent: joint(p)?,
                offset: Vector3::from(s.offset),
            });
        }

        let mut mirror_map = Vec::new();
        let mut seen = vec![false; file.joints.len()];
        for [a, b] in &file.mirror_pairs {
            let (a, b) = (joint(a)?, joint(b)?);
            if a == b || seen[a] || seen[b] {
                return Err(bad("mirror pairs must form an involutive pairing".into()));
            }
            seen[a] = true;
            seen[b] = true;
            mirror_map.push((a, b));
        }
        if file.mirror_negate_components.iter().any(|&c| c > 2) {
            return Err(bad("mirror components must be 0, 1 or 2".into()));
        }

        let hand = |names: &[String]| -> Result<Vec<usize>> {
            if names.len() != HAND_JOINTS {
                return Err(Error::JointCount {
                    what: "skeleton hand",
                    expected: HAND_JOINTS,
                    found: names.len(),
                });
            }
            names.iter().map(|n| joint(n)).collect()
        };
        let left_hand = hand(&file.hand_joints.left)?;
        let right_hand = hand(&file.hand_joints.right)?;
        let mut in_hand = vec![false; file.joints.len()];
        for &j in left_hand.iter().chain(&right_hand) {
            if in_hand[j] {
                return Err(bad("hand joint lists overlap".into()));
            }
            in_hand[j] = true;
        }
        let body_joints: Vec<usize> = (0..file.joints.len()).filter(|&j| !in_hand[j]).collect();
        if parent[body_joints[0]].is_some() {
            return Err(bad("the root must be the first body joint".into()));
        }

        let mut keypoint_map = Vec::new();
        for b in &file.keypoint_map {
            let node = match (index.get(b.node.as_str()), site_index.get(b.node.as_str())) {
                (Some(&j), _) => NodeRef::Joint(j),
                (None, Some(&s)) => NodeRef::Site(s),
                _ => return Err(bad(format!("keypoint map: unknown node {}", b.node))),
            };
            if b.index >= b.array.len() {
                return Err(bad(format!("keypoint map: index {} out of range", b.index)));
            }
            keypoint_map.push(KeypointBinding {
                node,
                array: b.array,
                index: b.index,
            });
        }
        let bend_joints = file
            .bend_joints
            .iter()
            .map(|b| {
                if b.component > 2 {
                    return Err(bad("bend component must be 0, 1 or 2".into()));
                }
                Ok(BendJoint {
                    joint: joint(&b.joint)?,
                    component: b.component,
                    sign: b.sign,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let standing_joints = file
            .standing_joints
            .iter()
            .map(|n| joint(n))
            .collect::<Result<Vec<_>>>()?;
        for j in bend_joints.iter().map(|b| b.joint).chain(standing_joints.iter().copied()) {
            if in_hand[j] {
                return Err(bad("bend and standing joints must belong to the body chain".into()));
            }
        }

        Ok(Skeleton {
            name: file.name.clone(),
            joint_names: file.joints.iter().map(|j| j.name.clone()).collect(),
            parent,
            rest_offset: file.joints.iter().map(|j| Vector3::from(j.offset)).collect(),
            site_names: file.sites.iter().map(|s| s.name.clone()).collect(),
            sites,
            mirror_map,
            mirror: MirrorConvention::from_components(&file.mirror_negate_components),
            body_joints,
            left_hand,
            right_hand,
            keypoint_map,
            bend_joints,
            standing_joints,
            source: file,
        })
    }

    pub fn file(&self) -> &SkeletonFile {
        &self.source
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn node_count(&self) -> usize {
        self.joint_count() + self.sites.len()
    }

    pub fn node_index(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Joint(j) => j,
            NodeRef::Site(s) => self.joint_count() + s,
        }
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn hand_joints(&self, hand: Hand) -> &[usize] {
        match hand {
            Hand::Left => &self.left_hand,
            Hand::Right => &self.right_hand,
        }
    }

    /// Position of a body joint inside [`BodyPose::joints`].
    pub fn body_slot(&self, joint: usize) -> Option<usize> {
        self.body_joints.iter().position(|&j| j == joint)
    }

    pub fn wrist(&self, hand: Hand) -> usize {
        self.parent[self.hand_joints(hand)[0]].expect("hand joints hang off a wrist")
    }

    /// Whether `ancestor` is on the path from `joint` to the root (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, joint: usize) -> bool {
        let mut j = Some(joint);
        while let Some(k) = j {
            if k == ancestor {
                return true;
            }
            j = self.parent[k];
        }
        false
    }

    /// Hex SHA-256 of the canonical JSON form of the definition.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.source).expect("skeleton serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Distance between the rest positions of the neck keypoint and the
    /// mid-hip keypoint.
    pub fn rest_torso_length(&self) -> Option<f64> {
        let rest = self.rest_positions();
        let find = |idx: usize| {
            self.keypoint_map
                .iter()
                .find(|b| b.array == KeypointArray::Body && b.index == idx)
                .map(|b| rest.node(b.node))
        };
        Some((find(crate::keypoints::body::NECK)? - find(crate::keypoints::body::MID_HIP)?).norm())
    }

    pub fn rest_positions(&self) -> Positions {
        forward_kinematics_local(self, &vec![Vector3::zeros(); self.joint_count()], &Vector3::zeros())
    }

    /// Node indices (joints then sites) of a named evaluation region.
    pub fn region(&self, name: &str) -> Option<Vec<usize>> {
        let site_in = |joints: &[usize], s: &Site| joints.contains(&s.parent);
        let hand_region = |hand: Hand| {
            let mut joints = vec![self.wrist(hand)];
            joints.extend_from_slice(self.hand_joints(hand));
            let mut nodes = joints.clone();
            nodes.extend(
                self.sites
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| site_in(self.hand_joints(hand), s))
                    .map(|(i, _)| self.joint_count() + i),
            );
            nodes
        };
        match name {
            "left_hand" => Some(hand_region(Hand::Left)),
            "right_hand" => Some(hand_region(Hand::Right)),
            "both_hands" => {
                let mut v = hand_region(Hand::Left);
                v.extend(hand_region(Hand::Right));
                Some(v)
            }
            "upper_body" => {
                let root = self.body_joints[0];
                Some(
                    (0..self.node_count())
                        .filter(|&n| n != root)
                        .filter(|&n| n < self.joint_count() || self.sites[n - self.joint_count()].parent != root)
                        .collect(),
                )
            }
            "all" => Some((0..self.node_count()).collect()),
            _ => None,
        }
    }

    pub const REGIONS: [&'static str; 5] = ["upper_body", "left_hand", "right_hand", "both_hands", "all"];

    /// Local axis-angle rotation of every joint in skeleton order.
    pub fn local_rotations(
        &self,
        body: &BodyPose,
        left: &HandPose,
        right: &HandPose,
    ) -> Result<Vec<Vector3<f64>>> {
        let check = |what, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::JointCount {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("body pose", self.body_joints.len(), body.joints.len())?;
        check("left hand pose", HAND_JOINTS, left.len())?;
        check("right hand pose", HAND_JOINTS, right.len())?;
        let mut local = vec![Vector3::zeros(); self.joint_count()];
        for (slot, &j) in self.body_joints.iter().enumerate() {
            local[j] = body.joints[slot].0;
        }
        for (k, &j) in self.left_hand.iter().enumerate() {
            local[j] = left.joints[k].0;
        }
        for (k, &j) in self.right_hand.iter().enumerate() {
            local[j] = right.joints[k].0;
        }
        Ok(local)
    }
}

/// Body-chain rotations plus the root translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub joints: Vec<JointRotation>,
    pub root_translation: Vector3<f64>,
}

impl BodyPose {
    pub fn rest(skel: &Skeleton) -> Self {
        BodyPose {
            joints: vec![JointRotation::IDENTITY; skel.body_joints.len()],
            root_translation: Vector3::zeros(),
        }
    }
}

/// World positions and orientations produced by forward kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    pub joints: Vec<Vector3<f64>>,
    pub sites: Vec<Vector3<f64>>,
    pub global_rotation: Vec<Matrix3<f64>>,
}

impl Positions {
    pub fn node(&self, node: NodeRef) -> Vector3<f64> {
        match node {
            NodeRef::Joint(j) => self.joints[j],
            NodeRef::Site(s) => self.sites[s],
        }
    }

    /// Joints followed by sites.
    pub fn all_nodes(&self) -> Vec<Vector3<f64>> {
        self.joints.iter().chain(&self.sites).copied().collect()
    }
}

pub(crate) fn forward_kinematics_local(
    skel: &Skeleton,
    local: &[Vector3<f64>],
    translation: &Vector3<f64>,
) -> Positions {
    let n = skel.joint_count();
    let mut joints = vec![Vector3::zeros(); n];
    let mut global_rotation = vec![Matrix3::identity(); n];
    for j in 0..n {
        let r = JointRotation(local[j]).matrix();
        match skel.parent[j] {
            None => {
                joints[j] = translation + skel.rest_offset[j];
                global_rotation[j] = r;
            }
            Some(p) => {
                joints[j] = joints[p] + global_rotation[p] * skel.rest_offset[j];
                global_rotation[j] = global_rotation[p] * r;
            }
        }
    }
    let sites = skel
        .sites
        .iter()
        .map(|s| joints[s.parent] + global_rotation[s.parent] * s.offset)
        .collect();
    Positions {
        joints,
        sites,
        global_rotation,
    }
}

/// Composes parent-to-child rigid transforms from the root outwards.
pub fn forward_kinematics(
    skel: &Skeleton,
    body: &BodyPose,
    left: &HandPose,
    right: &HandPose,
) -> Result<Positions> {
    let local = skel.local_rotations(body, left, right)?;
    Ok(forward_kinematics_local(skel, &local, &body.root_translation))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_skeleton_shape() {
        let s = Skeleton::default_upper_body();
        assert_eq!(s.joint_count(), 41);
        assert_eq!(s.body_joints.len(), 11);
        assert_eq!(s.mirror_map.len(), 18);
        assert!((s.rest_torso_length().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(s.hash(), Skeleton::default_upper_body().hash());
        assert_eq!(s.region("left_hand").unwrap().len(), 21);
        assert!(s.region("elbows").is_none());
    }

    #[test]
    fn identity_pose_gives_cumulative_offsets() {
        let s = Skeleton::default_upper_body();
        let body = BodyPose::rest(&s);
        let pos = forward_kinematics(&s, &body, &HandPose::default(), &HandPose::default()).unwrap();
        for j in 0..s.joint_count() {
            let mut expected = Vector3::zeros();
            let mut k = Some(j);
            while let Some(i) = k {
                expected += s.rest_offset[i];
                k = s.parent[i];
            }
            assert!((pos.joints[j] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn right_angle_bend() {
        let s = Skeleton::default_upper_body();
        let elbow = s.joint_index("right_elbow").unwrap();
        let wrist = s.joint_index("right_wrist").unwrap();
        let mut body = BodyPose::rest(&s);
        body.joints[s.body_slot(elbow).unwrap()] = JointRotation::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let pos = forward_kinematics(&s, &body, &HandPose::default(), &HandPose::default()).unwrap();
        // R_z(90°)·(−0.25, 0, 0) = (0, −0.25, 0)
        let d = pos.joints[wrist] - pos.joints[elbow];
        assert!((d - Vector3::new(0.0, -0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_definitions() {
        let mut file = Skeleton::default_upper_body().file().clone();
        file.joints[1].parent = None;
        assert!(Skeleton::from_file(file).is_err());
        let mut file = Skeleton::default_upper_body().file().clone();
        file.mirror_pairs.push(["right_elbow".into(), "left_wrist".into()]);
        assert!(Skeleton::from_file(file).is_err());
        let mut file = Skeleton::default_upper_body().file().clone();
        file.hand_joints.left.pop();
        assert!(matches!(Skeleton::from_file(file), Err(Error::JointCount { .. })));
    }

    #[test]
    fn joint_count_mismatch() {
        let s = Skeleton::default_upper_body();
        let mut body = BodyPose::rest(&s);
        body.joints.pop();
        assert!(matches!(
            forward_kinematics(&s, &body, &HandPose::default(), &HandPose::default()),
            Err(Error::JointCount { .. })
        ));
    }
}
