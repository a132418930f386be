//! Sign classes, the constraint table, reference-pose estimation and the two
//! linguistic loss terms.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::{CoreInterval, KeypointSequence};
use crate::kinematics::{mean_pose, slerp_pose, HandPose, MirrorConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn other(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hand::Left => "left",
            Hand::Right => "right",
        })
    }
}

impl FromStr for Hand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Hand::Left),
            "right" => Ok(Hand::Right),
            _ => Err(Error::Invalid(format!("unknown hand {s:?}"))),
        }
    }
}

macro_rules! string_enum {
    ($ty:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        impl $ty {
            pub const ALL: [$ty; [$($text),*].len()] = [$($ty::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),* }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)*
                    _ => Err(Error::Invalid(format!(concat!("unknown ", stringify!($ty), " {:?}"), s))),
                }
            }
        }

        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// The eight sign classes: one-handed (0), two active symmetric hands (1),
/// passive non-dominant hand with the same (2) or a different (3) handshape;
/// `a` static, `b` transitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignClass {
    C0a,
    C0b,
    C1a,
    C1b,
    C2a,
    C2b,
    C3a,
    C3b,
}

string_enum!(SignClass {
    C0a => "0a", C0b => "0b", C1a => "1a", C1b => "1b",
    C2a => "2a", C2b => "2b", C3a => "3a", C3b => "3b",
});

impl SignClass {
    pub fn is_symmetric(self) -> bool {
        matches!(self, SignClass::C1a | SignClass::C1b | SignClass::C2a)
    }
}

/// Classes that share a constraint set. Declaration order is the tie-break
/// order used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignGroup {
    G0a,
    G0b,
    G1a2a,
    G1b,
    G2b3b,
    G3a,
}

string_enum!(SignGroup {
    G0a => "G0a", G0b => "G0b", G1a2a => "G1a2a",
    G1b => "G1b", G2b3b => "G2b3b", G3a => "G3a",
});

impl SignGroup {
    /// A class of the group; all members share its constraint spec.
    pub fn representative(self) -> SignClass {
        match self {
            SignGroup::G0a => SignClass::C0a,
            SignGroup::G0b => SignClass::C0b,
            SignGroup::G1a2a => SignClass::C1a,
            SignGroup::G1b => SignClass::C1b,
            SignGroup::G2b3b => SignClass::C2b,
            SignGroup::G3a => SignClass::C3a,
        }
    }

    pub fn constraints(self) -> ConstraintSpec {
        constraints_for_class(self.representative())
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Invariance {
    Off,
    Static,
    Transitioning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpsMode {
    Static,
    Transitioning,
}

impl Invariance {
    pub fn mode(self) -> Option<RpsMode> {
        match self {
            Invariance::Off => None,
            Invariance::Static => Some(RpsMode::Static),
            Invariance::Transitioning => Some(RpsMode::Transitioning),
        }
    }
}

/// Active linguistic constraints for a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub symmetry: bool,
    pub dominant_invariance: Invariance,
    pub nondominant_invariance: Invariance,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        ConstraintSpec::NONE
    }
}

impl ConstraintSpec {
    pub const NONE: ConstraintSpec = ConstraintSpec {
        symmetry: false,
        dominant_invariance: Invariance::Off,
        nondominant_invariance: Invariance::Off,
    };

    pub fn invariance(&self, hand: Hand, dominant: Hand) -> Invariance {
        if hand == dominant {
            self.dominant_invariance
        } else {
            self.nondominant_invariance
        }
    }

    pub fn without_symmetry(self) -> Self {
        ConstraintSpec {
            symmetry: false,
            ..self
        }
    }

    pub fn without_invariance(self) -> Self {
        ConstraintSpec {
            dominant_invariance: Invariance::Off,
            nondominant_invariance: Invariance::Off,
            ..self
        }
    }
}

pub fn constraints_for_class(c: SignClass) -> ConstraintSpec {
    use Invariance::*;
    let (symmetry, dominant_invariance, nondominant_invariance) = match c {
        SignClass::C0a => (false, Static, Off),
        SignClass::C0b => (false, Transitioning, Off),
        SignClass::C1a => (true, Static, Static),
        SignClass::C1b => (true, Transitioning, Transitioning),
        SignClass::C2a => (true, Static, Static),
        SignClass::C2b => (false, Transitioning, Static),
        SignClass::C3a => (false, Static, Static),
        SignClass::C3b => (false, Transitioning, Static),
    };
    ConstraintSpec {
        symmetry,
        dominant_invariance,
        nondominant_invariance,
    }
}

pub fn group_of_class(c: SignClass) -> SignGroup {
    match c {
        SignClass::C0a => SignGroup::G0a,
        SignClass::C0b => SignGroup::G0b,
        SignClass::C1a | SignClass::C2a => SignGroup::G1a2a,
        SignClass::C1b => SignGroup::G1b,
        SignClass::C2b | SignClass::C3b => SignGroup::G2b3b,
        SignClass::C3a => SignGroup::G3a,
    }
}

// ---------------------------------------------------------------------------
// Candidate frames

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateConfig {
    /// Frames must reach this quantile of the interval's hand confidences.
    pub quantile: f64,
    pub max_candidates: usize,
    /// Fraction of the core interval at which transitioning signs are split.
    pub split: f64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            quantile: 0.6,
            max_candidates: 10,
            split: 0.5,
        }
    }
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

fn select_in(
    seq: &KeypointSequence,
    lo: f64,
    hi: f64,
    hand: Hand,
    cfg: &CandidateConfig,
) -> Result<Vec<usize>> {
    let frames: Vec<usize> = CoreInterval::frames_between(lo, hi, seq.len()).collect();
    let conf: Vec<f64> = frames
        .iter()
        .map(|&i| seq.frame(i).mean_hand_confidence(hand))
        .collect();
    let threshold = quantile(&conf, cfg.quantile).ok_or(Error::NoReliableFrames)?;
    let mut passing: Vec<(usize, f64)> = frames
        .into_iter()
        .zip(conf)
        .filter(|&(_, c)| c > 0.0 && c >= threshold)
        .collect();
    // highest confidence first, earlier frame on ties
    passing.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    passing.truncate(cfg.max_candidates);
    if passing.is_empty() {
        return Err(Error::NoReliableFrames);
    }
    let mut out: Vec<usize> = passing.into_iter().map(|(i, _)| i).collect();
    out.sort_unstable();
    Ok(out)
}

/// Reliable frames for estimating a hand's reference pose. Static mode
/// returns one list, transitioning mode one per half of the core interval.
pub fn select_candidate_frames(
    seq: &KeypointSequence,
    core: &CoreInterval,
    mode: RpsMode,
    hand: Hand,
    cfg: &CandidateConfig,
) -> Result<Vec<Vec<usize>>> {
    if core.frame_count != seq.len() {
        return Err(Error::Invalid(format!(
            "core interval covers {} frames but the sequence has {}",
            core.frame_count,
            seq.len()
        )));
    }
    match mode {
        RpsMode::Static => Ok(vec![select_in(seq, core.t_start, core.t_end, hand, cfg)?]),
        RpsMode::Transitioning => {
            let mid = core.t_start + cfg.split * core.length();
            Ok(vec![
                select_in(seq, core.t_start, mid, hand, cfg)?,
                select_in(seq, mid, core.t_end, hand, cfg)?,
            ])
        }
    }
}

// ---------------------------------------------------------------------------
// Reference pose sequences

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Reference {
    Static {
        pose_static: HandPose,
    },
    Transitioning {
        pose_initial: HandPose,
        pose_final: HandPose,
        /// Frame span of the transition. When absent the core interval is used.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        span: Option<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoseSequence {
    pub hand: Hand,
    #[serde(flatten)]
    pub reference: Reference,
}

impl ReferencePoseSequence {
    pub fn fixed(hand: Hand, pose: HandPose) -> Self {
        ReferencePoseSequence {
            hand,
            reference: Reference::Static { pose_static: pose },
        }
    }

    pub fn mode(&self) -> RpsMode {
        match self.reference {
            Reference::Static { .. } => RpsMode::Static,
            Reference::Transitioning { .. } => RpsMode::Transitioning,
        }
    }

    /// (θ_ref,i, θ_ref,f); both equal the static pose in static mode.
    pub fn endpoints(&self) -> (&HandPose, &HandPose) {
        match &self.reference {
            Reference::Static { pose_static } => (pose_static, pose_static),
            Reference::Transitioning {
                pose_initial,
                pose_final,
                ..
            } => (pose_initial, pose_final),
        }
    }

    pub fn mirrored(&self, mirror: &MirrorConvention) -> Self {
        let reference = match &self.reference {
            Reference::Static { pose_static } => Reference::Static {
                pose_static: mirror.reflect(pose_static),
            },
            Reference::Transitioning {
                pose_initial,
                pose_final,
                span,
            } => Reference::Transitioning {
                pose_initial: mirror.reflect(pose_initial),
                pose_final: mirror.reflect(pose_final),
                span: *span,
            },
        };
        ReferencePoseSequence {
            hand: self.hand.other(),
            reference,
        }
    }
}

/// Averages the candidate poses: one list for static mode, two for
/// transitioning. `span` optionally pins the transition to a frame range.
pub fn estimate_rps(
    hand: Hand,
    candidates: &[Vec<HandPose>],
    mode: RpsMode,
    span: Option<(f64, f64)>,
) -> Result<ReferencePoseSequence> {
    let expected = match mode {
        RpsMode::Static => 1,
        RpsMode::Transitioning => 2,
    };
    if candidates.len() != expected {
        return Err(Error::Invalid(format!(
            "{mode:?} reference needs {expected} candidate list(s), got {}",
            candidates.len()
        )));
    }
    let reference = match mode {
        RpsMode::Static => Reference::Static {
            pose_static: mean_pose(&candidates[0])?,
        },
        RpsMode::Transitioning => Reference::Transitioning {
            pose_initial: mean_pose(&candidates[0])?,
            pose_final: mean_pose(&candidates[1])?,
            span,
        },
    };
    Ok(ReferencePoseSequence { hand, reference })
}

/// Span covered by a transition between two candidate sets: from the last
/// frame of the first set to the first frame of the second.
pub fn transition_span(sets: &[Vec<usize>]) -> Option<(f64, f64)> {
    match sets {
        [a, b] => Some((*a.last()? as f64, *b.first()? as f64)),
        _ => None,
    }
}

/// Interpolation parameter of frame `t` inside `[lo, hi]`, clamped.
pub fn interpolation_parameter(t: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return if t < lo { 0.0 } else { 1.0 };
    }
    ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// θ_ref,t: the reference hand pose at frame `t`.
pub fn rps_pose_at(rps: &ReferencePoseSequence, t: f64, core: &CoreInterval) -> HandPose {
    match &rps.reference {
        Reference::Static { pose_static } => pose_static.clone(),
        Reference::Transitioning {
            pose_initial,
            pose_final,
            span,
        } => {
            let (lo, hi) = span.unwrap_or((core.t_start, core.t_end));
            let s = interpolation_parameter(t, lo, hi);
            slerp_pose(pose_initial, pose_final, s).expect("parameter is clamped to [0, 1]")
        }
    }
}

// ---------------------------------------------------------------------------
// Losses

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_s: f64,
    pub lambda_i: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_s: 50.0,
            lambda_i: 50.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_s >= 0.0 && self.lambda_i >= 0.0 {
            Ok(())
        } else {
            Err(Error::Invalid("loss weights must be non-negative".into()))
        }
    }
}

/// Value and gradients of a symmetry penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryLoss {
    pub value: f64,
    pub grad_right: Vec<f64>,
    pub grad_left: Vec<f64>,
}

/// λ_s‖θ_r − r(θ_l)‖² on flattened vectors, under a given mirror convention.
pub fn symmetry_loss_flat(
    theta_r: &[f64],
    theta_l: &[f64],
    lambda_s: f64,
    mirror: &MirrorConvention,
) -> SymmetryLoss {
    assert_eq!(theta_r.len(), theta_l.len(), "symmetry loss needs equal joint counts");
    let reflected = mirror.reflect_flat(theta_l);
    let diff: Vec<f64> = theta_r.iter().zip(&reflected).map(|(a, b)| a - b).collect();
    let value = lambda_s * diff.iter().map(|d| d * d).sum::<f64>();
    let grad_right: Vec<f64> = diff.iter().map(|d| 2.0 * lambda_s * d).collect();
    let grad_left = mirror
        .reflect_flat_transpose(&grad_right)
        .into_iter()
        .map(|g| -g)
        .collect();
    SymmetryLoss {
        value,
        grad_right,
        grad_left,
    }
}

pub fn symmetry_loss(theta_r: &HandPose, theta_l: &HandPose, lambda_s: f64) -> SymmetryLoss {
    symmetry_loss_flat(
        &theta_r.to_flat(),
        &theta_l.to_flat(),
        lambda_s,
        &MirrorConvention::default(),
    )
}

/// λ_i‖θ_ref,t − θ_h‖² and its gradient with respect to θ_h.
pub fn invariance_loss_flat(theta_h: &[f64], theta_ref: &[f64], lambda_i: f64) -> (f64, Vec<f64>) {
    assert_eq!(theta_h.len(), theta_ref.len(), "invariance loss needs equal joint counts");
    let mut value = 0.0;
    let grad = theta_h
        .iter()
        .zip(theta_ref)
        .map(|(h, r)| {
            let d = h - r;
            value += d * d;
            2.0 * lambda_i * d
        })
        .collect();
    (lambda_i * value, grad)
}

pub fn invariance_loss(theta_h: &HandPose, theta_ref_t: &HandPose, lambda_i: f64) -> (f64, Vec<f64>) {
    invariance_loss_flat(&theta_h.to_flat(), &theta_ref_t.to_flat(), lambda_i)
}

// ---------------------------------------------------------------------------
// Sidecar

/// Reference poses and the constraint spec they were estimated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpsFile {
    pub constraints: ConstraintSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<SignClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<SignGroup>,
    pub references: Vec<ReferencePoseSequence>,
}

impl RpsFile {
    pub fn reference(&self, hand: Hand) -> Option<&ReferencePoseSequence> {
        self.references.iter().find(|r| r.hand == hand)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("reference poses serialise");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::{core_interval, Keypoint2D, KeypointFrame};
    use crate::kinematics::JointRotation;

    fn uniform_sequence(t: usize, conf: f64) -> KeypointSequence {
        let frames = (0..t)
            .map(|i| {
                let mut f = KeypointFrame::undetected(i);
                for k in f.left_hand.iter_mut().chain(f.right_hand.iter_mut()) {
                    *k = Keypoint2D::new(1.0, 1.0, conf);
                }
                f
            })
            .collect();
        KeypointSequence::new(frames, 25.0, (100, 100)).unwrap()
    }

    #[test]
    fn string_forms_round_trip() {
        for c in SignClass::ALL {
            assert_eq!(c.as_str().parse::<SignClass>().unwrap(), c);
        }
        for g in SignGroup::ALL {
            assert_eq!(g.as_str().parse::<SignGroup>().unwrap(), g);
            assert_eq!(group_of_class(g.representative()), g);
        }
        assert!("4a".parse::<SignClass>().is_err());
        assert_eq!(serde_json::to_string(&SignClass::C2b).unwrap(), "\"2b\"");
    }

    #[test]
    fn uniform_confidence_picks_earliest_frames() {
        let seq = uniform_sequence(200, 0.9);
        let core = core_interval(200).unwrap();
        let c = select_candidate_frames(&seq, &core, RpsMode::Static, Hand::Right, &CandidateConfig::default())
            .unwrap();
        assert_eq!(c, vec![(13..23).collect::<Vec<_>>()]);
        let c = select_candidate_frames(
            &seq,
            &core,
            RpsMode::Transitioning,
            Hand::Right,
            &CandidateConfig::default(),
        )
        .unwrap();
        assert_eq!(c[0], (13..23).collect::<Vec<_>>());
        assert_eq!(c[1], (94..104).collect::<Vec<_>>());
        assert_eq!(transition_span(&c), Some((22.0, 94.0)));
    }

    #[test]
    fn zero_confidence_fails() {
        let seq = uniform_sequence(200, 0.0);
        let core = core_interval(200).unwrap();
        let err = select_candidate_frames(&seq, &core, RpsMode::Static, Hand::Left, &CandidateConfig::default());
        assert!(matches!(err, Err(Error::NoReliableFrames)));
    }

    #[test]
    fn confident_frames_win() {
        let mut seq = uniform_sequence(40, 0.5);
        let frames: Vec<KeypointFrame> = seq
            .frames()
            .iter()
            .map(|f| {
                let mut f = f.clone();
                if f.timestamp_index % 2 == 0 {
                    for k in f.right_hand.iter_mut() {
                        k.confidence = 0.95;
                    }
                }
                f
            })
            .collect();
        seq = KeypointSequence::new(frames, 25.0, (100, 100)).unwrap();
        let core = core_interval(40).unwrap();
        let c = select_candidate_frames(&seq, &core, RpsMode::Static, Hand::Right, &CandidateConfig::default())
            .unwrap();
        assert_eq!(c, vec![(4..24).step_by(2).collect::<Vec<_>>()]);
    }

    #[test]
    fn rps_time_base() {
        let core = core_interval(200).unwrap();
        let a = HandPose::zeros(1);
        let b = HandPose {
            joints: vec![JointRotation::new(0.0, 0.0, 1.0)],
            basis_coeffs: None,
        };
        let rps = estimate_rps(Hand::Right, &[vec![a.clone()], vec![b.clone()]], RpsMode::Transitioning, None)
            .unwrap();
        assert_eq!(rps_pose_at(&rps, core.t_start, &core), a);
        assert_eq!(rps_pose_at(&rps, 0.0, &core), a);
        assert_eq!(rps_pose_at(&rps, core.t_end, &core), b);
        assert_eq!(rps_pose_at(&rps, 500.0, &core), b);
        let mid = rps_pose_at(&rps, core.midpoint(), &core);
        assert!((mid.joints[0][2] - 0.5).abs() < 1e-12);

        let pinned = estimate_rps(
            Hand::Right,
            &[vec![a.clone()], vec![b.clone()]],
            RpsMode::Transitioning,
            Some((20.0, 40.0)),
        )
        .unwrap();
        assert!((rps_pose_at(&pinned, 30.0, &core).joints[0][2] - 0.5).abs() < 1e-12);

        let s = estimate_rps(Hand::Left, &[vec![b.clone()]], RpsMode::Static, None).unwrap();
        assert_eq!(rps_pose_at(&s, 3.0, &core).joints[0], b.joints[0]);
        assert!(estimate_rps(Hand::Left, &[vec![]], RpsMode::Static, None).is_err());
    }

    #[test]
    fn loss_arithmetic() {
        let r = HandPose {
            joints: vec![JointRotation::new(0.2, 0.0, 0.0)],
            basis_coeffs: None,
        };
        let l = HandPose::zeros(1);
        assert!((symmetry_loss(&r, &l, 1.0).value - 0.04).abs() < 1e-15);
        assert_eq!(symmetry_loss(&r, &l, 0.0).value, 0.0);
        let h = HandPose {
            joints: vec![JointRotation::new(0.0, 0.1, 0.0)],
            basis_coeffs: None,
        };
        assert!((invariance_loss(&h, &l, 1.0).0 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn sidecar_round_trip() {
        let file = RpsFile {
            constraints: constraints_for_class(SignClass::C3b),
            class: Some(SignClass::C3b),
            group: Some(SignGroup::G2b3b),
            references: vec![
                ReferencePoseSequence::fixed(Hand::Left, HandPose::default()),
                ReferencePoseSequence {
                    hand: Hand::Right,
                    reference: Reference::Transitioning {
                        pose_initial: HandPose::default(),
                        pose_final: HandPose::from_flat(&[0.1; 45]),
                        span: Some((3.0, 9.0)),
                    },
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rps.json");
        file.save(&path).unwrap();
        assert_eq!(RpsFile::load(&path).unwrap(), file);
    }
}
