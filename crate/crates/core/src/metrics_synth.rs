//! Evaluation metrics, the synthetic sequence generator and the constraint
//! ablation harness.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::FeatureVector;
use crate::error::{Error, Result};
use crate::keypoints::{
    core_interval, save_keypoint_sequence, trim_sequence, Keypoint2D, KeypointArray, KeypointFrame,
    KeypointSequence, TrimConfig,
};
use crate::kinematics::{BodyPose, Camera, HandPose, JointRotation, Positions, Skeleton, HAND_JOINTS};
use crate::linguistic::{
    constraints_for_class, interpolation_parameter, select_candidate_frames, transition_span, CandidateConfig, Hand, RpsMode, SignClass,
    SignGroup,
};
use crate::optimizer::{
    check_gradient, fit_sequence, ClassChoice, ConstraintFilter, FitState, FrameObjective, FrameTerms, ObjectiveConfig,
    PoseFile, SequenceConfig, SequenceInputs,
};
use crate::par::{self, Execution};

// ---------------------------------------------------------------------------
// Metrics

/// Mean distance in millimetres between two point sets after removing each
/// set's centroid. Inputs are in metres.
pub fn tr_v2v(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::JointCount {
            what: "point set",
            expected: gt.len(),
            found: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let n = gt.len() as f64;
    let cp = pred.iter().sum::<Vector3<f64>>() / n;
    let cg = gt.iter().sum::<Vector3<f64>>() / n;
    let total: f64 = pred.iter().zip(gt).map(|(p, g)| ((p - cp) - (g - cg)).norm()).sum();
    Ok(1000.0 * total / n)
}

/// [`tr_v2v`] restricted to a named skeleton region.
pub fn tr_v2v_region(skel: &Skeleton, pred: &Positions, gt: &Positions, region: &str) -> Result<f64> {
    let nodes = skel
        .region(region)
        .ok_or_else(|| Error::UnknownRegion(region.to_string()))?;
    if nodes.is_empty() {
        return Err(Error::Empty("region"));
    }
    let all_p = pred.all_nodes();
    let all_g = gt.all_nodes();
    let p: Vec<_> = nodes.iter().map(|&i| all_p[i]).collect();
    let g: Vec<_> = nodes.iter().map(|&i| all_g[i]).collect();
    tr_v2v(&p, &g)
}

/// Mean geodesic angle in radians between paired joint rotations.
pub fn joint_angle_error(pred: &[JointRotation], gt: &[JointRotation]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::JointCount {
            what: "joint rotations",
            expected: gt.len(),
            found: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::Empty("joint rotations"));
    }
    Ok(pred.iter().zip(gt).map(|(a, b)| a.geodesic_distance(b)).sum::<f64>() / gt.len() as f64)
}

/// Errors of one fitted sequence against its ground truth, averaged over frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    pub frames: usize,
    pub left_mm: f64,
    pub right_mm: f64,
    pub both_mm: f64,
    pub left_rad: f64,
    pub right_rad: f64,
    pub both_rad: f64,
    /// Over every joint of the skeleton.
    pub all_rad: f64,
    pub upper_body_mm: f64,
}

impl SequenceMetrics {
    fn mean(items: &[SequenceMetrics]) -> SequenceMetrics {
        let n = items.len().max(1) as f64;
        let mut m = SequenceMetrics::default();
        for s in items {
            m.frames += s.frames;
            m.left_mm += s.left_mm / n;
            m.right_mm += s.right_mm / n;
            m.both_mm += s.both_mm / n;
            m.left_rad += s.left_rad / n;
            m.right_rad += s.right_rad / n;
            m.both_rad += s.both_rad / n;
            m.all_rad += s.all_rad / n;
            m.upper_body_mm += s.upper_body_mm / n;
        }
        m
    }
}

/// Compares the frames present in both `pred` and `gt` (matched by index).
pub fn evaluate_sequence(
    skel: &Skeleton,
    pred: &[(usize, FitState)],
    gt: &[(usize, FitState)],
) -> Result<SequenceMetrics> {
    let mut per_frame = Vec::new();
    for (f, p) in pred {
        let Some((_, g)) = gt.iter().find(|(k, _)| k == f) else {
            continue;
        };
        let pp = p.positions(skel)?;
        let gp = g.positions(skel)?;
        let hand_err = |h: Hand| joint_angle_error(&p.hand(h).joints, &g.hand(h).joints);
        let mut both = p.left.joints.clone();
        both.extend_from_slice(&p.right.joints);
        let mut both_gt = g.left.joints.clone();
        both_gt.extend_from_slice(&g.right.joints);
        let all: Vec<JointRotation> = p.local_rotations(skel)?.into_iter().map(JointRotation).collect();
        let all_gt: Vec<JointRotation> = g.local_rotations(skel)?.into_iter().map(JointRotation).collect();
        per_frame.push(SequenceMetrics {
            frames: 1,
            left_mm: tr_v2v_region(skel, &pp, &gp, "left_hand")?,
            right_mm: tr_v2v_region(skel, &pp, &gp, "right_hand")?,
            both_mm: tr_v2v_region(skel, &pp, &gp, "both_hands")?,
            left_rad: hand_err(Hand::Left)?,
            right_rad: hand_err(Hand::Right)?,
            both_rad: joint_angle_error(&both, &both_gt)?,
            all_rad: joint_angle_error(&all, &all_gt)?,
            upper_body_mm: tr_v2v_region(skel, &pp, &gp, "upper_body")?,
        });
    }
    if per_frame.is_empty() {
        return Err(Error::Empty("no frames in common between prediction and ground truth"));
    }
    let mut m = SequenceMetrics::mean(&per_frame);
    m.frames = per_frame.len();
    Ok(m)
}

// ---------------------------------------------------------------------------
// Synthetic sequences

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub class: SignClass,
    pub seed: u64,
    pub frames: usize,
    /// Standard deviation of the keypoint noise in pixels.
    pub noise_px: f64,
    /// Probability that a hand goes undetected in a frame.
    pub dropout: f64,
    pub image_size: (u32, u32),
    pub focal: f64,
    pub root_depth: f64,
    pub fps: f64,
    /// Finger joint angles are drawn from ±this many radians.
    pub hand_amplitude: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            class: SignClass::C1a,
            seed: 0,
            frames: 64,
            noise_px: 0.0,
            dropout: 0.0,
            image_size: (2000, 2000),
            focal: 5000.0,
            root_depth: 6.0,
            fps: 25.0,
            hand_amplitude: 0.7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 16 {
            return Err(Error::Invalid(format!("synthetic sequences need at least 16 frames, got {}", self.frames)));
        }
        if !(self.noise_px >= 0.0 && self.noise_px.is_finite()) {
            return Err(Error::Invalid("noise must be a finite non-negative number".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub spec: SynthSpec,
    pub camera: Camera,
    /// Noisy keypoints with dropout.
    pub keypoints: KeypointSequence,
    /// Exact projections of the ground truth.
    pub clean: KeypointSequence,
    pub ground_truth: Vec<FitState>,
}

impl SynthSequence {
    pub fn ground_truth_indexed(&self) -> Vec<(usize, FitState)> {
        self.ground_truth.iter().cloned().enumerate().collect()
    }

    /// Writes `keypoints/`, `clean/` and `ground_truth.json` under `dir`.
    pub fn save(&self, skel: &Skeleton, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_keypoint_sequence(&self.keypoints, dir.join("keypoints"))?;
        save_keypoint_sequence(&self.clean, dir.join("clean"))?;
        let mut file = PoseFile::from_states(skel, self.camera, &self.ground_truth_indexed());
        file.header.class = Some(self.spec.class);
        file.header.config = serde_json::to_value(self.spec).expect("spec serialises");
        file.save(dir.join("ground_truth.json"))
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Planar hand pose: every joint bends about the camera axis.
fn random_hand(rng: &mut ChaCha8Rng, amplitude: f64) -> HandPose {
    HandPose {
        joints: (0..HAND_JOINTS)
            .map(|_| JointRotation::new(0.0, 0.0, rng.random_range(-amplitude..amplitude)))
            .collect(),
        basis_coeffs: None,
    }
}

/// Arm angles (shoulder, elbow, wrist) about the camera axis for the right
/// arm; the left arm uses the negated angles.
#[derive(Debug, Clone, Copy)]
struct ArmAngles([f64; 3]);

const ARM_REST: ArmAngles = ArmAngles([-1.45, 0.1, 0.0]);
const ARM_PASSIVE: ArmAngles = ArmAngles([-1.2, 2.4, 0.0]);

#[derive(Debug, Clone, Copy)]
struct Motion {
    centre: [f64; 3],
    amplitude: [f64; 3],
    phase: [f64; 3],
    cycles: f64,
}

impl Motion {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Motion {
            centre: [rng.random_range(-1.0..-0.7), rng.random_range(2.0..2.4), rng.random_range(-0.2..0.2)],
            amplitude: [rng.random_range(0.15..0.3), rng.random_range(0.2..0.35), rng.random_range(0.1..0.2)],
            phase: [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)],
            cycles: rng.random_range(1.0..2.0),
        }
    }

    /// Lead-in from rest, sinusoidal arcs, lead-out back to rest.
    fn at(&self, u: f64) -> ArmAngles {
        let envelope = smoothstep(u / 0.12) * smoothstep((1.0 - u) / 0.12);
        ArmAngles(std::array::from_fn(|k| {
            let active = self.centre[k] + self.amplitude[k] * (2.0 * PI * self.cycles * u + self.phase[k]).sin();
            ARM_REST.0[k] + envelope * (active - ARM_REST.0[k])
        }))
    }
}

fn set_arm(skel: &Skeleton, body: &mut BodyPose, hand: Hand, arm: ArmAngles) {
    let wrist = skel.wrist(hand);
    let elbow = skel.parent[wrist].expect("wrist has an elbow");
    let shoulder = skel.parent[elbow].expect("elbow has a shoulder");
    let sign = match hand {
        Hand::Right => 1.0,
        Hand::Left => -1.0,
    };
    for (joint, angle) in [shoulder, elbow, wrist].into_iter().zip(arm.0) {
        let slot = skel.body_slot(joint).expect("arm joints are body joints");
        body.joints[slot] = JointRotation::new(0.0, 0.0, sign * angle);
    }
}

/// Projects the skeleton's keypoint bindings for one state.
pub fn render_keypoints(skel: &Skeleton, state: &FitState, index: usize) -> Result<KeypointFrame> {
    let pos = state.positions(skel)?;
    let mut frame = KeypointFrame::undetected(index);
    for b in &skel.keypoint_map {
        let pc = state.camera.to_camera(&pos.node(b.node));
        let uv = state
            .camera
            .project_point(&pc)
            .ok_or(Error::NonPositiveDepth { index: b.index, z: pc.z })?;
        frame.array_mut(b.array)[b.index] = Keypoint2D::new(uv.x, uv.y, 1.0);
    }
    Ok(frame)
}

fn render_sequence(skel: &Skeleton, states: &[FitState], spec: &SynthSpec) -> Result<KeypointSequence> {
    let frames = states
        .iter()
        .enumerate()
        .map(|(i, s)| render_keypoints(skel, s, i))
        .collect::<Result<Vec<_>>>()?;
    KeypointSequence::new(frames, spec.fps, spec.image_size)
}

/// Generates a ground-truth sequence of the given class and its keypoints.
///
/// The right hand is dominant. Transitioning hands hold their initial pose
/// up to the last first-half candidate frame that the fitting pipeline will
/// select, rotate to the final pose by the first second-half candidate, and
/// hold it afterwards.
pub fn synth_sequence(skel: &Skeleton, spec: &SynthSpec) -> Result<SynthSequence> {
    spec.validate()?;
    let camera = Camera::new(
        spec.focal,
        (f64::from(spec.image_size.0) / 2.0, f64::from(spec.image_size.1) / 2.0),
        spec.root_depth,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let motion = Motion::random(&mut rng);
    let right_initial = random_hand(&mut rng, spec.hand_amplitude);
    let right_final = random_hand(&mut rng, spec.hand_amplitude);
    let other = random_hand(&mut rng, spec.hand_amplitude);
    let mirror = &skel.mirror;

    use SignClass::*;
    let transitioning = matches!(spec.class, C0b | C1b | C2b | C3b);
    let n = spec.frames;
    let mut states: Vec<FitState> = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let mut s = FitState::rest(skel, camera);
            s.body.root_translation = Vector3::new(0.0, 0.3, 0.0);
            let right = motion.at(u);
            set_arm(skel, &mut s.body, Hand::Right, right);
            let left = match spec.class {
                C1a | C1b => right,
                C2a | C2b | C3a | C3b => ARM_PASSIVE,
                C0a | C0b => ARM_REST,
            };
            set_arm(skel, &mut s.body, Hand::Left, left);
            s.right = right_initial.clone();
            s
        })
        .collect();

    // hand schedule, anchored to the frames the pipeline will pick
    let (lo, hi) = if transitioning {
        let clean = render_sequence(skel, &states, spec)?;
        let (start, end) = trim_sequence(&clean, &TrimConfig::default())?;
        let trimmed = clean.slice(start, end)?;
        let core = core_interval(trimmed.len())?;
        let sets = select_candidate_frames(&trimmed, &core, RpsMode::Transitioning, Hand::Right, &CandidateConfig::default())?;
        let (a, b) = transition_span(&sets).ok_or(Error::NoReliableFrames)?;
        (a + start as f64, b + start as f64)
    } else {
        (0.0, 0.0)
    };
    for (i, s) in states.iter_mut().enumerate() {
        s.right = if transitioning {
            let t = interpolation_parameter(i as f64, lo, hi);
            crate::kinematics::slerp_pose(&right_initial, &right_final, t)?
        } else {
            right_initial.clone()
        };
        s.left = match spec.class {
            C1a | C1b | C2a => mirror.reflect(&s.right),
            C2b => mirror.reflect(&right_initial),
            C0a | C0b | C3a | C3b => other.clone(),
        };
    }

    let clean = render_sequence(skel, &states, spec)?;
    let mut noisy_frames = clean.frames().to_vec();
    if spec.noise_px > 0.0 || spec.dropout > 0.0 {
        let normal = Normal::new(0.0, spec.noise_px.max(f64::MIN_POSITIVE)).expect("valid deviation");
        for f in &mut noisy_frames {
            for which in [KeypointArray::Body, KeypointArray::LeftHand, KeypointArray::RightHand] {
                for k in f.array_mut(which).iter_mut().filter(|k| k.is_detected()) {
                    if spec.noise_px > 0.0 {
                        k.x += normal.sample(&mut rng);
                        k.y += normal.sample(&mut rng);
                    }
                }
            }
            for hand in Hand::BOTH {
                if spec.dropout > 0.0 && rng.random_bool(spec.dropout) {
                    for k in f.array_mut(KeypointArray::hand(hand)).iter_mut() {
                        *k = Keypoint2D::default();
                    }
                }
            }
        }
    }
    let keypoints = KeypointSequence::new(noisy_frames, spec.fps, spec.image_size)?;
    Ok(SynthSequence {
        spec: *spec,
        camera,
        keypoints,
        clean,
        ground_truth: states,
    })
}

/// Feature vectors scattered around well separated per-group centroids.
pub fn separable_benchmark(per_group: usize, spread: f64, seed: u64) -> Vec<(FeatureVector, SignGroup)> {
    const CENTROIDS: [(SignGroup, [f64; 3]); 6] = [
        (SignGroup::G0a, [0.05, 1.2, 0.1]),
        (SignGroup::G0b, [0.05, 1.2, 1.0]),
        (SignGroup::G1a2a, [1.5, 0.05, 0.05]),
        (SignGroup::G1b, [1.5, 0.05, 1.0]),
        (SignGroup::G2b3b, [0.3, 0.6, 1.0]),
        (SignGroup::G3a, [0.3, 1.2, 0.1]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, spread.max(f64::MIN_POSITIVE)).expect("valid spread");
    let mut out = Vec::with_capacity(per_group * CENTROIDS.len());
    for _ in 0..per_group {
        for (g, c) in CENTROIDS {
            let mut v = [0.0; 3];
            for k in 0..3 {
                v[k] = (c[k] + normal.sample(&mut rng)).max(0.0);
            }
            out.push((FeatureVector::new(v[0], v[1], v[2]), g));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Ablation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Toggle {
    None,
    SymOnly,
    InvOnly,
    Both,
}

impl Toggle {
    pub const ALL: [Toggle; 4] = [Toggle::None, Toggle::SymOnly, Toggle::InvOnly, Toggle::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            Toggle::None => "none",
            Toggle::SymOnly => "sym_only",
            Toggle::InvOnly => "inv_only",
            Toggle::Both => "both",
        }
    }

    pub fn filter(self) -> ConstraintFilter {
        ConstraintFilter {
            symmetry: matches!(self, Toggle::SymOnly | Toggle::Both),
            invariance: matches!(self, Toggle::InvOnly | Toggle::Both),
        }
    }
}

impl std::fmt::Display for Toggle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Toggle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Toggle::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown toggle {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub class: SignClass,
    pub seed: u64,
    pub toggle: Toggle,
    pub metrics: SequenceMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub records: Vec<AblationRecord>,
}

impl AblationTable {
    /// Metrics for one toggle averaged over all sequences.
    pub fn summary(&self, toggle: Toggle) -> Option<SequenceMetrics> {
        let rows: Vec<SequenceMetrics> = self
            .records
            .iter()
            .filter(|r| r.toggle == toggle)
            .map(|r| r.metrics)
            .collect();
        (!rows.is_empty()).then(|| SequenceMetrics::mean(&rows))
    }

    pub fn toggles(&self) -> Vec<Toggle> {
        Toggle::ALL
            .into_iter()
            .filter(|t| self.records.iter().any(|r| r.toggle == *t))
            .collect()
    }

    /// One row per toggle: hand errors in mm and rad.
    pub fn to_delimited(&self, sep: char) -> String {
        let cols = ["toggle", "sequences", "left_mm", "right_mm", "both_mm", "left_rad", "right_rad", "both_rad"];
        let mut out = cols.join(&sep.to_string());
        out.push('\n');
        for t in self.toggles() {
            let m = self.summary(t).expect("toggle has rows");
            let n = self.records.iter().filter(|r| r.toggle == t).count();
            let _ = writeln!(
                out,
                "{t}{sep}{n}{sep}{:.3}{sep}{:.3}{sep}{:.3}{sep}{:.5}{sep}{:.5}{sep}{:.5}",
                m.left_mm, m.right_mm, m.both_mm, m.left_rad, m.right_rad, m.both_rad
            );
        }
        out
    }
}

/// Fits every synthetic sequence under every toggle and scores the result.
pub fn ablation_run(
    skel: &Skeleton,
    specs: &[SynthSpec],
    toggles: &[Toggle],
    cfg: &SequenceConfig,
    exec: Execution,
) -> Result<AblationTable> {
    let sequences = par::map(exec, specs, |s| synth_sequence(skel, s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Toggle)> = (0..specs.len())
        .flat_map(|i| toggles.iter().map(move |&t| (i, t)))
        .collect();
    let records = par::map(exec, &jobs, |&(i, toggle)| {
        let synth = &sequences[i];
        let cfg = SequenceConfig {
            filter: toggle.filter(),
            ..*cfg
        };
        let inputs = SequenceInputs {
            class: ClassChoice::Class(synth.spec.class),
            ..Default::default()
        };
        let fit = fit_sequence(skel, &synth.keypoints, &cfg, &inputs, Execution::Sequential)?;
        let pred: Vec<(usize, FitState)> = fit.frames.iter().copied().zip(fit.states).collect();
        let metrics = evaluate_sequence(skel, &pred, &synth.ground_truth_indexed())?;
        Ok(AblationRecord {
            class: synth.spec.class,
            seed: synth.spec.seed,
            toggle,
            metrics,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { records })
}

// ---------------------------------------------------------------------------
// Gradient checks

fn random_state(rng: &mut ChaCha8Rng, skel: &Skeleton, camera: Camera) -> FitState {
    let mut rot = |scale: f64| {
        JointRotation::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    };
    let body = BodyPose {
        joints: (0..skel.body_joints.len()).map(|_| rot(0.5)).collect(),
        root_translation: Vector3::zeros(),
    };
    let mut hand = || HandPose {
        joints: (0..HAND_JOINTS).map(|_| rot(0.7)).collect(),
        basis_coeffs: None,
    };
    let (left, right) = (hand(), hand());
    let mut s = FitState { body, left, right, camera };
    s.body.root_translation = Vector3::new(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    );
    s
}

/// Relative gradient errors of the assembled frame objective at random
/// states, one per trial.
///
/// Every trial draws a fresh state, an observed frame rendered from a second
/// random state (so residuals are non-zero), a previous state and reference
/// poses for both hands, and runs with class 1b constraints and undetected
/// feet so that every term is live. With `observed = false` the frame carries
/// no detections, which leaves only the quadratic terms when `lambda_alpha`
/// is zero.
pub fn gradient_trials(
    skel: &Skeleton,
    cfg: &ObjectiveConfig,
    trials: usize,
    seed: u64,
    eps: f64,
    observed: bool,
    exec: Execution,
) -> Result<Vec<f64>> {
    let camera = Camera::new(5000.0, (1000.0, 1000.0), 6.0)?;
    let run = |trial: &usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (*trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let x_state = random_state(&mut rng, skel, camera);
        let seen = random_state(&mut rng, skel, camera);
        let previous = random_state(&mut rng, skel, camera);
        let refs = random_state(&mut rng, skel, camera);
        let frame = if observed {
            render_keypoints(skel, &seen, 0)?
        } else {
            KeypointFrame::undetected(0)
        };
        let terms = FrameTerms {
            constraints: constraints_for_class(SignClass::C1b),
            reference: [Some(refs.left), Some(refs.right)],
            previous: Some(previous),
            feet_detected: false,
        };
        let obj = FrameObjective::new(skel, camera, cfg, None, &frame, &terms)?;
        let x = x_state.to_vector(&obj.layout(), None);
        check_gradient(&obj, &x, eps, Execution::Sequential)
    };
    let ids: Vec<usize> = (0..trials).collect();
    par::map(exec, &ids, run).into_iter().collect()
}
