//! Camera initialisation, single-frame fitting and the sequence pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::classifier::{extract_features, DecisionTree, FallbackThresholds, FeatureVector};
use crate::error::{Error, Result};
use crate::keypoints::{
    body, core_interval, median, normalize_sequence, trim_sequence, CoreInterval, KeypointArray, KeypointFrame,
    KeypointSequence, TrimConfig,
};
use crate::kinematics::{Camera, HandBasis, JointRotation, NodeRef, Skeleton};
use crate::linguistic::{
    constraints_for_class, estimate_rps, group_of_class, rps_pose_at, select_candidate_frames, transition_span,
    CandidateConfig, ConstraintSpec, Hand, ReferencePoseSequence, RpsFile, RpsMode, SignClass,
    SignGroup,
};
use crate::par::{self, Execution};

use super::objective::{FitState, FrameObjective, FrameTerms, Layout, ObjectiveConfig, TermBreakdown};
use super::solver::{solve_trust_region_ncg, Objective, SolveReport, SolverOptions};

/// Pinhole camera whose depth makes the rest torso match the observed one.
pub fn init_camera(seq: &KeypointSequence, skel: &Skeleton, focal: f64) -> Result<Camera> {
    let observed = seq.median_torso_length()?;
    let rest = skel
        .rest_torso_length()
        .ok_or_else(|| Error::Invalid("skeleton has no neck or mid-hip keypoint binding".into()))?;
    if observed.is_nan() || observed <= 0.0 {
        return Err(Error::TorsoUndetected);
    }
    let (w, h) = seq.image_size;
    Camera::new(focal, (f64::from(w) / 2.0, f64::from(h) / 2.0), focal * rest / observed)
}

/// Rest pose with the root translated so the mid-hip lands on its keypoint.
pub fn cold_start(skel: &Skeleton, camera: Camera, frame: &KeypointFrame) -> FitState {
    let mut state = FitState::rest(skel, camera);
    let hip = frame.body[body::MID_HIP];
    let binding = skel
        .keypoint_map
        .iter()
        .find(|b| b.array == KeypointArray::Body && b.index == body::MID_HIP);
    if let (true, Some(b)) = (hip.is_detected(), binding) {
        let rest = skel.rest_positions().node(b.node);
        let z = camera.root_depth + rest.z;
        let (cx, cy) = camera.principal_point;
        state.body.root_translation = Vector3::new(
            (hip.x - cx) * z / camera.focal - rest.x,
            (hip.y - cy) * z / camera.focal - rest.y,
            0.0,
        );
    }
    state
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Rotates every arm and hand joint about the camera axis so that its
/// longest observed child bone points at the child's keypoint. Joints
/// without two confident keypoints keep their current rotation.
pub fn lift_arms(skel: &Skeleton, frame: &KeypointFrame, conf_floor: f64, state: &mut FitState) {
    let mut observed: Vec<Option<(f64, f64, f64)>> = vec![None; skel.node_count()];
    for b in &skel.keypoint_map {
        let k = frame.get(b.array, b.index);
        if !k.is_detected() || k.confidence < conf_floor {
            continue;
        }
        let slot = &mut observed[skel.node_index(b.node)];
        if slot.is_none_or(|(_, _, c)| k.confidence > c) {
            *slot = Some((k.x, k.y, k.confidence));
        }
    }
    let shoulders: Vec<usize> = Hand::BOTH
        .iter()
        .filter_map(|&h| skel.parent[skel.wrist(h)].and_then(|e| skel.parent[e]))
        .collect();
    let mut local = state.local_rotations(skel).expect("state matches skeleton");
    let mut phi = vec![0.0; skel.joint_count()];
    for j in 0..skel.joint_count() {
        let parent_phi = skel.parent[j].map_or(0.0, |p| phi[p]);
        phi[j] = parent_phi + local[j].z;
        if !shoulders.iter().any(|&s| skel.is_ancestor(s, j)) {
            continue;
        }
        let Some((ju, jv, _)) = observed[j] else { continue };
        let children = (0..skel.joint_count())
            .filter(|&k| skel.parent[k] == Some(j))
            .map(|k| (k, skel.rest_offset[k]))
            .chain(
                skel.sites
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.parent == j)
                    .map(|(i, s)| (skel.joint_count() + i, s.offset)),
            )
            .filter(|(node, _)| observed[*node].is_some())
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()));
        let Some((child, offset)) = children else { continue };
        let (cu, cv, _) = observed[child].expect("filtered on observation");
        if (cu - ju).hypot(cv - jv) == 0.0 || offset.x.hypot(offset.y) == 0.0 {
            continue;
        }
        let angle = wrap_angle((cv - jv).atan2(cu - ju) - parent_phi - offset.y.atan2(offset.x));
        local[j] = Vector3::new(0.0, 0.0, angle);
        phi[j] = parent_phi + angle;
    }
    for (slot, &j) in skel.body_joints.iter().enumerate() {
        state.body.joints[slot] = JointRotation(local[j]);
    }
    for hand in Hand::BOTH {
        let pose = match hand {
            Hand::Left => &mut state.left,
            Hand::Right => &mut state.right,
        };
        for (k, &j) in skel.hand_joints(hand).iter().enumerate() {
            pose.joints[k] = JointRotation(local[j]);
        }
        pose.basis_coeffs = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub objective: ObjectiveConfig,
    pub solver: SolverOptions,
    /// On cold starts, solve first with a wider robustifier.
    pub anneal: bool,
    pub anneal_factor: f64,
    /// On cold starts, lift the arm and hand chains from the 2D keypoints
    /// before solving.
    pub lift: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            objective: ObjectiveConfig::default(),
            solver: SolverOptions::default(),
            anneal: true,
            anneal_factor: 10.0,
            lift: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFit {
    pub state: FitState,
    pub terms: TermBreakdown,
    pub report: SolveReport,
}

/// Hands without a usable finger keypoint whose invariance term is active.
/// Finger parameters move no body keypoint, so such a hand is held at its
/// reference pose: the minimiser of the invariance term alone.
fn pinned_hands(frame: &KeypointFrame, terms: &FrameTerms, floor: f64) -> Vec<Hand> {
    Hand::BOTH
        .into_iter()
        .filter(|&h| {
            terms.reference(h).is_some()
                && !frame.hand(h)[1..]
                    .iter()
                    .any(|k| k.is_detected() && k.confidence >= floor)
        })
        .collect()
}

/// Freezes parameter ranges by zeroing their gradient and Hessian entries.
struct Pinned<'a> {
    inner: &'a dyn Objective,
    ranges: Vec<Range<usize>>,
}

impl Pinned<'_> {
    fn mask_gradient(&self, g: &mut DVector<f64>) {
        for r in &self.ranges {
            g.rows_mut(r.start, r.len()).fill(0.0);
        }
    }

    fn mask_hessian(&self, h: &mut DMatrix<f64>) {
        for r in &self.ranges {
            h.rows_mut(r.start, r.len()).fill(0.0);
            h.columns_mut(r.start, r.len()).fill(0.0);
        }
    }
}

impl Objective for Pinned<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.inner.value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (f, mut g) = self.inner.gradient(x);
        self.mask_gradient(&mut g);
        (f, g)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner.hessian(x).map(|mut h| {
            self.mask_hessian(&mut h);
            h
        })
    }

    fn derivatives(&self, x: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let (f, mut g, h) = self.inner.derivatives(x);
        self.mask_gradient(&mut g);
        (f, g, h.map(|mut h| {
            self.mask_hessian(&mut h);
            h
        }))
    }
}

/// Fits one frame. Starts from `init`, else from the previous state, else
/// cold from the rest pose, which is lifted from the 2D keypoints and
/// annealed when configured.
pub fn fit_frame(
    skel: &Skeleton,
    camera: Camera,
    frame: &KeypointFrame,
    terms: &FrameTerms,
    cfg: &FitConfig,
    basis: Option<&HandBasis>,
    init: Option<&FitState>,
) -> Result<FrameFit> {
    let layout = Layout::new(skel, basis);
    let cold = init.is_none() && terms.previous.is_none();
    let mut start = match (init, &terms.previous) {
        (Some(s), _) | (None, Some(s)) => FitState {
            camera,
            ..s.clone()
        },
        (None, None) => cold_start(skel, camera, frame),
    };
    if cold && cfg.lift {
        lift_arms(skel, frame, cfg.objective.keypoint_conf_floor, &mut start);
    }
    let pinned = pinned_hands(frame, terms, cfg.objective.keypoint_conf_floor);
    for &h in &pinned {
        let reference = terms.reference(h).expect("pinned hands have a reference").clone();
        match h {
            Hand::Left => start.left = reference,
            Hand::Right => start.right = reference,
        }
    }
    let ranges: Vec<Range<usize>> = pinned.iter().map(|&h| layout.hand(h)).collect();
    let mut x: DVector<f64> = start.to_vector(&layout, basis);

    if cold && cfg.anneal && cfg.anneal_factor > 1.0 {
        let mut wide = cfg.objective;
        wide.robustifier_sigma *= cfg.anneal_factor;
        let obj = FrameObjective::new(skel, camera, &wide, basis, frame, terms)?;
        let pinned = Pinned { inner: &obj, ranges: ranges.clone() };
        x = solve_trust_region_ncg(&pinned, &x, &cfg.solver)?.0;
    }
    let obj = FrameObjective::new(skel, camera, &cfg.objective, basis, frame, terms)?;
    let (x, report) = solve_trust_region_ncg(&Pinned { inner: &obj, ranges }, &x, &cfg.solver)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solver produced a non-finite pose".into()));
    }
    let eval = obj.evaluate(&x, 0);
    Ok(FrameFit {
        state: obj.state(&x),
        terms: eval.terms,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassChoice {
    /// Predict the group from features.
    #[default]
    Auto,
    #[serde(untagged)]
    Class(SignClass),
}

/// Keeps or drops each family of linguistic constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintFilter {
    pub symmetry: bool,
    pub invariance: bool,
}

impl Default for ConstraintFilter {
    fn default() -> Self {
        ConstraintFilter {
            symmetry: true,
            invariance: true,
        }
    }
}

impl ConstraintFilter {
    pub fn apply(&self, spec: ConstraintSpec) -> ConstraintSpec {
        let spec = if self.symmetry { spec } else { spec.without_symmetry() };
        if self.invariance {
            spec
        } else {
            spec.without_invariance()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub fit: FitConfig,
    pub trim: TrimConfig,
    pub candidates: CandidateConfig,
    pub focal: f64,
    /// Rescale the arm bones to the median observed length.
    pub bone_scale: bool,
    pub filter: ConstraintFilter,
    pub fallback: FallbackThresholds,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            fit: FitConfig::default(),
            trim: TrimConfig::default(),
            candidates: CandidateConfig::default(),
            focal: 5000.0,
            bone_scale: true,
            filter: ConstraintFilter::default(),
            fallback: FallbackThresholds::default(),
        }
    }
}

/// Optional inputs that replace steps of the pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceInputs<'a> {
    pub class: ClassChoice,
    pub tree: Option<&'a DecisionTree>,
    /// Previously estimated reference poses; skips the preliminary fits.
    pub rps: Option<&'a RpsFile>,
    pub camera: Option<Camera>,
    pub basis: Option<&'a HandBasis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFit {
    /// Original frame index of every fitted frame.
    pub frames: Vec<usize>,
    pub states: Vec<FitState>,
    pub terms: Vec<TermBreakdown>,
    pub reports: Vec<SolveReport>,
    pub camera: Camera,
    /// Inclusive frame range kept after trimming.
    pub trim: (usize, usize),
    pub core: CoreInterval,
    pub class: Option<SignClass>,
    pub group: Option<SignGroup>,
    /// Constraints actually applied.
    pub constraints: ConstraintSpec,
    pub rps: RpsFile,
    pub features: Option<FeatureVector>,
    pub bone_scale: f64,
    pub warnings: Vec<String>,
}

/// The skeleton with both arms' upper and lower bones scaled by `s`.
pub fn scale_arms(skel: &Skeleton, s: f64) -> Skeleton {
    let mut out = skel.clone();
    for hand in Hand::BOTH {
        let wrist = skel.wrist(hand);
        if let Some(elbow) = skel.parent[wrist] {
            out.rest_offset[wrist] *= s;
            out.rest_offset[elbow] *= s;
        }
    }
    out
}

/// Ratio of observed arm-bone pixel lengths to their rest projections.
fn arm_scale_samples(skel: &Skeleton, camera: &Camera, frame: &KeypointFrame, floor: f64) -> Vec<f64> {
    let find = |joint: usize| {
        skel.keypoint_map
            .iter()
            .find(|b| b.array == KeypointArray::Body && b.node == NodeRef::Joint(joint))
            .map(|b| frame.body[b.index])
            .filter(|k| k.is_detected() && k.confidence >= floor)
    };
    let mut out = Vec::new();
    for hand in Hand::BOTH {
        let wrist = skel.wrist(hand);
        let Some(elbow) = skel.parent[wrist] else { continue };
        for child in [wrist, elbow] {
            let Some(parent) = skel.parent[child] else { continue };
            if let (Some(a), Some(b)) = (find(child), find(parent)) {
                let expected = skel.rest_offset[child].norm() * camera.focal / camera.root_depth;
                if expected > 0.0 {
                    out.push((a.x - b.x).hypot(a.y - b.y) / expected);
                }
            }
        }
    }
    out
}

fn candidate_sets(
    seq: &KeypointSequence,
    core: &CoreInterval,
    cfg: &CandidateConfig,
) -> BTreeMap<(Hand, RpsMode), Vec<Vec<usize>>> {
    let mut out = BTreeMap::new();
    for hand in Hand::BOTH {
        for mode in [RpsMode::Static, RpsMode::Transitioning] {
            if let Ok(sets) = select_candidate_frames(seq, core, mode, hand, cfg) {
                out.insert((hand, mode), sets);
            }
        }
    }
    out
}

fn find_reference(refs: &[ReferencePoseSequence], hand: Hand, mode: RpsMode) -> Option<&ReferencePoseSequence> {
    refs.iter().find(|r| r.hand == hand && r.mode() == mode)
}

/// Trims, initialises the camera, estimates reference poses, picks the
/// constraint set and fits every frame in order.
pub fn fit_sequence(
    skel: &Skeleton,
    seq: &KeypointSequence,
    cfg: &SequenceConfig,
    inputs: &SequenceInputs<'_>,
    exec: Execution,
) -> Result<SequenceFit> {
    cfg.fit.objective.validate()?;
    let mut warnings = Vec::new();
    let trim = trim_sequence(seq, &cfg.trim)?;
    let trimmed = seq.slice(trim.0, trim.1)?;
    let core = core_interval(trimmed.len())?;
    let camera = match inputs.camera {
        Some(c) => c,
        None => init_camera(&trimmed, skel, cfg.focal)?,
    };
    let floor = cfg.fit.objective.keypoint_conf_floor;
    let sets = candidate_sets(&trimmed, &core, &cfg.candidates);

    // reference poses from independent per-frame fits of the candidate frames
    let references: Vec<ReferencePoseSequence> = match inputs.rps {
        Some(file) => file.references.clone(),
        None => {
            let frames: Vec<usize> = sets
                .values()
                .flatten()
                .flatten()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let fits = par::map(exec, &frames, |&t| {
                let frame = trimmed.frame(t);
                let terms = FrameTerms {
                    feet_detected: frame.feet_detected(floor),
                    ..Default::default()
                };
                fit_frame(skel, camera, frame, &terms, &cfg.fit, inputs.basis, None)
            });
            let mut by_frame = BTreeMap::new();
            for (t, fit) in frames.iter().zip(fits) {
                by_frame.insert(*t, fit?.state);
            }
            let mut refs = Vec::new();
            for (&(hand, mode), lists) in &sets {
                let poses: Vec<Vec<_>> = lists
                    .iter()
                    .map(|l| l.iter().map(|t| by_frame[t].hand(hand).clone()).collect())
                    .collect();
                let span = match mode {
                    RpsMode::Static => None,
                    RpsMode::Transitioning => transition_span(lists),
                };
                refs.push(estimate_rps(hand, &poses, mode, span)?);
            }
            refs
        }
    };

    let bone_scale = if cfg.bone_scale {
        let samples: Vec<f64> = sets
            .values()
            .flatten()
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .flat_map(|&t| arm_scale_samples(skel, &camera, trimmed.frame(t), floor))
            .collect();
        median(&samples).map_or(1.0, |s| s.clamp(0.5, 2.0))
    } else {
        1.0
    };
    let fit_skel = if bone_scale == 1.0 {
        skel.clone()
    } else {
        scale_arms(skel, bone_scale)
    };

    let (class, group, features) = match inputs.class {
        ClassChoice::Class(c) => (Some(c), Some(group_of_class(c)), None),
        ClassChoice::Auto => {
            let predicted = (|| -> Result<(SignGroup, FeatureVector)> {
                let normalized = normalize_sequence(&trimmed)?;
                let l = find_reference(&references, Hand::Left, RpsMode::Transitioning)
                    .ok_or(Error::MissingReference(Hand::Left))?;
                let r = find_reference(&references, Hand::Right, RpsMode::Transitioning)
                    .ok_or(Error::MissingReference(Hand::Right))?;
                let f = extract_features(&normalized, l, r, &skel.mirror)?;
                let group = match inputs.tree {
                    Some(tree) => tree.predict(&f),
                    None => DecisionTree::fallback(&cfg.fallback).predict(&f),
                };
                Ok((group, f))
            })();
            match predicted {
                Ok((g, f)) => (None, Some(g), Some(f)),
                Err(e) => {
                    let msg = format!("classification failed ({e}); using class 0b");
                    log::warn!("{msg}");
                    warnings.push(msg);
                    (Some(SignClass::C0b), Some(SignGroup::G0b), None)
                }
            }
        }
    };
    let base = match (class, group) {
        (Some(c), _) => constraints_for_class(c),
        (None, Some(g)) => g.constraints(),
        (None, None) => ConstraintSpec::NONE,
    };
    let constraints = cfg.filter.apply(base);

    let dominant = cfg.fit.objective.dominant_hand;
    let mut active = [None, None];
    for (slot, hand) in Hand::BOTH.into_iter().enumerate() {
        if let Some(mode) = constraints.invariance(hand, dominant).mode() {
            let r = find_reference(&references, hand, mode).ok_or(Error::MissingReference(hand))?;
            active[slot] = Some(r.clone());
        }
    }

    let mut states: Vec<FitState> = Vec::with_capacity(trimmed.len());
    let mut terms_out = Vec::with_capacity(trimmed.len());
    let mut reports = Vec::with_capacity(trimmed.len());
    for t in 0..trimmed.len() {
        let frame = trimmed.frame(t);
        let reference = active
            .each_ref()
            .map(|r| r.as_ref().map(|r| rps_pose_at(r, t as f64, &core)));
        let terms = FrameTerms {
            constraints,
            reference,
            previous: states.last().cloned(),
            feet_detected: frame.feet_detected(floor),
        };
        let fit = fit_frame(&fit_skel, camera, frame, &terms, &cfg.fit, inputs.basis, None)?;
        states.push(fit.state);
        terms_out.push(fit.terms);
        reports.push(fit.report);
    }

    Ok(SequenceFit {
        frames: (trim.0..=trim.1).collect(),
        states,
        terms: terms_out,
        reports,
        camera,
        trim,
        core,
        class,
        group,
        constraints,
        rps: RpsFile {
            constraints,
            class,
            group,
            references,
        },
        features,
        bone_scale,
        warnings,
    })
}
