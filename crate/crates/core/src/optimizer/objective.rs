//! The per-frame fitting objective and its derivatives.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Matrix2x3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::KeypointFrame;
use crate::kinematics::{
    forward_kinematics_local, left_jacobian, BodyPose, Camera, HandBasis, HandPose, JointRotation, NodeRef,
    Positions, Skeleton, HAND_DOF,
};
use crate::linguistic::{ConstraintSpec, Hand, Invariance, LossWeights};

use super::solver::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    pub lambda_theta_b: f64,
    pub lambda_mh: f64,
    pub lambda_alpha: f64,
    pub lambda_t: f64,
    pub lambda_st: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda_theta_b: 0.5,
            lambda_mh: 0.1,
            lambda_alpha: 1.0,
            lambda_t: 10.0,
            lambda_st: 10.0,
            lambda_s: 50.0,
            lambda_i: 50.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda_s: self.lambda_s,
            lambda_i: self.lambda_i,
        }
    }

    fn all(&self) -> [(&'static str, f64); 7] {
        [
            ("lambda_theta_b", self.lambda_theta_b),
            ("lambda_mh", self.lambda_mh),
            ("lambda_alpha", self.lambda_alpha),
            ("lambda_t", self.lambda_t),
            ("lambda_st", self.lambda_st),
            ("lambda_s", self.lambda_s),
            ("lambda_i", self.lambda_i),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub weights: ObjectiveWeights,
    /// Geman-McClure scale in pixels.
    pub robustifier_sigma: f64,
    /// Keypoints below this confidence are ignored.
    pub keypoint_conf_floor: f64,
    pub dominant_hand: Hand,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            weights: ObjectiveWeights::default(),
            robustifier_sigma: 100.0,
            keypoint_conf_floor: 0.2,
            dominant_hand: Hand::Right,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in self.weights.all() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be a finite non-negative number, got {w}")));
            }
        }
        if !(self.robustifier_sigma > 0.0 && self.robustifier_sigma.is_finite()) {
            return Err(Error::Invalid("robustifier_sigma must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.keypoint_conf_floor) {
            return Err(Error::Invalid("keypoint_conf_floor must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Value of every term of the objective at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub reprojection: f64,
    pub body_prior: f64,
    pub hand_prior: f64,
    pub bend: f64,
    pub temporal: f64,
    pub standing: f64,
    pub symmetry: f64,
    pub invariance: f64,
}

impl TermBreakdown {
    pub fn total(&self) -> f64 {
        self.reprojection
            + self.body_prior
            + self.hand_prior
            + self.bend
            + self.temporal
            + self.standing
            + self.symmetry
            + self.invariance
    }
}

/// Geman-McClure penalty of a squared residual norm `z`.
pub fn geman_mcclure(z: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    s2 * z / (s2 + z)
}

/// Derivative of [`geman_mcclure`] with respect to `z`.
fn geman_mcclure_dz(z: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let d = s2 + z;
    s2 * s2 / (d * d)
}

/// Where each block lives in the parameter vector:
/// `[root translation | body joints | left hand | right hand]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub body_joints: usize,
    /// Parameters per hand: 45 joint components or K basis coefficients.
    pub hand_dim: usize,
}

impl Layout {
    pub fn new(skel: &Skeleton, basis: Option<&HandBasis>) -> Self {
        Layout {
            body_joints: skel.body_joints.len(),
            hand_dim: basis.map_or(HAND_DOF, HandBasis::dim),
        }
    }

    pub fn dim(&self) -> usize {
        3 + 3 * self.body_joints + 2 * self.hand_dim
    }

    pub fn translation(&self) -> Range<usize> {
        0..3
    }

    pub fn body(&self) -> Range<usize> {
        3..3 + 3 * self.body_joints
    }

    pub fn hand(&self, hand: Hand) -> Range<usize> {
        let start = 3 + 3 * self.body_joints
            + match hand {
                Hand::Left => 0,
                Hand::Right => self.hand_dim,
            };
        start..start + self.hand_dim
    }

    /// The same layout with every hand expressed in joint components.
    fn joint_space(&self) -> Layout {
        Layout {
            hand_dim: HAND_DOF,
            ..*self
        }
    }
}

/// A complete fitted configuration for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub body: BodyPose,
    pub left: HandPose,
    pub right: HandPose,
    pub camera: Camera,
}

impl FitState {
    pub fn rest(skel: &Skeleton, camera: Camera) -> Self {
        FitState {
            body: BodyPose::rest(skel),
            left: HandPose::default(),
            right: HandPose::default(),
            camera,
        }
    }

    pub fn hand(&self, hand: Hand) -> &HandPose {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }

    pub fn positions(&self, skel: &Skeleton) -> Result<Positions> {
        crate::kinematics::forward_kinematics(skel, &self.body, &self.left, &self.right)
    }

    /// Local rotations of every joint in skeleton order.
    pub fn local_rotations(&self, skel: &Skeleton) -> Result<Vec<Vector3<f64>>> {
        skel.local_rotations(&self.body, &self.left, &self.right)
    }

    pub fn to_vector(&self, layout: &Layout, basis: Option<&HandBasis>) -> DVector<f64> {
        let mut x = DVector::zeros(layout.dim());
        x.rows_mut(0, 3).copy_from(&self.body.root_translation);
        for (slot, r) in self.body.joints.iter().enumerate() {
            x.fixed_rows_mut::<3>(3 + 3 * slot).copy_from(&r.0);
        }
        for hand in Hand::BOTH {
            let pose = self.hand(hand);
            let params = match basis {
                None => pose.to_flat(),
                Some(b) => pose.basis_coeffs.clone().unwrap_or_else(|| b.project(pose)),
            };
            let range = layout.hand(hand);
            x.rows_mut(range.start, range.len()).copy_from_slice(&params);
        }
        x
    }

    pub fn from_vector(x: &DVector<f64>, layout: &Layout, basis: Option<&HandBasis>, camera: Camera) -> Self {
        let body = BodyPose {
            joints: (0..layout.body_joints)
                .map(|s| JointRotation(x.fixed_rows::<3>(3 + 3 * s).into_owned()))
                .collect(),
            root_translation: x.fixed_rows::<3>(0).into_owned(),
        };
        let hand = |h: Hand| {
            let r = layout.hand(h);
            let params: Vec<f64> = x.rows(r.start, r.len()).iter().copied().collect();
            match basis {
                None => HandPose::from_flat(&params),
                Some(b) => b.pose(&params),
            }
        };
        FitState {
            body,
            left: hand(Hand::Left),
            right: hand(Hand::Right),
            camera,
        }
    }
}

/// A keypoint the objective tries to explain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub node: NodeRef,
    pub u: f64,
    pub v: f64,
    pub confidence: f64,
}

/// Keypoints of a frame that map onto the skeleton and pass the confidence floor.
pub fn observations(skel: &Skeleton, frame: &KeypointFrame, conf_floor: f64) -> Vec<Observation> {
    skel.keypoint_map
        .iter()
        .filter_map(|b| {
            let kp = frame.get(b.array, b.index);
            (kp.is_detected() && kp.confidence >= conf_floor).then_some(Observation {
                node: b.node,
                u: kp.x,
                v: kp.y,
                confidence: kp.confidence,
            })
        })
        .collect()
}

/// Which terms are active for one frame, besides reprojection and the priors.
#[derive(Debug, Clone, Default)]
pub struct FrameTerms {
    pub constraints: ConstraintSpec,
    /// θ_ref,t per hand, required where invariance is enabled.
    pub reference: [Option<HandPose>; 2],
    /// Previous frame's solution for temporal smoothness.
    pub previous: Option<FitState>,
    /// Whether any foot keypoint was seen; disables the standing term.
    pub feet_detected: bool,
}

impl FrameTerms {
    pub fn reference(&self, hand: Hand) -> Option<&HandPose> {
        self.reference[hand_slot(hand)].as_ref()
    }
}

fn hand_slot(hand: Hand) -> usize {
    match hand {
        Hand::Left => 0,
        Hand::Right => 1,
    }
}

/// Result of evaluating the objective.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub terms: TermBreakdown,
    pub gradient: Option<DVector<f64>>,
    /// Gauss-Newton curvature: exact for the quadratic terms.
    pub hessian: Option<DMatrix<f64>>,
}

/// The assembled objective for a single frame.
///
/// Internally everything is computed over joint rotations; with a hand basis
/// the hand blocks are mapped to coefficients at the end.
pub struct FrameObjective<'a> {
    skel: &'a Skeleton,
    camera: Camera,
    cfg: ObjectiveConfig,
    layout: Layout,
    basis: Option<&'a HandBasis>,
    basis_matrix: Option<DMatrix<f64>>,
    mirror: DMatrix<f64>,
    obs: Vec<Observation>,
    constraints: ConstraintSpec,
    reference: [Option<Vec<f64>>; 2],
    previous: Option<DVector<f64>>,
    standing_active: bool,
}

impl<'a> FrameObjective<'a> {
    pub fn new(
        skel: &'a Skeleton,
        camera: Camera,
        cfg: &ObjectiveConfig,
        basis: Option<&'a HandBasis>,
        frame: &KeypointFrame,
        terms: &FrameTerms,
    ) -> Result<Self> {
        cfg.validate()?;
        camera.validate()?;
        let layout = Layout::new(skel, basis);
        let mut reference = [None, None];
        for hand in Hand::BOTH {
            if terms.constraints.invariance(hand, cfg.dominant_hand) != Invariance::Off {
                let pose = terms.reference(hand).ok_or(Error::MissingReference(hand))?;
                if pose.len() * 3 != HAND_DOF {
                    return Err(Error::JointCount {
                        what: "reference pose",
                        expected: HAND_DOF / 3,
                        found: pose.len(),
                    });
                }
                reference[hand_slot(hand)] = Some(pose.to_flat());
            }
        }
        let zl = layout.joint_space();
        let previous = terms.previous.as_ref().map(|p| {
            let z = p.to_vector(&zl, None);
            z.rows(3, zl.dim() - 3).into_owned()
        });
        let mirror = DMatrix::from_fn(HAND_DOF, HAND_DOF, |i, j| {
            let mut e = vec![0.0; HAND_DOF];
            e[j] = 1.0;
            skel.mirror.reflect_flat(&e)[i]
        });
        Ok(FrameObjective {
            skel,
            camera,
            cfg: *cfg,
            layout,
            basis,
            basis_matrix: basis.map(HandBasis::matrix),
            mirror,
            obs: observations(skel, frame, cfg.keypoint_conf_floor),
            constraints: terms.constraints,
            reference,
            previous,
            standing_active: !terms.feet_detected,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn camera(&self) -> Camera {
        self.camera
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    /// Maps parameters to joint space: hands become 45 joint components.
    fn joint_space(&self, x: &DVector<f64>) -> DVector<f64> {
        let Some(b) = &self.basis_matrix else {
            return x.clone();
        };
        let zl = self.layout.joint_space();
        let mut z = DVector::zeros(zl.dim());
        let head = 3 + 3 * self.layout.body_joints;
        z.rows_mut(0, head).copy_from(&x.rows(0, head));
        let mean = DVector::from_column_slice(&self.basis.expect("matrix implies basis").mean);
        for hand in Hand::BOTH {
            let r = self.layout.hand(hand);
            let theta = b * x.rows(r.start, r.len()) + &mean;
            let zr = zl.hand(hand);
            z.rows_mut(zr.start, zr.len()).copy_from(&theta);
        }
        z
    }

    /// Local rotations for every joint from a joint-space vector.
    fn local_rotations(&self, z: &DVector<f64>) -> Vec<Vector3<f64>> {
        let zl = self.layout.joint_space();
        let mut local = vec![Vector3::zeros(); self.skel.joint_count()];
        for (slot, &j) in self.skel.body_joints.iter().enumerate() {
            local[j] = z.fixed_rows::<3>(3 + 3 * slot).into_owned();
        }
        for hand in Hand::BOTH {
            let start = zl.hand(hand).start;
            for (k, &j) in self.skel.hand_joints(hand).iter().enumerate() {
                local[j] = z.fixed_rows::<3>(start + 3 * k).into_owned();
            }
        }
        local
    }

    /// Offset of a joint's rotation inside the joint-space vector.
    fn joint_column(&self, joint: usize) -> usize {
        if let Some(slot) = self.skel.body_slot(joint) {
            return 3 + 3 * slot;
        }
        let zl = self.layout.joint_space();
        for hand in Hand::BOTH {
            if let Some(k) = self.skel.hand_joints(hand).iter().position(|&j| j == joint) {
                return zl.hand(hand).start + 3 * k;
            }
        }
        unreachable!("every joint is a body or hand joint")
    }

    pub fn evaluate(&self, x: &DVector<f64>, order: u8) -> Evaluation {
        assert_eq!(x.len(), self.layout.dim(), "parameter vector has the wrong length");
        let w = &self.cfg.weights;
        let z = self.joint_space(x);
        let zl = self.layout.joint_space();
        let n = zl.dim();
        let want_grad = order >= 1;
        let want_hess = order >= 2;
        let mut g = DVector::zeros(if want_grad { n } else { 0 });
        let mut h = DMatrix::zeros(if want_hess { n } else { 0 }, if want_hess { n } else { 0 });
        let mut terms = TermBreakdown::default();

        // reprojection
        let local = self.local_rotations(&z);
        let translation = z.fixed_rows::<3>(0).into_owned();
        let pos = forward_kinematics_local(self.skel, &local, &translation);
        let columns: Vec<nalgebra::Matrix3<f64>> = if want_grad {
            (0..self.skel.joint_count())
                .map(|j| {
                    let a = self.skel.parent[j].map_or(nalgebra::Matrix3::identity(), |p| pos.global_rotation[p]);
                    a * left_jacobian(&local[j])
                })
                .collect()
        } else {
            Vec::new()
        };
        let sigma = self.cfg.robustifier_sigma;
        let mut cols: Vec<usize> = Vec::with_capacity(40);
        let mut jac: Vec<nalgebra::Vector2<f64>> = Vec::with_capacity(40);
        for o in &self.obs {
            let p = pos.node(o.node);
            let pc = self.camera.to_camera(&p);
            if pc.z <= 0.0 {
                terms.reprojection = f64::INFINITY;
                continue;
            }
            let proj = self.camera.project_point(&pc).expect("depth checked");
            let r = nalgebra::Vector2::new(proj.x - o.u, proj.y - o.v);
            let zz = r.norm_squared();
            terms.reprojection += o.confidence * geman_mcclure(zz, sigma);
            if !want_grad {
                continue;
            }
            let weight = o.confidence * geman_mcclure_dz(zz, sigma);
            let pj: Matrix2x3<f64> = self.camera.projection_jacobian(&pc);
            cols.clear();
            jac.clear();
            for k in 0..3 {
                cols.push(k);
                jac.push(pj.column(k).into_owned());
            }
            // rotations of the joints above this node move it
            let mut joint = match o.node {
                NodeRef::Joint(j) => self.skel.parent[j],
                NodeRef::Site(s) => Some(self.skel.sites[s].parent),
            };
            while let Some(j) = joint {
                let lever = p - pos.joints[j];
                let c0 = self.joint_column(j);
                for k in 0..3 {
                    let a: Vector3<f64> = columns[j].column(k).into_owned();
                    cols.push(c0 + k);
                    jac.push(pj * a.cross(&lever));
                }
                joint = self.skel.parent[j];
            }
            for (i, ji) in cols.iter().zip(&jac) {
                g[*i] += 2.0 * weight * ji.dot(&r);
            }
            if want_hess {
                for (a, ja) in cols.iter().zip(&jac) {
                    for (b, jb) in cols.iter().zip(&jac) {
                        h[(*a, *b)] += 2.0 * weight * ja.dot(jb);
                    }
                }
            }
        }

        // body prior, root orientation excluded
        for slot in 1..self.layout.body_joints {
            for k in 0..3 {
                let i = 3 + 3 * slot + k;
                terms.body_prior += w.lambda_theta_b * z[i] * z[i];
                if want_grad {
                    g[i] += 2.0 * w.lambda_theta_b * z[i];
                }
                if want_hess {
                    h[(i, i)] += 2.0 * w.lambda_theta_b;
                }
            }
        }

        for bend in &self.skel.bend_joints {
            let i = self.joint_column(bend.joint) + bend.component;
            let e = (bend.sign * z[i]).exp();
            terms.bend += w.lambda_alpha * e;
            if want_grad {
                g[i] += w.lambda_alpha * bend.sign * e;
            }
            if want_hess {
                h[(i, i)] += w.lambda_alpha * e;
            }
        }

        if self.standing_active {
            for &j in &self.skel.standing_joints {
                let c0 = self.joint_column(j);
                for i in c0..c0 + 3 {
                    terms.standing += w.lambda_st * z[i] * z[i];
                    if want_grad {
                        g[i] += 2.0 * w.lambda_st * z[i];
                    }
                    if want_hess {
                        h[(i, i)] += 2.0 * w.lambda_st;
                    }
                }
            }
        }

        if let Some(prev) = &self.previous {
            for (k, p) in prev.iter().enumerate() {
                let i = 3 + k;
                let d = z[i] - p;
                terms.temporal += w.lambda_t * d * d;
                if want_grad {
                    g[i] += 2.0 * w.lambda_t * d;
                }
                if want_hess {
                    h[(i, i)] += 2.0 * w.lambda_t;
                }
            }
        }

        if self.constraints.symmetry {
            let rr = zl.hand(Hand::Right);
            let lr = zl.hand(Hand::Left);
            let right = z.rows(rr.start, HAND_DOF);
            let left = z.rows(lr.start, HAND_DOF);
            let d = right - &self.mirror * left;
            terms.symmetry = w.lambda_s * d.norm_squared();
            if want_grad {
                let gr = &d * (2.0 * w.lambda_s);
                let gl = -(self.mirror.transpose() * &gr);
                g.rows_mut(rr.start, HAND_DOF).add_assign(&gr);
                g.rows_mut(lr.start, HAND_DOF).add_assign(&gl);
            }
            if want_hess {
                let s = 2.0 * w.lambda_s;
                let m = &self.mirror;
                for i in 0..HAND_DOF {
                    h[(rr.start + i, rr.start + i)] += s;
                }
                let mtm = m.transpose() * m * s;
                let mut block = h.view_mut((lr.start, lr.start), (HAND_DOF, HAND_DOF));
                block += mtm;
                let mut block = h.view_mut((rr.start, lr.start), (HAND_DOF, HAND_DOF));
                block -= m * s;
                let mut block = h.view_mut((lr.start, rr.start), (HAND_DOF, HAND_DOF));
                block -= m.transpose() * s;
            }
        }

        for hand in Hand::BOTH {
            let Some(reference) = &self.reference[hand_slot(hand)] else {
                continue;
            };
            let start = zl.hand(hand).start;
            for (k, r) in reference.iter().enumerate() {
                let i = start + k;
                let d = z[i] - r;
                terms.invariance += w.lambda_i * d * d;
                if want_grad {
                    g[i] += 2.0 * w.lambda_i * d;
                }
                if want_hess {
                    h[(i, i)] += 2.0 * w.lambda_i;
                }
            }
        }

        let (mut gx, mut hx) = self.to_parameter_space(g, h, want_grad, want_hess);

        // hand prior acts on the parameters themselves
        for hand in Hand::BOTH {
            for i in self.layout.hand(hand) {
                terms.hand_prior += w.lambda_mh * x[i] * x[i];
                if want_grad {
                    gx[i] += 2.0 * w.lambda_mh * x[i];
                }
                if want_hess {
                    hx[(i, i)] += 2.0 * w.lambda_mh;
                }
            }
        }

        Evaluation {
            value: terms.total(),
            terms,
            gradient: want_grad.then_some(gx),
            hessian: want_hess.then_some(hx),
        }
    }

    fn to_parameter_space(
        &self,
        g: DVector<f64>,
        h: DMatrix<f64>,
        want_grad: bool,
        want_hess: bool,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let Some(b) = &self.basis_matrix else {
            return (g, h);
        };
        // z = M x with M block-diagonal: identity on translation and body,
        // the basis matrix on each hand.
        let zl = self.layout.joint_space();
        let mut m = DMatrix::zeros(zl.dim(), self.layout.dim());
        let head = 3 + 3 * self.layout.body_joints;
        for i in 0..head {
            m[(i, i)] = 1.0;
        }
        for hand in Hand::BOTH {
            let zr = zl.hand(hand);
            let xr = self.layout.hand(hand);
            m.view_mut((zr.start, xr.start), (HAND_DOF, xr.len())).copy_from(b);
        }
        let gx = if want_grad { m.transpose() * g } else { DVector::zeros(0) };
        let hx = if want_hess {
            m.transpose() * h * &m
        } else {
            DMatrix::zeros(0, 0)
        };
        (gx, hx)
    }

    pub fn state(&self, x: &DVector<f64>) -> FitState {
        FitState::from_vector(x, &self.layout, self.basis, self.camera)
    }
}

impl Objective for FrameObjective<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.evaluate(x, 0).value
    }

    fn gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let e = self.evaluate(x, 1);
        (e.value, e.gradient.expect("order 1"))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.evaluate(x, 2).hessian
    }

    fn derivatives(&self, x: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let e = self.evaluate(x, 2);
        (e.value, e.gradient.expect("order 2"), e.hessian)
    }
}

use std::ops::AddAssign;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::{Keypoint2D, KeypointArray};
    use crate::optimizer::check_gradient;
    use crate::par::Execution;

    fn camera() -> Camera {
        Camera::new(5000.0, (1000.0, 1000.0), 6.0).unwrap()
    }

    fn zero_weights() -> ObjectiveConfig {
        ObjectiveConfig {
            weights: ObjectiveWeights {
                lambda_theta_b: 0.0,
                lambda_mh: 0.0,
                lambda_alpha: 0.0,
                lambda_t: 0.0,
                lambda_st: 0.0,
                lambda_s: 0.0,
                lambda_i: 0.0,
            },
            ..Default::default()
        }
    }

    #[test]
    fn empty_frame_with_zero_weights_is_zero() {
        let skel = Skeleton::default_upper_body();
        let obj = FrameObjective::new(
            &skel,
            camera(),
            &zero_weights(),
            None,
            &KeypointFrame::undetected(0),
            &FrameTerms::default(),
        )
        .unwrap();
        let x = DVector::from_fn(obj.dim(), |i, _| (i as f64 * 0.37).sin());
        let e = obj.evaluate(&x, 2);
        assert_eq!(e.value, 0.0);
        assert!(e.gradient.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn temporal_and_standing_examples() {
        let skel = Skeleton::default_upper_body();
        let cam = camera();
        let mut cfg = zero_weights();
        cfg.weights.lambda_t = 1.0;
        let prev = FitState::rest(&skel, cam);
        let terms = FrameTerms {
            previous: Some(prev.clone()),
            feet_detected: true,
            ..Default::default()
        };
        let obj = FrameObjective::new(&skel, cam, &cfg, None, &KeypointFrame::undetected(0), &terms).unwrap();
        let mut x = prev.to_vector(&obj.layout(), None);
        x[3 + 3 * 4 + 1] += 0.1;
        assert!((obj.value(&x) - 0.01).abs() < 1e-15);

        let mut cfg = zero_weights();
        cfg.weights.lambda_st = 1.0;
        let obj = FrameObjective::new(&skel, cam, &cfg, None, &KeypointFrame::undetected(0), &FrameTerms::default())
            .unwrap();
        let mut x = DVector::zeros(obj.dim());
        let spine = skel.joint_index("spine").unwrap();
        x[3 + 3 * skel.body_slot(spine).unwrap()] = 0.3;
        assert!((obj.value(&x) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn missing_reference_is_reported() {
        let skel = Skeleton::default_upper_body();
        let terms = FrameTerms {
            constraints: crate::linguistic::constraints_for_class(crate::linguistic::SignClass::C0a),
            ..Default::default()
        };
        let err = FrameObjective::new(
            &skel,
            camera(),
            &ObjectiveConfig::default(),
            None,
            &KeypointFrame::undetected(0),
            &terms,
        )
        .err()
        .unwrap();
        assert!(matches!(err, Error::MissingReference(Hand::Right)));
    }

    #[test]
    fn reprojection_gradient_matches_differences() {
        let skel = Skeleton::default_upper_body();
        let mut frame = KeypointFrame::undetected(0);
        for b in &skel.keypoint_map {
            let idx = b.index;
            let v = Keypoint2D::new(900.0 + 7.0 * idx as f64, 1100.0 - 5.0 * idx as f64, 0.9);
            frame.array_mut(b.array)[idx] = v;
        }
        frame.array_mut(KeypointArray::Body)[4].confidence = 0.1;
        let obj = FrameObjective::new(
            &skel,
            camera(),
            &ObjectiveConfig::default(),
            None,
            &frame,
            &FrameTerms::default(),
        )
        .unwrap();
        let x = DVector::from_fn(obj.dim(), |i, _| 0.3 * ((i * 7 + 3) as f64).sin());
        let err = check_gradient(&obj, &x, 1e-6, Execution::Sequential).unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn basis_mode_gradient() {
        let skel = Skeleton::default_upper_body();
        let basis = HandBasis {
            mean: (0..HAND_DOF).map(|i| 0.01 * i as f64).collect(),
            rows: (0..6).map(|k| (0..HAND_DOF).map(|i| ((i * (k + 2)) as f64).cos() * 0.2).collect()).collect(),
        };
        let mut frame = KeypointFrame::undetected(0);
        for b in &skel.keypoint_map {
            frame.array_mut(b.array)[b.index] = Keypoint2D::new(1000.0 + b.index as f64, 1000.0, 1.0);
        }
        let terms = FrameTerms {
            constraints: ConstraintSpec {
                symmetry: true,
                ..ConstraintSpec::NONE
            },
            previous: Some(FitState::rest(&skel, camera())),
            ..Default::default()
        };
        let obj = FrameObjective::new(&skel, camera(), &ObjectiveConfig::default(), Some(&basis), &frame, &terms)
            .unwrap();
        assert_eq!(obj.dim(), 3 + 33 + 12);
        let x = DVector::from_fn(obj.dim(), |i, _| 0.2 * ((i * 3 + 1) as f64).cos());
        assert!(check_gradient(&obj, &x, 1e-6, Execution::Sequential).unwrap() < 1e-5);
        let s = obj.state(&x);
        assert!(basis.consistency_error(&s.left).unwrap() < 1e-15);
    }
}
