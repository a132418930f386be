//! Hand poses and the rotation-space operations used by the linguistic
//! priors: reflection, SLERP, chordal averaging and cosine distance.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix4, Quaternion, SymmetricEigen, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::rotation::{slerp_quaternion, JointRotation};
use crate::error::{Error, Result};

/// Articulated joints per hand: three per finger, thumb to pinky, proximal first.
pub const HAND_JOINTS: usize = 15;
pub const HAND_DOF: usize = 3 * HAND_JOINTS;
pub const FINGERS: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    pub joints: Vec<JointRotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_coeffs: Option<Vec<f64>>,
}

impl Default for HandPose {
    fn default() -> Self {
        HandPose::zeros(HAND_JOINTS)
    }
}

impl HandPose {
    pub fn zeros(n: usize) -> Self {
        HandPose {
            joints: vec![JointRotation::IDENTITY; n],
            basis_coeffs: None,
        }
    }

    pub fn from_flat(values: &[f64]) -> Self {
        assert!(values.len().is_multiple_of(3), "flat hand pose length must be a multiple of 3");
        HandPose {
            joints: values
                .chunks_exact(3)
                .map(|c| JointRotation::new(c[0], c[1], c[2]))
                .collect(),
            basis_coeffs: None,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.joints.iter().flat_map(|j| [j[0], j[1], j[2]]).collect()
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn canonical(&self) -> Self {
        HandPose {
            joints: self.joints.iter().map(JointRotation::canonical).collect(),
            basis_coeffs: None,
        }
    }

    /// Largest per-joint geodesic distance to `other`.
    pub fn max_angle_to(&self, other: &HandPose) -> f64 {
        self.joints
            .iter()
            .zip(&other.joints)
            .map(|(a, b)| a.geodesic_distance(b))
            .fold(0.0, f64::max)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::JointCount {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Linear hand basis

/// Linear hand-pose basis: `joints = basis · coeffs + mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandBasis {
    pub mean: Vec<f64>,
    /// K rows of 45 numbers each.
    pub rows: Vec<Vec<f64>>,
}

impl HandBasis {
    pub fn identity() -> Self {
        HandBasis {
            mean: vec![0.0; HAND_DOF],
            rows: (0..HAND_DOF)
                .map(|i| (0..HAND_DOF).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let basis: HandBasis = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))?;
        basis.validate()?;
        Ok(basis)
    }

    pub fn validate(&self) -> Result<()> {
        check_len("hand basis mean", HAND_DOF, self.mean.len())?;
        if self.rows.is_empty() {
            return Err(Error::Empty("hand basis rows"));
        }
        for row in &self.rows {
            check_len("hand basis row", HAND_DOF, row.len())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// The 45×K matrix whose columns are the basis rows.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(HAND_DOF, self.dim(), |i, k| self.rows[k][i])
    }

    pub fn pose(&self, coeffs: &[f64]) -> HandPose {
        assert_eq!(coeffs.len(), self.dim());
        let mut flat = self.mean.clone();
        for (c, row) in coeffs.iter().zip(&self.rows) {
            for (f, r) in flat.iter_mut().zip(row) {
                *f += c * r;
            }
        }
        HandPose {
            basis_coeffs: Some(coeffs.to_vec()),
            ..HandPose::from_flat(&flat)
        }
    }

    /// Least-squares coefficients for a pose.
    pub fn project(&self, pose: &HandPose) -> Vec<f64> {
        let b = self.matrix();
        let target = DVector::from_iterator(
            HAND_DOF,
            pose.to_flat().into_iter().zip(&self.mean).map(|(p, m)| p - m),
        );
        let svd = b.svd(true, true);
        svd.solve(&target, 1e-12)
            .map(|c| c.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; self.dim()])
    }

    /// Maximum deviation between stored joints and `basis · coeffs + mean`.
    pub fn consistency_error(&self, pose: &HandPose) -> Option<f64> {
        let coeffs = pose.basis_coeffs.as_ref()?;
        let rebuilt = self.pose(coeffs).to_flat();
        Some(
            rebuilt
                .iter()
                .zip(pose.to_flat())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

// ---------------------------------------------------------------------------
// Reflection

/// How a left-hand pose is expressed as a right-hand pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorConvention {
    /// Axis-angle components negated by the reflection.
    pub negate: [bool; 3],
    /// Optional joint reordering: output joint `i` takes input joint `joint_map[i]`.
    #[serde(default)]
    pub joint_map: Option<Vec<usize>>,
}

impl Default for MirrorConvention {
    fn default() -> Self {
        MirrorConvention {
            negate: [false, true, true],
            joint_map: None,
        }
    }
}

impl MirrorConvention {
    pub fn from_components(components: &[usize]) -> Self {
        let mut negate = [false; 3];
        for &c in components {
            negate[c] = true;
        }
        MirrorConvention {
            negate,
            joint_map: None,
        }
    }

    fn source(&self, i: usize) -> usize {
        self.joint_map.as_ref().map_or(i, |m| m[i])
    }

    fn sign(&self, k: usize) -> f64 {
        if self.negate[k] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn reflect(&self, pose: &HandPose) -> HandPose {
        let joints = (0..pose.len())
            .map(|i| {
                let mut j = pose.joints[self.source(i)];
                for k in 0..3 {
                    if self.negate[k] {
                        j[k] = -j[k];
                    }
                }
                j
            })
            .collect();
        HandPose {
            joints,
            basis_coeffs: None,
        }
    }

    /// Reflection applied to a flattened axis-angle vector.
    pub fn reflect_flat(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len() / 3;
        let mut out = vec![0.0; v.len()];
        for i in 0..n {
            let s = self.source(i);
            for k in 0..3 {
                out[3 * i + k] = self.sign(k) * v[3 * s + k];
            }
        }
        out
    }

    /// Transpose of the (linear) reflection map, for chaining gradients.
    pub fn reflect_flat_transpose(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len() / 3;
        let mut out = vec![0.0; v.len()];
        for i in 0..n {
            let s = self.source(i);
            for k in 0..3 {
                out[3 * s + k] += self.sign(k) * v[3 * i + k];
            }
        }
        out
    }
}

/// Mirrors a left-hand pose into the right-hand frame using the default
/// convention (negate axis-angle components 1 and 2).
pub fn reflect_hand_pose(pose: &HandPose) -> HandPose {
    MirrorConvention::default().reflect(pose)
}

// ---------------------------------------------------------------------------
// Interpolation, averaging, distance

/// Per-joint shortest-arc SLERP. `t = 0` and `t = 1` return the endpoints
/// unchanged.
pub fn slerp_pose(initial: &HandPose, r#final: &HandPose, t: f64) -> Result<HandPose> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Invalid(format!("interpolation parameter {t} outside [0, 1]")));
    }
    check_len("slerp final pose", initial.len(), r#final.len())?;
    if t == 0.0 {
        return Ok(initial.clone());
    }
    if t == 1.0 {
        return Ok(r#final.clone());
    }
    let joints = initial
        .joints
        .iter()
        .zip(&r#final.joints)
        .map(|(a, b)| {
            JointRotation::from_quaternion(&slerp_quaternion(&a.quaternion(), &b.quaternion(), t))
        })
        .collect();
    Ok(HandPose {
        joints,
        basis_coeffs: None,
    })
}

/// Chordal mean of unit quaternions: principal eigenvector of `Σ q qᵀ`.
pub fn chordal_mean_quaternion(quats: &[UnitQuaternion<f64>]) -> UnitQuaternion<f64> {
    let mut m = Matrix4::<f64>::zeros();
    for q in quats {
        let v = q.quaternion().coords;
        m += v * v.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let best = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(best).into_owned();
    UnitQuaternion::from_quaternion(Quaternion::from(v))
}

/// Per-joint chordal quaternion mean of a non-empty list of poses.
pub fn mean_pose(poses: &[HandPose]) -> Result<HandPose> {
    let first = poses.first().ok_or(Error::Empty("pose list for averaging"))?;
    for p in poses {
        check_len("averaged pose", first.len(), p.len())?;
    }
    let joints = (0..first.len())
        .map(|j| {
            let quats: Vec<_> = poses.iter().map(|p| p.joints[j].quaternion()).collect();
            JointRotation::from_quaternion(&chordal_mean_quaternion(&quats))
        })
        .collect();
    Ok(HandPose {
        joints,
        basis_coeffs: None,
    })
}

/// Cosine distance between flattened canonical axis-angle vectors, in `[0, 2]`.
pub fn cos_dist(a: &HandPose, b: &HandPose) -> f64 {
    let va = a.canonical().to_flat();
    let vb = b.canonical().to_flat();
    let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => {
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn single(j: JointRotation) -> HandPose {
        HandPose {
            joints: vec![j],
            basis_coeffs: None,
        }
    }

    #[test]
    fn slerp_endpoints_and_midpoint() {
        let a = single(JointRotation::IDENTITY);
        let b = single(JointRotation::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0));
        assert_eq!(slerp_pose(&a, &b, 0.0).unwrap(), a);
        assert_eq!(slerp_pose(&a, &b, 1.0).unwrap(), b);
        let mid = slerp_pose(&a, &b, 0.5).unwrap();
        assert!((mid.joints[0].0 - Vector3::new(std::f64::consts::FRAC_PI_4, 0.0, 0.0)).norm() < 1e-12);
        assert!(slerp_pose(&a, &b, 1.5).is_err());
        assert!(slerp_pose(&a, &b, -0.1).is_err());
    }

    #[test]
    fn slerp_with_antipodal_endpoint_is_constant() {
        let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
        let theta = 0.9;
        let a = single(JointRotation(axis * theta));
        // -q has axis-angle (2π - θ)(-n)
        let b = single(JointRotation(-axis * (2.0 * std::f64::consts::PI - theta)));
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let p = slerp_pose(&a, &b, t).unwrap();
            let dm = (p.joints[0].matrix() - a.joints[0].matrix()).norm();
            assert!(dm < 1e-9, "t={t}: {dm}");
        }
    }

    #[test]
    fn reflection_basics() {
        let z = HandPose::default();
        assert_eq!(reflect_hand_pose(&z), z);
        let p = HandPose::from_flat(&(0..45).map(|i| i as f64 * 0.01 - 0.2).collect::<Vec<_>>());
        assert_eq!(reflect_hand_pose(&reflect_hand_pose(&p)), p);
        let conv = MirrorConvention {
            joint_map: Some((0..15).rev().collect()),
            ..Default::default()
        };
        let flat = p.to_flat();
        let r = conv.reflect_flat(&flat);
        assert_eq!(conv.reflect(&p).to_flat(), r);
        // <Mv, w> == <v, Mᵀw>
        let w: Vec<f64> = (0..45).map(|i| (i as f64).sin()).collect();
        let lhs: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = flat.iter().zip(conv.reflect_flat_transpose(&w)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mean_of_identical_and_singleton() {
        let p = HandPose::from_flat(&(0..45).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
        let m = mean_pose(&[p.clone(), p.clone(), p.clone()]).unwrap();
        assert!(m.max_angle_to(&p) < 1e-9);
        assert!(mean_pose(&[]).is_err());
    }

    #[test]
    fn cos_dist_cases() {
        let p = HandPose::from_flat(&(0..45).map(|i| (i as f64 * 0.1).cos() * 0.5).collect::<Vec<_>>());
        let neg = HandPose::from_flat(&p.to_flat().iter().map(|x| -x).collect::<Vec<_>>());
        let dbl = HandPose::from_flat(&p.to_flat().iter().map(|x| 2.0 * x).collect::<Vec<_>>());
        assert!(cos_dist(&p, &p).abs() < 1e-12);
        assert!((cos_dist(&p, &neg) - 2.0).abs() < 1e-12);
        assert!(cos_dist(&p, &dbl).abs() < 1e-12);
        let z = HandPose::default();
        assert_eq!(cos_dist(&z, &z), 0.0);
        assert_eq!(cos_dist(&z, &p), 1.0);
        assert_eq!(cos_dist(&p, &z), 1.0);
    }

    #[test]
    fn basis_round_trip() {
        let basis = HandBasis::identity();
        let coeffs: Vec<f64> = (0..45).map(|i| i as f64 * 0.01).collect();
        let pose = basis.pose(&coeffs);
        assert!(basis.consistency_error(&pose).unwrap() < 1e-12);
        let back = basis.project(&pose);
        for (a, b) in back.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-9);
        }
        let mut bad = basis.clone();
        bad.mean.pop();
        assert!(bad.validate().is_err());
    }
}
