use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// A joint rotation stored as an axis-angle vector (unit axis scaled by the
/// angle in radians).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointRotation(pub Vector3<f64>);

impl JointRotation {
    pub const IDENTITY: JointRotation = JointRotation(Vector3::new(0.0, 0.0, 0.0));

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        JointRotation(Vector3::new(x, y, z))
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        JointRotation(axis.normalize() * angle)
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Rotation3::new(self.0).into_inner()
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_scaled_axis(self.0)
    }

    /// Axis-angle of a unit quaternion with the angle in `[0, π]`.
    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        let q = q.quaternion();
        let (w, v) = if q.w < 0.0 { (-q.w, -q.imag()) } else { (q.w, q.imag()) };
        let s = v.norm();
        if s < 1e-300 {
            return JointRotation::IDENTITY;
        }
        let angle = 2.0 * s.atan2(w);
        JointRotation(v * (angle / s))
    }

    /// Equivalent rotation with angle in `[0, π]`.
    pub fn canonical(&self) -> Self {
        let angle = self.angle();
        if angle <= PI {
            return *self;
        }
        let axis = self.0 / angle;
        let mut a = angle % (2.0 * PI);
        let mut axis = axis;
        if a > PI {
            a = 2.0 * PI - a;
            axis = -axis;
        }
        JointRotation(axis * a)
    }

    /// Angle of the relative rotation between `self` and `other`.
    pub fn geodesic_distance(&self, other: &JointRotation) -> f64 {
        self.quaternion().angle_to(&other.quaternion())
    }
}

impl Index<usize> for JointRotation {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointRotation {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Left Jacobian of SO(3): `∂R/∂ω_k · Rᵀ = [J(ω) e_k]×`.
pub fn left_jacobian(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let k = skew(omega);
    let k2 = k * k;
    let (a, b) = if theta2 < 1e-8 {
        // series expansions of (1 - cos θ)/θ² and (θ - sin θ)/θ³
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let theta = theta2.sqrt();
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    Matrix3::identity() + k * a + k2 * b
}

/// Shortest-arc spherical linear interpolation between unit quaternions.
pub fn slerp_quaternion(
    a: &UnitQuaternion<f64>,
    b: &UnitQuaternion<f64>,
    t: f64,
) -> UnitQuaternion<f64> {
    let qa = a.quaternion();
    let mut qb = *b.quaternion();
    let mut dot = qa.dot(&qb);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    let dot = dot.min(1.0);
    let theta = dot.acos();
    if theta < 1e-12 {
        let q = qa * (1.0 - t) + qb * t;
        return UnitQuaternion::from_quaternion(q);
    }
    let s = theta.sin();
    let wa = ((1.0 - t) * theta).sin() / s;
    let wb = (t * theta).sin() / s;
    let q: Quaternion<f64> = qa * wa + qb * wb;
    UnitQuaternion::from_quaternion(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_jacobian_matches_finite_differences() {
        for omega in [
            Vector3::new(0.3, -0.2, 0.9),
            Vector3::new(1e-6, 2e-6, -1e-6),
            Vector3::new(-2.0, 0.5, 1.0),
        ] {
            let r = JointRotation(omega).matrix();
            let j = left_jacobian(&omega);
            let h = 1e-6;
            for k in 0..3 {
                let mut p = omega;
                let mut m = omega;
                p[k] += h;
                m[k] -= h;
                let d = (JointRotation(p).matrix() - JointRotation(m).matrix()) / (2.0 * h);
                let expected = skew(&(j * Vector3::ith(k, 1.0))) * r;
                assert!((d - expected).norm() < 1e-8, "{}", (d - expected).norm());
            }
        }
    }

    #[test]
    fn canonicalization() {
        let r = JointRotation::new(0.0, 0.0, 1.5 * PI);
        let c = r.canonical();
        assert!((c.0 - Vector3::new(0.0, 0.0, -0.5 * PI)).norm() < 1e-12);
        assert!(r.geodesic_distance(&c) < 1e-9);
        let small = JointRotation::new(0.1, 0.2, 0.3);
        assert_eq!(small.canonical(), small);
        let q = JointRotation::new(0.4, -1.0, 2.0).quaternion();
        let back = JointRotation::from_quaternion(&q);
        assert!((back.0 - Vector3::new(0.4, -1.0, 2.0)).norm() < 1e-12);
    }
}
