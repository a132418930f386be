use nalgebra::{Matrix2x3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole camera looking down +z at the subject.
///
/// Model points live in a root-centred frame; [`Camera::to_camera`] pushes
/// them `root_depth` metres along the optical axis before projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub focal: f64,
    pub principal_point: (f64, f64),
    pub root_depth: f64,
}

impl Camera {
    pub fn new(focal: f64, principal_point: (f64, f64), root_depth: f64) -> Result<Self> {
        let cam = Camera {
            focal,
            principal_point,
            root_depth,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return Err(Error::Invalid(format!("camera focal must be > 0, got {}", self.focal)));
        }
        if !(self.root_depth > 0.0 && self.root_depth.is_finite()) {
            return Err(Error::Invalid(format!(
                "camera root depth must be > 0, got {}",
                self.root_depth
            )));
        }
        Ok(())
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(p.x, p.y, p.z + self.root_depth)
    }

    /// Projects a point already expressed in the camera frame.
    pub fn project_point(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        if p.z.is_nan() || p.z <= 0.0 {
            return None;
        }
        Some(Vector2::new(
            self.focal * p.x / p.z + self.principal_point.0,
            self.focal * p.y / p.z + self.principal_point.1,
        ))
    }

    /// Derivative of [`Camera::project_point`] with respect to the point.
    pub fn projection_jacobian(&self, p: &Vector3<f64>) -> Matrix2x3<f64> {
        let iz = 1.0 / p.z;
        let f = self.focal;
        Matrix2x3::new(
            f * iz,
            0.0,
            -f * p.x * iz * iz,
            0.0,
            f * iz,
            -f * p.y * iz * iz,
        )
    }
}

/// Projects camera-frame points; fails on the first point at or behind the
/// camera.
pub fn project(cam: &Camera, points: &[Vector3<f64>]) -> Result<Vec<Vector2<f64>>> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            cam.project_point(p)
                .ok_or(Error::NonPositiveDepth { index, z: p.z })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinhole_examples() {
        let cam = Camera::new(1000.0, (0.0, 0.0), 1.0).unwrap();
        let uv = project(&cam, &[Vector3::new(0.1, 0.0, 1.0)]).unwrap();
        assert!((uv[0] - Vector2::new(100.0, 0.0)).norm() < 1e-12);

        let cam = Camera::new(800.0, (320.0, 240.0), 3.0).unwrap();
        let uv = project(&cam, &[Vector3::new(0.0, 0.0, 2.5)]).unwrap();
        assert_eq!(uv[0], Vector2::new(320.0, 240.0));

        let p = Vector3::new(0.3, -0.2, 4.0);
        let a = cam.project_point(&p).unwrap() - Vector2::new(320.0, 240.0);
        let cam2 = Camera { focal: 1600.0, ..cam };
        let b = cam2.project_point(&p).unwrap() - Vector2::new(320.0, 240.0);
        assert!((b - 2.0 * a).norm() < 1e-12);
    }

    #[test]
    fn depth_errors_name_the_point() {
        let cam = Camera::new(1000.0, (0.0, 0.0), 1.0).unwrap();
        let err = project(&cam, &[Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, -0.5)]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDepth { index: 1, .. }));
        assert!(Camera::new(0.0, (0.0, 0.0), 1.0).is_err());
        assert!(Camera::new(1.0, (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cam = Camera::new(900.0, (10.0, 20.0), 2.0).unwrap();
        let p = Vector3::new(0.2, -0.4, 2.5);
        let j = cam.projection_jacobian(&p);
        let h = 1e-6;
        for k in 0..3 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let d = (cam.project_point(&a).unwrap() - cam.project_point(&b).unwrap()) / (2.0 * h);
            assert!((d - j.column(k)).norm() < 1e-5);
        }
    }
}
