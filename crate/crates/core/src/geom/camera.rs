use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-9;

/// Pinhole camera with a world→camera rigid pose: `X_cam = R · X_world + t`.
///
/// Pixel `(u, v)` has its center at integer coordinates; +x right, +y down,
/// +z into the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraRecord", into = "CameraRecord")]
pub struct PinholeCamera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CameraRecord {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<CameraRecord> for PinholeCamera {
    type Error = Error;

    fn try_from(r: CameraRecord) -> Result<Self> {
        let rot = Matrix3::from_fn(|i, j| r.rotation[i][j]);
        PinholeCamera::new(r.fx, r.fy, r.cx, r.cy, rot, Vector3::from(r.translation))
    }
}

impl From<PinholeCamera> for CameraRecord {
    fn from(c: PinholeCamera) -> Self {
        let mut rotation = [[0.0; 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = c.rotation[(i, j)];
            }
        }
        CameraRecord { fx: c.fx, fy: c.fy, cx: c.cx, cy: c.cy, rotation, translation: c.translation.into() }
    }
}

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Domain(format!("camera focal lengths must be positive, got {fx}, {fy}")));
        }
        if !(cx.is_finite() && cy.is_finite()) || translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("camera has non-finite parameters".into()));
        }
        let dev = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(dev <= ORTHO_TOL) || rotation.determinant() < 0.0 {
            return Err(Error::Domain(format!("camera rotation is not a proper rotation (|RᵀR − I| = {dev:e})")));
        }
        Ok(Self { fx, fy, cx, cy, rotation, translation })
    }

    /// Camera at the world origin looking down +z.
    pub fn identity(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        Self::new(fx, fy, cx, cy, Matrix3::identity(), Vector3::zeros())
    }

    /// Camera centered at `eye` whose optical axis passes through `target`.
    /// `up` is the world direction that should appear as −y in the image.
    pub fn look_at(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        eye: [f64; 3],
        target: [f64; 3],
        up: [f64; 3],
    ) -> Result<Self> {
        let eye = Vector3::from(eye);
        let z = (Vector3::from(target) - eye).normalize();
        let down = -Vector3::from(up);
        let x = down.cross(&z);
        if x.norm() < 1e-12 {
            return Err(Error::Domain("look_at: up vector parallel to viewing direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * eye);
        Self::new(fx, fy, cx, cy, rotation, translation)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Ray through pixel `(u, v)` in the camera frame, scaled so that z = 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Continuous pixel coordinates of a camera-frame point; `None` behind the camera.
    #[inline]
    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if !(p.z > 0.0) {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Projects a world point; returns pixel coordinates and camera-frame depth.
    pub fn project_world(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let pc = self.world_to_camera(p);
        self.project_camera_point(&pc).map(|(u, v)| (u, v, pc.z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_intrinsics_and_rotations() {
        assert!(PinholeCamera::identity(0.0, 1.0, 0.0, 0.0).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(PinholeCamera::new(1.0, 1.0, 0.0, 0.0, skew, Vector3::zeros()).is_err());
        let reflection = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(PinholeCamera::new(1.0, 1.0, 0.0, 0.0, reflection, Vector3::zeros()).is_err());
    }

    #[test]
    fn look_at_points_axis_at_target() {
        let cam = PinholeCamera::look_at(500.0, 500.0, 64.0, 64.0, [0.3, -0.1, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0])
            .unwrap();
        let (u, v, z) = cam.project_world(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((u - 64.0).abs() < 1e-9 && (v - 64.0).abs() < 1e-9);
        assert!(z > 0.0);
        let c = cam.center();
        assert!((c - Vector3::new(0.3, -0.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip_validates() {
        let cam = PinholeCamera::identity(400.0, 410.0, 10.0, 12.0).unwrap();
        let s = serde_json::to_string(&cam).unwrap();
        let back: PinholeCamera = serde_json::from_str(&s).unwrap();
        assert_eq!(cam, back);
        let bad = s.replace("400.0", "-400.0");
        assert!(serde_json::from_str::<PinholeCamera>(&bad).is_err());
    }
}
