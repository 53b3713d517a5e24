//! Shared containers, the pinhole camera model and file I/O.

mod camera;
mod cloud;
pub mod io;
mod maps;

pub use camera::PinholeCamera;
pub use cloud::{back_project, project, PointCloud};
pub use maps::{DepthMap, DisparityMap, ImageF, NormalMap, UNIT_TOL};

/// Normalises a 3-vector; `None` for (near) zero length.
pub(crate) fn normalize3(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-300 && n.is_finite()).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

#[inline]
pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
