use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{DepthMap, NormalMap, PinholeCamera};

/// Total-least-squares plane through the back-projected valid pixels of each
/// `neighborhood`-sized window. Normals face the camera and are stored in the
/// z-mirrored normal frame. Windows with fewer than three valid points, or
/// collinear ones, leave the pixel masked.
pub fn normals_from_depth(depth: &DepthMap, cam: &PinholeCamera, neighborhood: usize) -> Result<NormalMap> {
    if neighborhood < 3 || neighborhood.is_multiple_of(2) {
        return Err(Error::Domain(format!("neighborhood must be odd and ≥ 3, got {neighborhood}")));
    }
    let (w, h) = (depth.width(), depth.height());
    let r = neighborhood / 2;
    let point = |x: usize, y: usize| depth.get(x, y).map(|z| cam.ray(x as f64, y as f64) * z);
    let solved: Vec<Option<[f64; 3]>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let center = point(x, y)?;
            let mut pts: Vec<Vector3<f64>> = Vec::with_capacity(neighborhood * neighborhood);
            for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    if let Some(p) = point(xx, yy) {
                        pts.push(p);
                    }
                }
            }
            if pts.len() < 3 {
                return None;
            }
            let mean = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
            let mut cov = Matrix3::zeros();
            for p in &pts {
                let d = p - mean;
                cov += d * d.transpose();
            }
            let eig = SymmetricEigen::new(cov);
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            if !(eig.eigenvalues[order[1]] > 1e-12 * eig.eigenvalues[order[2]]) {
                return None;
            }
            let mut n: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned().normalize();
            if n.dot(&center) > 0.0 {
                n = -n;
            }
            Some([n.x, n.y, -n.z])
        })
        .collect();
    let mask: Vec<bool> = solved.iter().map(Option::is_some).collect();
    let normals = solved.into_iter().map(|n| n.unwrap_or([0.0; 3])).collect();
    NormalMap::new(w, h, normals, mask)
}
