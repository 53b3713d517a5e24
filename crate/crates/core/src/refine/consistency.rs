use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, ImageF, PinholeCamera, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    /// Meters.
    pub depth_tol: f64,
    #[serde(default = "default_min_views")]
    pub min_views: usize,
    /// Intensity agreement; only used when views carry images.
    #[serde(default)]
    pub photo_tol: Option<f64>,
}

fn default_min_views() -> usize {
    3
}

impl ConsistencyConfig {
    pub fn new(depth_tol: f64) -> Self {
        Self { depth_tol, min_views: default_min_views(), photo_tol: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth_tol > 0.0) {
            return Err(Error::Domain(format!("depth_tol must be positive, got {}", self.depth_tol)));
        }
        if self.min_views < 1 {
            return Err(Error::Domain("min_views must be ≥ 1".into()));
        }
        if let Some(t) = self.photo_tol {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("photo_tol must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// One calibrated view: camera, its depth map and optionally its grayscale image.
#[derive(Debug, Clone)]
pub struct View {
    pub camera: PinholeCamera,
    pub depth: DepthMap,
    pub image: Option<ImageF>,
}

impl View {
    pub fn new(camera: PinholeCamera, depth: DepthMap) -> Self {
        Self { camera, depth, image: None }
    }

    /// Pixel index and depth agreement for a world point; `None` when the
    /// point falls outside the image, behind the camera, or on an invalid pixel.
    fn agrees(&self, p: &Vector3<f64>, tol: f64) -> Option<usize> {
        let (u, v, z) = self.camera.project_world(p)?;
        let (ui, vi) = (u.round(), v.round());
        let (w, h) = (self.depth.width(), self.depth.height());
        if ui < 0.0 || vi < 0.0 || ui >= w as f64 || vi >= h as f64 {
            return None;
        }
        let (x, y) = (ui as usize, vi as usize);
        let dz = self.depth.get(x, y)?;
        ((z - dz).abs() <= tol).then_some(y * w + x)
    }
}

/// Keeps points confirmed by at least `min_views` views. A view confirms a
/// point when it projects inside the image onto a valid depth within
/// `depth_tol`. With `photo_tol` set, confirming views that carry an image must
/// also sample within `photo_tol` of the median over those views.
pub fn filter_points(cloud: &PointCloud, views: &[View], cfg: &ConsistencyConfig) -> Result<PointCloud> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::EmptyInput("filter_points: no views".into()));
    }
    if views.len() < cfg.min_views {
        return Err(Error::Domain(format!("{} views supplied but min_views = {}", views.len(), cfg.min_views)));
    }
    for v in views {
        if let Some(img) = &v.image {
            if img.width() != v.depth.width() || img.height() != v.depth.height() {
                return Err(Error::Shape("view image and depth differ in size".into()));
            }
        }
    }
    let keep: Vec<bool> = cloud
        .points()
        .iter()
        .map(|p| {
            let p = Vector3::from(*p);
            let hits: Vec<(usize, usize)> = views
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.agrees(&p, cfg.depth_tol).map(|i| (k, i)))
                .collect();
            let Some(tol) = cfg.photo_tol else {
                return hits.len() >= cfg.min_views;
            };
            let mut samples: Vec<f64> = hits
                .iter()
                .filter_map(|&(k, i)| views[k].image.as_ref().map(|img| img.to_gray().data()[i]))
                .collect();
            if samples.is_empty() {
                return hits.len() >= cfg.min_views;
            }
            samples.sort_by(f64::total_cmp);
            let median = samples[samples.len() / 2];
            let confirmed = hits
                .iter()
                .filter(|&&(k, i)| match &views[k].image {
                    Some(img) => (img.get(i % img.width(), i / img.width()) - median).abs() <= tol,
                    None => true,
                })
                .count();
            confirmed >= cfg.min_views
        })
        .collect();
    Ok(cloud.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig() -> Vec<View> {
        // four cameras around the origin all seeing the plane z = 1 in world
        [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [-0.1, -0.05, 0.0]]
            .iter()
            .map(|&eye| {
                let cam = PinholeCamera::look_at(100.0, 100.0, 31.5, 31.5, eye, [eye[0], eye[1], 1.0], [0.0, -1.0, 0.0])
                    .unwrap();
                View::new(cam, DepthMap::dense(64, 64, vec![1.0; 64 * 64]).unwrap())
            })
            .collect()
    }

    #[test]
    fn surface_point_kept_and_floater_removed() {
        let cloud = PointCloud::from_points(vec![[0.01, 0.02, 1.0], [0.01, 0.02, 0.95], [0.0, 0.0, 1.004]]).unwrap();
        let out = filter_points(&cloud, &rig(), &ConsistencyConfig::new(0.005)).unwrap();
        assert_eq!(out.points(), &[[0.01, 0.02, 1.0], [0.0, 0.0, 1.004]]);
        let again = filter_points(&out, &rig(), &ConsistencyConfig::new(0.005)).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn photometric_disagreement_drops_point() {
        let mut views = rig();
        for (k, v) in views.iter_mut().enumerate() {
            let val = if k < 2 { 0.5 } else { 0.9 };
            v.image = Some(ImageF::constant(64, 64, val).unwrap());
        }
        let cloud = PointCloud::from_points(vec![[0.0, 0.0, 1.0]]).unwrap();
        let cfg = ConsistencyConfig { photo_tol: Some(0.1), ..ConsistencyConfig::new(0.005) };
        assert!(filter_points(&cloud, &views, &cfg).unwrap().is_empty());
        let cfg2 = ConsistencyConfig { min_views: 2, ..cfg };
        assert_eq!(filter_points(&cloud, &views, &cfg2).unwrap().len(), 1);
    }

    #[test]
    fn no_views_is_an_error() {
        let cloud = PointCloud::from_points(vec![[0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(filter_points(&cloud, &[], &ConsistencyConfig::new(0.01)), Err(Error::EmptyInput(_))));
    }
}
