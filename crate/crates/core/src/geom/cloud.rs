use nalgebra::Vector3;

use super::camera::PinholeCamera;
use super::maps::DepthMap;
use crate::error::{Error, Result};

/// 3D points (meters) with optional parallel per-point normals and source view ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    normals: Option<Vec<[f64; 3]>>,
    view_id: Option<Vec<i32>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>, normals: Option<Vec<[f64; 3]>>, view_id: Option<Vec<i32>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Domain(format!("point cloud: point {i} is not finite")));
        }
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(Error::Shape(format!("point cloud: {} normals for {} points", n.len(), points.len())));
            }
        }
        if let Some(v) = &view_id {
            if v.len() != points.len() {
                return Err(Error::Shape(format!("point cloud: {} view ids for {} points", v.len(), points.len())));
            }
        }
        Ok(Self { points, normals, view_id })
    }

    pub fn from_points(points: Vec<[f64; 3]>) -> Result<Self> {
        Self::new(points, None, None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[[f64; 3]]> {
        self.normals.as_deref()
    }

    pub fn view_id(&self) -> Option<&[i32]> {
        self.view_id.as_deref()
    }

    /// Keeps the points whose flag is set, preserving order and parallel attributes.
    pub fn select(&self, keep: &[bool]) -> PointCloud {
        let pick = |i: &usize| keep[*i];
        let idx: Vec<usize> = (0..self.len()).filter(pick).collect();
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            normals: self.normals.as_ref().map(|n| idx.iter().map(|&i| n[i]).collect()),
            view_id: self.view_id.as_ref().map(|v| idx.iter().map(|&i| v[i]).collect()),
        }
    }

    /// Concatenates two clouds; attributes survive only when both sides carry them.
    pub fn concat(&self, other: &PointCloud) -> PointCloud {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let normals = match (&self.normals, &other.normals) {
            (Some(a), Some(b)) => Some([a.as_slice(), b.as_slice()].concat()),
            _ => None,
        };
        let view_id = match (&self.view_id, &other.view_id) {
            (Some(a), Some(b)) => Some([a.as_slice(), b.as_slice()].concat()),
            _ => None,
        };
        PointCloud { points, normals, view_id }
    }
}

/// Lifts every valid depth pixel to a world-space point.
pub fn back_project(depth: &DepthMap, cam: &PinholeCamera) -> Result<PointCloud> {
    let w = depth.width();
    let mut points = Vec::with_capacity(depth.valid_count());
    for (i, (&z, &m)) in depth.z().iter().zip(depth.mask()).enumerate() {
        if !m {
            continue;
        }
        let (u, v) = ((i % w) as f64, (i / w) as f64);
        let pc = Vector3::new((u - cam.cx()) * z / cam.fx(), (v - cam.cy()) * z / cam.fy(), z);
        points.push(cam.camera_to_world(&pc).into());
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("back_project: depth map has no valid pixel".into()));
    }
    PointCloud::from_points(points)
}

/// Z-buffer rendering of a cloud: nearest pixel, nearest depth wins.
pub fn project(cloud: &PointCloud, cam: &PinholeCamera, width: usize, height: usize) -> Result<DepthMap> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("project: empty point cloud".into()));
    }
    let mut z = vec![f64::INFINITY; width * height];
    for p in cloud.points() {
        let Some((u, v, depth)) = cam.project_world(&Vector3::from(*p)) else {
            continue;
        };
        let (ui, vi) = (u.round(), v.round());
        if ui < 0.0 || vi < 0.0 || ui >= width as f64 || vi >= height as f64 {
            continue;
        }
        let i = vi as usize * width + ui as usize;
        if depth < z[i] {
            z[i] = depth;
        }
    }
    let mask = z.iter().map(|v| v.is_finite()).collect();
    DepthMap::new(width, height, z, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> PinholeCamera {
        PinholeCamera::identity(100.0, 100.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn principal_point_maps_to_axis() {
        let mut z = vec![1.0; 12];
        z[4 + 2] = 1.0;
        let d = DepthMap::new(4, 3, z, (0..12).map(|i| i == 6).collect()).unwrap();
        let pc = back_project(&d, &cam()).unwrap();
        assert_eq!(pc.points(), &[[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn off_axis_pixel_hand_evaluated() {
        // pixel (cx + fx, cy) needs a wide image; use fx = 1.
        let c = PinholeCamera::identity(1.0, 1.0, 0.0, 0.0).unwrap();
        let d = DepthMap::new(2, 1, vec![1.0, 2.0], vec![false, true]).unwrap();
        let pc = back_project(&d, &c).unwrap();
        assert_eq!(pc.points(), &[[2.0, 0.0, 2.0]]);
    }

    #[test]
    fn count_matches_valid_pixels() {
        let d = DepthMap::dense(2, 2, vec![1.0, 1.1, 1.2, 1.3]).unwrap();
        assert_eq!(back_project(&d, &cam()).unwrap().len(), 4);
        let empty = DepthMap::new(2, 1, vec![1.0, 1.0], vec![false, false]).unwrap();
        assert!(matches!(back_project(&empty, &cam()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn z_buffer_keeps_nearest_and_skips_behind() {
        let c = cam();
        let cloud = PointCloud::from_points(vec![[0.0, 0.0, 2.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        let d = project(&cloud, &c, 4, 3).unwrap();
        assert_eq!(d.get(2, 1), Some(1.0));
        assert_eq!(d.valid_count(), 1);
        let behind = PointCloud::from_points(vec![[0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(project(&behind, &c, 4, 3).unwrap().valid_count(), 0);
    }

    #[test]
    fn round_trip_identity_pose_is_exact() {
        let (w, h) = (17, 11);
        let z: Vec<f64> = (0..w * h).map(|i| 0.8 + 0.3 * ((i * 7919) % 101) as f64 / 101.0).collect();
        let d = DepthMap::dense(w, h, z).unwrap();
        let c = PinholeCamera::identity(55.0, 57.0, 8.3, 5.1).unwrap();
        let back = project(&back_project(&d, &c).unwrap(), &c, w, h).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn parallel_lists_checked() {
        assert!(PointCloud::new(vec![[0.0; 3]], Some(vec![]), None).is_err());
        assert!(PointCloud::new(vec![[0.0; 3]], None, Some(vec![1, 2])).is_err());
        assert!(PointCloud::from_points(vec![[f64::NAN, 0.0, 0.0]]).is_err());
    }
}
