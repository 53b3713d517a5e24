use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, ImageF, NormalMap, PinholeCamera};

/// Analytic synthetic scenes, all expressed in the camera frame (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SceneKind {
    /// Fronto-parallel plane at depth `z`.
    Plane { z: f64 },
    /// Plane `Z = z0 + slope_x·X + slope_y·Y`.
    SlantedPlane { z0: f64, slope_x: f64, slope_y: f64 },
    /// Sphere in front of a fronto-parallel background plane at `background`
    /// (meters; `None` leaves the background invalid).
    Sphere { center: [f64; 3], radius: f64, background: Option<f64> },
    /// Fronto-parallel checkerboard target.
    CheckerboardTarget { z: f64, square_px: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    #[serde(flatten)]
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    /// Focal length of the rendering camera, pixels.
    pub focal_px: f64,
    pub texture_seed: u64,
}

impl SceneParams {
    pub fn plane_default(width: usize, height: usize, z: f64) -> Self {
        Self { kind: SceneKind::Plane { z }, width, height, focal_px: 6.3 * width as f64, texture_seed: 1 }
    }

    /// Face-sized sphere filling most of the frame in front of a flat background.
    pub fn sphere_default(width: usize, height: usize) -> Self {
        let f = 6.3 * width as f64;
        Self {
            kind: SceneKind::Sphere { center: [0.0, 0.0, 1.0], radius: 0.06, background: Some(1.1) },
            width,
            height,
            focal_px: f,
            texture_seed: 1,
        }
    }

    /// The camera that renders this scene (identity pose, centered principal point).
    pub fn camera(&self) -> Result<PinholeCamera> {
        PinholeCamera::identity(
            self.focal_px,
            self.focal_px,
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }
}

/// Smooth multi-octave value noise in [0.05, 0.95], deterministic in `seed`.
pub fn value_noise_texture(width: usize, height: usize, seed: u64) -> Result<ImageF> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; width * height];
    for spacing in [3.0f64, 6.0, 12.0, 24.0, 48.0] {
        let gw = (width as f64 / spacing).ceil() as usize + 2;
        let gh = (height as f64 / spacing).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        for y in 0..height {
            let fy = y as f64 / spacing;
            let (iy, ty) = (fy.floor() as usize, smooth(fy.fract()));
            for x in 0..width {
                let fx = x as f64 / spacing;
                let (ix, tx) = (fx.floor() as usize, smooth(fx.fract()));
                let l = |i: usize, j: usize| lattice[j * gw + i];
                let top = l(ix, iy) * (1.0 - tx) + l(ix + 1, iy) * tx;
                let bot = l(ix, iy + 1) * (1.0 - tx) + l(ix + 1, iy + 1) * tx;
                acc[y * width + x] += top * (1.0 - ty) + bot * ty;
            }
        }
    }
    let (lo, hi) = acc.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (hi - lo).max(1e-12);
    ImageF::gray(width, height, acc.into_iter().map(|v| 0.05 + 0.9 * (v - lo) / span).collect())
}

fn checker_texture(width: usize, height: usize, square: usize) -> Result<ImageF> {
    ImageF::from_fn(width, height, |x, y| if ((x / square) + (y / square)).is_multiple_of(2) { 0.9 } else { 0.1 })
}

/// Returns (all-in-focus image, depth, normals), exact up to rounding.
pub fn make_test_scene(p: &SceneParams) -> Result<(ImageF, DepthMap, NormalMap)> {
    if p.width == 0 || p.height == 0 || !(p.focal_px > 0.0) {
        return Err(Error::Domain("scene: image size and focal length must be positive".into()));
    }
    let cam = p.camera()?;
    let n = p.width * p.height;
    let mut z = vec![0.0; n];
    let mut mask = vec![false; n];
    let mut normals = vec![[0.0; 3]; n];
    let ray = |i: usize| cam.ray((i % p.width) as f64, (i / p.width) as f64);

    let texture = match p.kind {
        SceneKind::CheckerboardTarget { square_px, .. } => {
            if square_px == 0 {
                return Err(Error::Domain("scene: checkerboard square must be ≥ 1 px".into()));
            }
            checker_texture(p.width, p.height, square_px)?
        }
        _ => value_noise_texture(p.width, p.height, p.texture_seed)?,
    };

    match p.kind {
        SceneKind::Plane { z: depth } | SceneKind::CheckerboardTarget { z: depth, .. } => {
            if !(depth > 0.0) {
                return Err(Error::Domain(format!("scene: plane depth must be positive, got {depth}")));
            }
            z.fill(depth);
            mask.fill(true);
            normals.fill([0.0, 0.0, 1.0]);
        }
        SceneKind::SlantedPlane { z0, slope_x, slope_y } => {
            let len = (slope_x * slope_x + slope_y * slope_y + 1.0).sqrt();
            let nrm = [slope_x / len, slope_y / len, 1.0 / len];
            for i in 0..n {
                let r = ray(i);
                let denom = 1.0 - slope_x * r.x - slope_y * r.y;
                let depth = z0 / denom;
                if !(depth > 0.0 && depth.is_finite()) {
                    return Err(Error::Domain(format!("scene: slanted plane leaves the frustum at pixel {i}")));
                }
                z[i] = depth;
                mask[i] = true;
                normals[i] = nrm;
            }
        }
        SceneKind::Sphere { center, radius, background } => {
            if !(radius > 0.0) {
                return Err(Error::Domain(format!("scene: sphere radius must be positive, got {radius}")));
            }
            if center[2] - radius <= 0.0 {
                return Err(Error::Domain("scene: sphere must lie in front of the camera".into()));
            }
            for i in 0..n {
                let r = ray(i);
                // |t·r − c|² = radius², nearest root
                let a = r.norm_squared();
                let b = -2.0 * (r.x * center[0] + r.y * center[1] + r.z * center[2]);
                let c = center[0] * center[0] + center[1] * center[1] + center[2] * center[2] - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc >= 0.0 {
                    let t = (-b - disc.sqrt()) / (2.0 * a);
                    let hit = [t * r.x, t * r.y, t * r.z];
                    z[i] = hit[2];
                    mask[i] = true;
                    // outward normal with z mirrored toward the viewer
                    normals[i] = [
                        (hit[0] - center[0]) / radius,
                        (hit[1] - center[1]) / radius,
                        (center[2] - hit[2]) / radius,
                    ];
                    let len = (normals[i][0].powi(2) + normals[i][1].powi(2) + normals[i][2].powi(2)).sqrt();
                    normals[i] = [normals[i][0] / len, normals[i][1] / len, normals[i][2] / len];
                } else if let Some(bg) = background {
                    if !(bg > 0.0) {
                        return Err(Error::Domain("scene: background depth must be positive".into()));
                    }
                    z[i] = bg;
                    mask[i] = true;
                    normals[i] = [0.0, 0.0, 1.0];
                }
            }
        }
    }
    let depth = DepthMap::new(p.width, p.height, z, mask.clone())?;
    let normal_map = NormalMap::new(p.width, p.height, normals, mask)?;
    Ok((texture, depth, normal_map))
}
