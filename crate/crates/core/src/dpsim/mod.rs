//! Dual-pixel forward model.
//!
//! Signed defocus disparity follows the thin-lens relation
//! `d = α · L·f/(1 − f/g) · (1/g − 1/Z) / pitch` (pixels), which is zero on the
//! focal plane and positive behind it. [`render_dp`] turns an all-in-focus
//! image plus depth into a left/right pair using the split-disc PSF of [`psf`].

pub mod psf;
mod scene;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, DisparityMap, ImageF};

pub use scene::{make_test_scene, value_noise_texture, SceneKind, SceneParams};

/// Lens and sensor parameters of the DP model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    /// Focal length f, meters.
    pub focal_length: f64,
    /// Aperture f-number N.
    pub f_number: f64,
    /// Focus distance g, meters.
    pub focus_distance: f64,
    /// Sensor pixel pitch, meters per pixel.
    pub pixel_pitch: f64,
    /// PSF-to-disparity proportionality α.
    pub alpha: f64,
}

/// Full-frame sensor pitch of a 6720-px-wide, 36 mm sensor.
pub const FULL_FRAME_PITCH: f64 = 0.036 / 6720.0;

impl Default for OpticsConfig {
    fn default() -> Self {
        Self { focal_length: 0.135, f_number: 5.6, focus_distance: 0.97, pixel_pitch: FULL_FRAME_PITCH, alpha: 1.0 }
    }
}

impl OpticsConfig {
    /// α chosen so the working depth range 0.80–1.10 m spans disparities
    /// inside [−12, 32] px at full resolution, with the near end at −12 px.
    pub fn dataset_preset() -> Self {
        let base = Self::default();
        let unit = Self { alpha: 1.0, ..base };
        let near = unit.blur_px(0.80);
        Self { alpha: -12.0 / near, ..base }
    }

    /// Same optics observed on an image downsampled by `factor`.
    pub fn downsampled(&self, factor: f64) -> Self {
        Self { pixel_pitch: self.pixel_pitch * factor, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let Self { focal_length: f, f_number: n, focus_distance: g, pixel_pitch, alpha } = *self;
        if !(f > 0.0 && n > 0.0 && pixel_pitch > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("optics: invalid parameters {self:?}")));
        }
        if !(g > f) {
            return Err(Error::InconsistentOptics(format!("focus distance {g} must exceed focal length {f}")));
        }
        Ok(())
    }

    /// Aperture diameter L = f/N.
    pub fn aperture(&self) -> f64 {
        self.focal_length / self.f_number
    }

    /// α·L·f/(1 − f/g)/pitch, in pixel·meters.
    pub fn blur_scale(&self) -> f64 {
        let f = self.focal_length;
        self.alpha * self.aperture() * f / (1.0 - f / self.focus_distance) / self.pixel_pitch
    }

    /// Signed disparity (pixels) of a point at depth `z`.
    #[inline]
    pub fn blur_px(&self, z: f64) -> f64 {
        self.blur_scale() * (1.0 / self.focus_distance - 1.0 / z)
    }

    /// Depth at which the model produces disparity `d` (inverse of [`Self::blur_px`]).
    pub fn depth_for_disparity(&self, d: f64) -> f64 {
        1.0 / (1.0 / self.focus_distance - d / self.blur_scale())
    }
}

/// Left/right DP views sharing one optics record.
#[derive(Debug, Clone, PartialEq)]
pub struct DpImagePair {
    left: ImageF,
    right: ImageF,
    optics: OpticsConfig,
}

impl DpImagePair {
    pub fn new(left: ImageF, right: ImageF, optics: OpticsConfig) -> Result<Self> {
        if !left.same_shape(&right) {
            return Err(Error::Shape(format!(
                "DP views differ: {}x{} vs {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            )));
        }
        Ok(Self { left, right, optics })
    }

    pub fn left(&self) -> &ImageF {
        &self.left
    }

    pub fn right(&self) -> &ImageF {
        &self.right
    }

    pub fn optics(&self) -> &OpticsConfig {
        &self.optics
    }
}

/// Per-pixel signed defocus disparity. Invalid depth stays invalid.
pub fn signed_blur(depth: &DepthMap, optics: &OpticsConfig) -> Result<DisparityMap> {
    optics.validate()?;
    let mut d = Vec::with_capacity(depth.z().len());
    for (i, (&z, &m)) in depth.z().iter().zip(depth.mask()).enumerate() {
        if m && z <= 0.0 {
            return Err(Error::Domain(format!("signed_blur: non-positive depth at pixel {i}")));
        }
        d.push(if m { optics.blur_px(z) } else { 0.0 });
    }
    DisparityMap::new(depth.width(), depth.height(), d, depth.mask().to_vec())
}

/// Disparities are bucketed to this resolution (pixels) when caching kernels.
const KERNEL_QUANTUM: f64 = 0.01;

fn kernel_key(d: f64) -> i64 {
    (d / KERNEL_QUANTUM).round() as i64
}

/// Renders the DP pair by per-output-pixel gather blur with the split-disc PSF.
///
/// Each output pixel uses the kernel of its own depth; pixels with invalid
/// depth are treated as in focus. Borders are edge-clamped. Depth edges show
/// the usual gather-blur haloing.
pub fn render_dp(rgb: &ImageF, depth: &DepthMap, optics: &OpticsConfig) -> Result<DpImagePair> {
    if rgb.width() != depth.width() || rgb.height() != depth.height() {
        return Err(Error::Shape(format!(
            "render_dp: image {}x{} vs depth {}x{}",
            rgb.width(),
            rgb.height(),
            depth.width(),
            depth.height()
        )));
    }
    let disp = signed_blur(depth, optics)?;
    let keys: Vec<i64> = disp.d().iter().map(|&d| kernel_key(d)).collect();
    let mut unique: Vec<i64> = keys.clone();
    unique.sort_unstable();
    unique.dedup();
    let kernels: BTreeMap<i64, (psf::Kernel, psf::Kernel)> = unique
        .par_iter()
        .map(|&k| (k, psf::dp_kernels(k as f64 * KERNEL_QUANTUM)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let (w, h, ch) = (rgb.width(), rgb.height(), rgb.channels());
    let src = rgb.data();
    let render = |pick: fn(&(psf::Kernel, psf::Kernel)) -> &psf::Kernel| -> Vec<f64> {
        let mut out = vec![0.0; w * h * ch];
        out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
            for x in 0..w {
                let kernel = pick(&kernels[&keys[y * w + x]]);
                for c in 0..ch {
                    let mut acc = 0.0;
                    for &(dx, dy, wt) in &kernel.taps {
                        let sx = (x as i64 - dx as i64).clamp(0, w as i64 - 1) as usize;
                        let sy = (y as i64 - dy as i64).clamp(0, h as i64 - 1) as usize;
                        acc += wt * src[(sy * w + sx) * ch + c];
                    }
                    row[x * ch + c] = acc;
                }
            }
        });
        out
    };
    let left = ImageF::new(w, h, ch, render(|k| &k.0))?;
    let right = ImageF::new(w, h, ch, render(|k| &k.1))?;
    DpImagePair::new(left, right, *optics)
}

/// Adds i.i.d. Gaussian noise with a fixed seed.
pub fn add_gaussian_noise(img: &ImageF, sigma: f64, seed: u64) -> Result<ImageF> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("noise sigma must be non-negative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let data = img.data().iter().map(|&v| v + normal.sample(&mut rng)).collect();
    ImageF::new(img.width(), img.height(), img.channels(), data)
}
