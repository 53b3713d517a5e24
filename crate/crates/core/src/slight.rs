//! Structured light: inverse gray code plus N-step phase shifting.
//!
//! Each coded axis is split into 2^bits stripes of width `s`; the sinusoid
//! period is `2s`, so every period holds two gray stripes. The gray stripe
//! therefore says which half of a period a pixel lies in, which is what the
//! unwrapper needs to fix ±1 period errors right at the phase wrap.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, ImageF, PinholeCamera};

/// Which projector coordinate a pattern block encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Codes the projector column (stripes vary along x).
    Horizontal,
    /// Codes the projector row.
    Vertical,
}

/// Pattern parameters for one coded axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCoding {
    pub orientation: Orientation,
    pub gray_bits: u32,
    pub phase_steps: usize,
    /// Sinusoid period in projector pixels; twice the gray stripe width.
    pub phase_period: usize,
}

impl AxisCoding {
    /// Smallest even period whose stripes cover `extent` pixels with `gray_bits` bits.
    pub fn for_extent(orientation: Orientation, extent: usize, gray_bits: u32, phase_steps: usize) -> Self {
        let stripe = extent.div_ceil(1usize << gray_bits).max(1);
        Self { orientation, gray_bits, phase_steps, phase_period: 2 * stripe }
    }

    pub fn stripe_width(&self) -> f64 {
        self.phase_period as f64 / 2.0
    }

    pub fn pattern_count(&self) -> usize {
        2 * self.gray_bits as usize + self.phase_steps
    }

    fn validate(&self, extent: usize) -> Result<()> {
        if self.gray_bits < 1 || self.gray_bits > 20 {
            return Err(Error::Domain(format!("gray_bits must be in 1..=20, got {}", self.gray_bits)));
        }
        if self.phase_steps < 3 {
            return Err(Error::Domain(format!("phase_steps must be ≥ 3, got {}", self.phase_steps)));
        }
        if self.phase_period < 2 || !self.phase_period.is_multiple_of(2) {
            return Err(Error::Domain(format!("phase_period must be even and ≥ 2, got {}", self.phase_period)));
        }
        let covered = (1usize << self.gray_bits) * self.phase_period / 2;
        if covered < extent {
            return Err(Error::Domain(format!(
                "{} stripes of width {} cover {covered} px, projector axis has {extent}",
                1usize << self.gray_bits,
                self.phase_period / 2
            )));
        }
        Ok(())
    }

    /// Continuous-coordinate pattern value for pattern `index` within this block.
    pub fn value(&self, index: usize, p: f64) -> f64 {
        let bits = self.gray_bits as usize;
        if index < 2 * bits {
            let bit = index % bits;
            let stripe = (p / self.stripe_width()).floor().max(0.0) as u64;
            let gray = stripe ^ (stripe >> 1);
            let on = ((gray >> (bits - 1 - bit)) & 1) as f64;
            if index < bits {
                on
            } else {
                1.0 - on
            }
        } else {
            let k = (index - 2 * bits) as f64;
            0.5 + 0.5 * (TAU * p / self.phase_period as f64 - TAU * k / self.phase_steps as f64).cos()
        }
    }
}

/// Complete projector pattern configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    pub proj_width: usize,
    pub proj_height: usize,
    pub axes: Vec<AxisCoding>,
}

impl PatternSet {
    /// 6-bit inverse gray code + 8 phase steps on both axes.
    pub fn standard(proj_width: usize, proj_height: usize) -> Self {
        Self {
            proj_width,
            proj_height,
            axes: vec![
                AxisCoding::for_extent(Orientation::Horizontal, proj_width, 6, 8),
                AxisCoding::for_extent(Orientation::Vertical, proj_height, 6, 8),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.proj_width == 0 || self.proj_height == 0 || self.axes.is_empty() {
            return Err(Error::Domain("pattern set needs a projector size and at least one axis".into()));
        }
        for a in &self.axes {
            a.validate(self.extent(a.orientation))?;
        }
        Ok(())
    }

    pub fn extent(&self, o: Orientation) -> usize {
        match o {
            Orientation::Horizontal => self.proj_width,
            Orientation::Vertical => self.proj_height,
        }
    }

    pub fn axis(&self, o: Orientation) -> Option<&AxisCoding> {
        self.axes.iter().find(|a| a.orientation == o)
    }

    pub fn pattern_count(&self) -> usize {
        self.axes.iter().map(AxisCoding::pattern_count).sum()
    }

    /// Pattern value at continuous projector coordinates for the global pattern index.
    pub fn value(&self, index: usize, u: f64, v: f64) -> f64 {
        let mut i = index;
        for a in &self.axes {
            if i < a.pattern_count() {
                let p = match a.orientation {
                    Orientation::Horizontal => u,
                    Orientation::Vertical => v,
                };
                return a.value(i, p);
            }
            i -= a.pattern_count();
        }
        panic!("pattern index {index} out of range");
    }

    /// Index ranges of (codes, inverses, phase shots) for an axis in the global list.
    pub fn ranges(&self, o: Orientation) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>)> {
        let mut start = 0;
        for a in &self.axes {
            let bits = a.gray_bits as usize;
            if a.orientation == o {
                return Some((
                    start..start + bits,
                    start + bits..start + 2 * bits,
                    start + 2 * bits..start + a.pattern_count(),
                ));
            }
            start += a.pattern_count();
        }
        None
    }
}

/// Projector images in order: per axis, gray codes (MSB first), their
/// inverses, then the phase-shifted sinusoids.
pub fn generate_patterns(cfg: &PatternSet) -> Result<Vec<ImageF>> {
    cfg.validate()?;
    (0..cfg.pattern_count())
        .map(|i| ImageF::from_fn(cfg.proj_width, cfg.proj_height, |x, y| cfg.value(i, x as f64, y as f64)))
        .collect()
}

/// Gray-decoded stripe indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayDecode {
    pub width: usize,
    pub height: usize,
    pub stripe: Vec<u32>,
    pub mask: Vec<bool>,
}

/// Wrapped phase in [0, 2π) and modulation amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDecode {
    pub width: usize,
    pub height: usize,
    pub wrapped: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Unwrapped projector coordinate per camera pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    width: usize,
    height: usize,
    unwrapped: Vec<f64>,
    mask: Vec<bool>,
    extent: usize,
}

impl PhaseField {
    pub fn new(width: usize, height: usize, mut unwrapped: Vec<f64>, mut mask: Vec<bool>, extent: usize) -> Result<Self> {
        if unwrapped.len() != width * height || mask.len() != width * height {
            return Err(Error::Shape("phase field buffers do not match its size".into()));
        }
        for (v, m) in unwrapped.iter_mut().zip(mask.iter_mut()) {
            if *m && !(v.is_finite() && *v >= 0.0 && *v < extent as f64) {
                *m = false;
            }
            if !*m {
                *v = 0.0;
            }
        }
        Ok(Self { width, height, unwrapped, mask, extent })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn unwrapped(&self) -> &[f64] {
        &self.unwrapped
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.unwrapped[i])
    }
}

/// Contrast threshold for gray bits, fraction of the dynamic range.
pub const TAU_CONTRAST: f64 = 0.02;
/// Modulation threshold for phase shots, fraction of the dynamic range.
pub const TAU_AMP: f64 = 0.02;

fn dynamic_range(images: &[&ImageF]) -> f64 {
    let (lo, hi) = images
        .iter()
        .flat_map(|i| i.data().iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    (hi - lo).max(0.0)
}

fn check_same_shape(images: &[&ImageF]) -> Result<(usize, usize)> {
    let first = images.first().ok_or_else(|| Error::EmptyInput("no images".into()))?;
    for img in images {
        if img.width() != first.width() || img.height() != first.height() || img.channels() != 1 {
            return Err(Error::Shape("structured-light stack images differ in shape or are not grayscale".into()));
        }
    }
    Ok((first.width(), first.height()))
}

/// Per-pixel bit = code > inverse, gray → binary. Low-contrast bits mask the pixel.
pub fn decode_gray(codes: &[ImageF], inverses: &[ImageF]) -> Result<GrayDecode> {
    if codes.len() != inverses.len() {
        return Err(Error::Shape(format!("{} code images vs {} inverses", codes.len(), inverses.len())));
    }
    if codes.is_empty() {
        return Err(Error::EmptyInput("decode_gray: no code images".into()));
    }
    let all: Vec<&ImageF> = codes.iter().chain(inverses).collect();
    let (w, h) = check_same_shape(&all)?;
    let tau = TAU_CONTRAST * dynamic_range(&all);
    let mut stripe = vec![0u32; w * h];
    let mut mask = vec![true; w * h];
    for i in 0..w * h {
        let mut gray = 0u32;
        for (c, inv) in codes.iter().zip(inverses) {
            let diff = c.data()[i] - inv.data()[i];
            if !(diff.abs() > tau) || diff.abs() == 0.0 {
                mask[i] = false;
            }
            gray = (gray << 1) | (diff > 0.0) as u32;
        }
        // gray → binary: prefix XOR
        let mut bin = gray;
        let mut shift = 1;
        while shift < 32 {
            bin ^= bin >> shift;
            shift <<= 1;
        }
        stripe[i] = if mask[i] { bin } else { 0 };
    }
    Ok(GrayDecode { width: w, height: h, stripe, mask })
}

/// K-step phase estimate φ = atan2(Σ I_k sin(2πk/K), Σ I_k cos(2πk/K)) in [0, 2π).
pub fn decode_phase(shots: &[ImageF]) -> Result<PhaseDecode> {
    if shots.len() < 3 {
        return Err(Error::InsufficientShots(shots.len()));
    }
    let refs: Vec<&ImageF> = shots.iter().collect();
    let (w, h) = check_same_shape(&refs)?;
    let k = shots.len();
    // floor keeps round-off on a flat stack from counting as modulation
    let peak = refs.iter().flat_map(|i| i.data().iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let tau = (TAU_AMP * dynamic_range(&refs)).max(1e-9 * peak);
    let (sin_k, cos_k): (Vec<f64>, Vec<f64>) = (0..k).map(|i| (TAU * i as f64 / k as f64).sin_cos()).unzip();
    let mut wrapped = vec![0.0; w * h];
    let mut amplitude = vec![0.0; w * h];
    let mut mask = vec![false; w * h];
    for i in 0..w * h {
        let (mut s, mut c) = (0.0, 0.0);
        for (j, img) in shots.iter().enumerate() {
            let v = img.data()[i];
            s += v * sin_k[j];
            c += v * cos_k[j];
        }
        let amp = 2.0 / k as f64 * (s * s + c * c).sqrt();
        let mut phi = s.atan2(c);
        if phi < 0.0 {
            phi += TAU;
        }
        if phi >= TAU {
            phi -= TAU;
        }
        amplitude[i] = amp;
        wrapped[i] = phi;
        mask[i] = amp > tau;
    }
    Ok(PhaseDecode { width: w, height: h, wrapped, amplitude, mask })
}

/// Combines stripe indices and wrapped phase into projector coordinates.
///
/// The period index is the one that puts the phase-derived coordinate closest
/// to the center of the decoded gray stripe; this absorbs ±1 stripe errors at
/// boundaries. Pixels where phase and stripe still disagree by more than
/// 3/4 of a stripe are masked.
pub fn unwrap(gray: &GrayDecode, phase: &PhaseDecode, axis: &AxisCoding, extent: usize) -> Result<PhaseField> {
    if gray.width != phase.width || gray.height != phase.height {
        return Err(Error::Shape("unwrap: gray and phase maps differ in size".into()));
    }
    let period = axis.phase_period as f64;
    let stripe_w = axis.stripe_width();
    let n = gray.width * gray.height;
    let mut out = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if !(gray.mask[i] && phase.mask[i]) {
            continue;
        }
        let coarse = (gray.stripe[i] as f64 + 0.5) * stripe_w;
        let fine = phase.wrapped[i] / TAU * period;
        let m = ((coarse - fine) / period).round();
        let u = m * period + fine;
        if (u - coarse).abs() <= 0.75 * stripe_w {
            out[i] = u;
            mask[i] = true;
        }
    }
    PhaseField::new(gray.width, gray.height, out, mask, extent)
}

/// Decodes one axis out of a full capture stack ordered like [`generate_patterns`].
pub fn decode_axis(captures: &[ImageF], cfg: &PatternSet, o: Orientation) -> Result<PhaseField> {
    cfg.validate()?;
    if captures.len() != cfg.pattern_count() {
        return Err(Error::Shape(format!("expected {} captures, got {}", cfg.pattern_count(), captures.len())));
    }
    let axis = cfg.axis(o).ok_or_else(|| Error::Domain(format!("pattern set has no {o:?} axis")))?;
    let (codes, inverses, shots) = cfg.ranges(o).expect("axis present");
    let gray = decode_gray(&captures[codes], &captures[inverses])?;
    let phase = decode_phase(&captures[shots])?;
    unwrap(&gray, &phase, axis, cfg.extent(o))
}

/// Ray–plane triangulation against the projector column planes.
pub fn triangulate(phase_h: &PhaseField, cam: &PinholeCamera, proj: &PinholeCamera) -> Result<DepthMap> {
    let r_rel = proj.rotation() * cam.rotation().transpose();
    let t_rel = proj.translation() - r_rel * cam.translation();
    let (w, h) = (phase_h.width(), phase_h.height());
    let mut z = vec![0.0; w * h];
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let Some(col) = phase_h.get(x, y) else { continue };
            // projector-frame plane through the optical center: X − a·Z = 0
            let n_p = Vector3::new(1.0, 0.0, -(col - proj.cx()) / proj.fx());
            let n_c = r_rel.transpose() * n_p;
            let ray = cam.ray(x as f64, y as f64);
            let denom = n_c.dot(&ray);
            if denom.abs() <= 1e-12 * n_c.norm() * ray.norm() {
                continue;
            }
            let depth = -n_p.dot(&t_rel) / denom;
            if depth > 0.0 && depth.is_finite() {
                z[i] = depth;
                mask[i] = true;
            }
        }
    }
    DepthMap::new(w, h, z, mask)
}

/// Synthetic capture of every pattern on a scene given by its camera-frame
/// depth: each lit point takes the projector value at its continuous
/// projection, mapped through `ambient + gain·value`. Points outside the
/// projector frustum receive `ambient`. Projector-side occlusion is not modelled.
pub fn render_captures(
    cfg: &PatternSet,
    depth: &DepthMap,
    cam: &PinholeCamera,
    proj: &PinholeCamera,
    ambient: f64,
    gain: f64,
) -> Result<Vec<ImageF>> {
    cfg.validate()?;
    let (w, h) = (depth.width(), depth.height());
    let proj_uv: Vec<Option<(f64, f64)>> = (0..w * h)
        .map(|i| {
            let z = depth.get(i % w, i / w)?;
            let pc = cam.ray((i % w) as f64, (i / w) as f64) * z;
            let (u, v, _) = proj.project_world(&cam.camera_to_world(&pc))?;
            let inside = u >= 0.0 && v >= 0.0 && u < cfg.proj_width as f64 && v < cfg.proj_height as f64;
            inside.then_some((u, v))
        })
        .collect();
    (0..cfg.pattern_count())
        .map(|k| {
            let data = proj_uv
                .iter()
                .map(|uv| match uv {
                    Some((u, v)) => ambient + gain * cfg.value(k, *u, *v),
                    None => ambient,
                })
                .collect();
            ImageF::gray(w, h, data)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn small() -> PatternSet {
        PatternSet::standard(256, 128)
    }

    #[test]
    fn default_pattern_count() {
        let imgs = generate_patterns(&small()).unwrap();
        assert_eq!(imgs.len(), 2 * (12 + 8));
    }

    #[test]
    fn msb_splits_left_and_right() {
        let imgs = generate_patterns(&small()).unwrap();
        let msb = &imgs[0];
        assert_eq!(msb.get(0, 5), 0.0);
        assert_eq!(msb.get(127, 5), 0.0);
        assert_eq!(msb.get(128, 5), 1.0);
        assert_eq!(msb.get(255, 5), 1.0);
    }

    #[test]
    fn inverses_are_exact_complements() {
        let cfg = small();
        let imgs = generate_patterns(&cfg).unwrap();
        for o in [Orientation::Horizontal, Orientation::Vertical] {
            let (codes, inv, _) = cfg.ranges(o).unwrap();
            for (c, i) in codes.zip(inv) {
                for (a, b) in imgs[c].data().iter().zip(imgs[i].data()) {
                    assert_eq!(*b, 1.0 - a);
                }
            }
        }
    }

    #[test]
    fn self_decode_is_exact() {
        let cfg = small();
        let imgs = generate_patterns(&cfg).unwrap();
        let (codes, inv, _) = cfg.ranges(Orientation::Horizontal).unwrap();
        let g = decode_gray(&imgs[codes], &imgs[inv]).unwrap();
        let stripe = cfg.axis(Orientation::Horizontal).unwrap().stripe_width();
        for y in 0..128 {
            for x in 0..256 {
                assert!(g.mask[y * 256 + x]);
                assert_eq!(g.stripe[y * 256 + x], (x as f64 / stripe).floor() as u32);
            }
        }
        let field = decode_axis(&imgs, &cfg, Orientation::Horizontal).unwrap();
        for x in 0..256 {
            assert!((field.get(x, 3).unwrap() - x as f64).abs() < 1e-9, "x={x}");
        }
        let row = (0..256).map(|x| field.get(x, 7).unwrap()).collect::<Vec<_>>();
        assert!(row.windows(2).all(|p| p[1] > p[0]));
        let vert = decode_axis(&imgs, &cfg, Orientation::Vertical).unwrap();
        for y in 0..128 {
            assert!((vert.get(9, y).unwrap() - y as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_contrast_is_masked() {
        let flat = vec![ImageF::constant(4, 4, 0.5).unwrap(); 6];
        let g = decode_gray(&flat, &flat).unwrap();
        assert!(g.mask.iter().all(|m| !m));
        let p = decode_phase(&flat).unwrap();
        assert!(p.mask.iter().all(|m| !m));
        assert!(p.amplitude.iter().all(|&a| a.abs() < 1e-12));
    }

    #[test]
    fn gray_decode_survives_noise() {
        let cfg = small();
        let imgs = generate_patterns(&cfg).unwrap();
        let (codes, inv, _) = cfg.ranges(Orientation::Horizontal).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 0.01).unwrap();
        let noisy: Vec<ImageF> = imgs
            .iter()
            .map(|im| ImageF::gray(im.width(), im.height(), im.data().iter().map(|v| v + normal.sample(&mut rng)).collect()).unwrap())
            .collect();
        let g = decode_gray(&noisy[codes], &noisy[inv]).unwrap();
        let stripe = cfg.axis(Orientation::Horizontal).unwrap().stripe_width();
        let correct = (0..256 * 128)
            .filter(|&i| g.mask[i] && g.stripe[i] == ((i % 256) as f64 / stripe).floor() as u32)
            .count();
        assert!(correct as f64 >= 0.999 * (256 * 128) as f64);
    }

    fn sinusoid_shots(phi0: f64, k: usize, dc: f64, gain: f64) -> Vec<ImageF> {
        (0..k)
            .map(|j| ImageF::constant(2, 2, dc + gain * (0.5 + 0.5 * (phi0 - TAU * j as f64 / k as f64).cos())).unwrap())
            .collect()
    }

    #[test]
    fn phase_recovered_and_dc_rejected() {
        for phi0 in [0.1, 1.0, 3.0, 5.9] {
            let p = decode_phase(&sinusoid_shots(phi0, 8, 0.0, 1.0)).unwrap();
            assert!((p.wrapped[0] - phi0).abs() < 1e-6);
            let q = decode_phase(&sinusoid_shots(phi0, 8, 0.3, 1.0)).unwrap();
            assert!((q.wrapped[0] - phi0).abs() < 1e-6);
        }
        assert!(matches!(decode_phase(&sinusoid_shots(1.0, 2, 0.0, 1.0)), Err(Error::InsufficientShots(2))));
    }

    #[test]
    fn phase_invariant_to_affine_intensity() {
        // needs a varying stack so the dynamic range is non-trivial
        for (a, b) in [(0.3, 0.1), (2.0, -0.4), (7.5, 3.0)] {
            let base = decode_phase(&sinusoid_shots(2.2, 6, 0.0, 1.0)).unwrap();
            let shifted = decode_phase(&sinusoid_shots(2.2, 6, b, a)).unwrap();
            assert!((base.wrapped[0] - shifted.wrapped[0]).abs() < 1e-9);
            assert!((shifted.amplitude[0] - a * base.amplitude[0]).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn boundary_stripe_error_corrected() {
        let axis = AxisCoding { orientation: Orientation::Horizontal, gray_bits: 6, phase_steps: 8, phase_period: 8 };
        let b = 5u32;
        // true coordinate just below the period boundary (b+1)·P; gray misread into stripe 2(b+1)
        let gray = GrayDecode { width: 1, height: 1, stripe: vec![2 * (b + 1)], mask: vec![true] };
        let eps = 1e-3;
        let phase = PhaseDecode { width: 1, height: 1, wrapped: vec![TAU - eps], amplitude: vec![1.0], mask: vec![true] };
        let f = unwrap(&gray, &phase, &axis, 256).unwrap();
        let u = f.get(0, 0).unwrap();
        assert_eq!((u / 8.0).floor() as u32, b);
        assert!((u - (8.0 * (b + 1) as f64 - eps / TAU * 8.0)).abs() < 1e-12);
    }

    #[test]
    fn masked_inputs_stay_masked() {
        let axis = AxisCoding::for_extent(Orientation::Horizontal, 256, 6, 8);
        let gray = GrayDecode { width: 2, height: 1, stripe: vec![0, 0], mask: vec![false, false] };
        let phase = PhaseDecode { width: 2, height: 1, wrapped: vec![1.0, 1.0], amplitude: vec![1.0, 1.0], mask: vec![true, true] };
        assert!(unwrap(&gray, &phase, &axis, 256).unwrap().mask().iter().all(|m| !m));
    }

    #[test]
    fn hand_constructed_ray_plane() {
        // camera at origin, projector 0.2 m to the right, both looking down +z
        let proj = PinholeCamera::new(200.0, 200.0, 100.0, 100.0, nalgebra::Matrix3::identity(), Vector3::new(-0.2, 0.0, 0.0))
            .unwrap();
        // camera pixel (60, 50) at depth 1: X = (0.1, 0, 1); in projector frame (−0.1, 0, 1) → column 80
        let field = PhaseField::new(1, 1, vec![80.0], vec![true], 256).unwrap();
        // 1×1 field: principal point shifted so pixel 0 sits at column 60
        let cam1 = PinholeCamera::identity(100.0, 100.0, -10.0, 0.0).unwrap();
        let d = triangulate(&field, &cam1, &proj).unwrap();
        assert!((d.z()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_baseline_masks_everything() {
        let cam = PinholeCamera::identity(100.0, 100.0, 8.0, 8.0).unwrap();
        let field = PhaseField::new(16, 16, vec![10.0; 256], vec![true; 256], 256).unwrap();
        let d = triangulate(&field, &cam, &cam).unwrap();
        assert_eq!(d.valid_count(), 0);
    }

    #[test]
    fn synthetic_plane_end_to_end() {
        let cfg = PatternSet::standard(512, 512);
        let cam = PinholeCamera::identity(300.0, 300.0, 31.5, 31.5).unwrap();
        let proj = PinholeCamera::look_at(600.0, 600.0, 255.5, 255.5, [0.15, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0])
            .unwrap();
        let truth = DepthMap::dense(64, 64, vec![1.0; 64 * 64]).unwrap();
        let caps = render_captures(&cfg, &truth, &cam, &proj, 0.05, 0.9).unwrap();
        let field = decode_axis(&caps, &cfg, Orientation::Horizontal).unwrap();
        let d = triangulate(&field, &cam, &proj).unwrap();
        let errs: Vec<f64> = d.z().iter().zip(d.mask()).filter(|(_, m)| **m).map(|(z, _)| (z - 1.0).powi(2)).collect();
        assert!(errs.len() as f64 >= 0.99 * 4096.0);
        let rmse = (errs.iter().sum::<f64>() / errs.len() as f64).sqrt();
        assert!(rmse <= 1e-4, "rmse {rmse}");
    }
}
