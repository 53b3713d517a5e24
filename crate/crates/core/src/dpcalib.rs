//! Affine inverse-depth ↔ disparity calibration.
//!
//! The DP model is `d = A + B/Z` with bias `A = s/g` and slope `B = −s`, where
//! `s = α·L·f/(1 − f/g)/pitch`. Fitting (A, B) from (1/Z, d) samples recovers
//! the focus distance as `g = −B/A`, the aperture from the lens, and α from
//! the slope.

use nalgebra::{Matrix6, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::dpsim::OpticsConfig;
use crate::error::{Error, Result};
use crate::geom::{DepthMap, DisparityMap, ImageF};

/// Default guard around the focal-plane pole `d = A`, pixels.
pub const DEFAULT_EPS_DIV: f64 = 1e-9;

const REL_TOL: f64 = 1e-9;

/// Fitted calibration record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibRecord", into = "CalibRecord")]
pub struct DpCalibration {
    a: f64,
    b: f64,
    focal_length: f64,
    f_number: f64,
    focus_distance: f64,
    aperture: f64,
    alpha: f64,
    pixel_pitch: f64,
    residual_rms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CalibRecord {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    f: f64,
    #[serde(rename = "N")]
    n: f64,
    g: f64,
    #[serde(rename = "L")]
    l: f64,
    alpha: f64,
    pixel_pitch: f64,
    #[serde(default)]
    residual_rms: f64,
}

impl TryFrom<CalibRecord> for DpCalibration {
    type Error = Error;

    fn try_from(r: CalibRecord) -> Result<Self> {
        let c = DpCalibration {
            a: r.a,
            b: r.b,
            focal_length: r.f,
            f_number: r.n,
            focus_distance: r.g,
            aperture: r.l,
            alpha: r.alpha,
            pixel_pitch: r.pixel_pitch,
            residual_rms: r.residual_rms,
        };
        c.validate()?;
        Ok(c)
    }
}

impl From<DpCalibration> for CalibRecord {
    fn from(c: DpCalibration) -> Self {
        CalibRecord {
            a: c.a,
            b: c.b,
            f: c.focal_length,
            n: c.f_number,
            g: c.focus_distance,
            l: c.aperture,
            alpha: c.alpha,
            pixel_pitch: c.pixel_pitch,
            residual_rms: c.residual_rms,
        }
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

impl DpCalibration {
    fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.focal_length, self.f_number, self.focus_distance, self.aperture, self.alpha];
        if all.iter().any(|v| !v.is_finite()) || !(self.pixel_pitch > 0.0) {
            return Err(Error::Domain("calibration: non-finite or non-positive parameters".into()));
        }
        if self.b == 0.0 {
            return Err(Error::DegenerateFit("calibration slope B is zero".into()));
        }
        if !rel_close(self.focus_distance, -self.b / self.a) {
            return Err(Error::InconsistentOptics(format!(
                "g = {} does not match −B/A = {}",
                self.focus_distance,
                -self.b / self.a
            )));
        }
        if !rel_close(self.aperture, self.focal_length / self.f_number) {
            return Err(Error::InconsistentOptics("L must equal f/N".into()));
        }
        Ok(())
    }

    /// Exact calibration implied by a forward optics model.
    pub fn from_optics(optics: &OpticsConfig) -> Result<Self> {
        optics.validate()?;
        let s = optics.blur_scale();
        let c = DpCalibration {
            a: s / optics.focus_distance,
            b: -s,
            focal_length: optics.focal_length,
            f_number: optics.f_number,
            focus_distance: optics.focus_distance,
            aperture: optics.aperture(),
            alpha: optics.alpha,
            pixel_pitch: optics.pixel_pitch,
            residual_rms: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    /// Bias A, pixels.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Slope B, pixel·meters.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    pub fn f_number(&self) -> f64 {
        self.f_number
    }

    pub fn focus_distance(&self) -> f64 {
        self.focus_distance
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn residual_rms(&self) -> f64 {
        self.residual_rms
    }

    /// Optics record equivalent to this calibration.
    pub fn optics(&self) -> OpticsConfig {
        OpticsConfig {
            focal_length: self.focal_length,
            f_number: self.f_number,
            focus_distance: self.focus_distance,
            pixel_pitch: self.pixel_pitch,
            alpha: self.alpha,
        }
    }

    #[inline]
    pub fn disparity_at(&self, z: f64) -> f64 {
        self.a + self.b / z
    }

    #[inline]
    pub fn depth_at(&self, d: f64) -> f64 {
        self.b / (d - self.a)
    }
}

/// One (inverse depth, disparity) measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibSample {
    pub inv_depth: f64,
    pub disparity: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl CalibSample {
    pub fn new(inv_depth: f64, disparity: f64, weight: f64) -> Result<Self> {
        if !(inv_depth > 0.0 && inv_depth.is_finite()) || !disparity.is_finite() || !(weight >= 0.0) {
            return Err(Error::Domain(format!("invalid calibration sample ({inv_depth}, {disparity}, {weight})")));
        }
        Ok(Self { inv_depth, disparity, weight })
    }

    pub fn unweighted(inv_depth: f64, disparity: f64) -> Result<Self> {
        Self::new(inv_depth, disparity, 1.0)
    }
}

/// Weighted least-squares fit of `d = A + B·(1/Z)` and recovery of g, L, α.
pub fn fit_affine(samples: &[CalibSample], f: f64, n: f64, pixel_pitch: f64) -> Result<DpCalibration> {
    for s in samples {
        CalibSample::new(s.inv_depth, s.disparity, s.weight)?;
    }
    if !(f > 0.0 && n > 0.0 && pixel_pitch > 0.0) {
        return Err(Error::Domain("fit_affine: f, N and pitch must be positive".into()));
    }
    let sw: f64 = samples.iter().map(|s| s.weight).sum();
    if samples.len() < 2 || !(sw > 0.0) {
        return Err(Error::DegenerateFit(format!("need ≥ 2 weighted samples, got {}", samples.len())));
    }
    let mx = samples.iter().map(|s| s.weight * s.inv_depth).sum::<f64>() / sw;
    let my = samples.iter().map(|s| s.weight * s.disparity).sum::<f64>() / sw;
    let sxx: f64 = samples.iter().map(|s| s.weight * (s.inv_depth - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| s.weight * (s.inv_depth - mx) * (s.disparity - my)).sum();
    if !(sxx > 1e-300) || sxx <= 1e-14 * sw * mx * mx {
        return Err(Error::DegenerateFit("all samples share one inverse depth".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    if b == 0.0 {
        return Err(Error::DegenerateFit("fitted slope is zero".into()));
    }
    let residual_rms =
        (samples.iter().map(|s| s.weight * (s.disparity - a - b * s.inv_depth).powi(2)).sum::<f64>() / sw).sqrt();

    let g = -b / a;
    if !(g.is_finite() && g > f) {
        return Err(Error::InconsistentOptics(format!("recovered focus distance {g} does not exceed f = {f}")));
    }
    let aperture = f / n;
    // B = −α·L·f/(1 − f/g)/pitch; a sign-flipped convention shows up as α < 0
    let alpha = -b * pixel_pitch * (1.0 - f / g) / (aperture * f);
    let c = DpCalibration {
        a,
        b,
        focal_length: f,
        f_number: n,
        focus_distance: g,
        aperture,
        alpha,
        pixel_pitch,
        residual_rms,
    };
    c.validate()?;
    Ok(c)
}

/// `Z = B/(d − A)`; pixels within `eps_div` of the pole (or mapping to Z ≤ 0)
/// are masked. Returns the map and the number of newly masked pixels.
pub fn disparity_to_depth_eps(d: &DisparityMap, calib: &DpCalibration, eps_div: f64) -> Result<(DepthMap, usize)> {
    let mut masked = 0;
    let mut z = Vec::with_capacity(d.d().len());
    let mut mask = Vec::with_capacity(d.d().len());
    for (&v, &m) in d.d().iter().zip(d.mask()) {
        if !m {
            z.push(0.0);
            mask.push(false);
            continue;
        }
        let denom = v - calib.a;
        let depth = calib.b / denom;
        if denom.abs() < eps_div || !(depth > 0.0 && depth.is_finite()) {
            masked += 1;
            z.push(0.0);
            mask.push(false);
        } else {
            z.push(depth);
            mask.push(true);
        }
    }
    Ok((DepthMap::new(d.width(), d.height(), z, mask)?, masked))
}

pub fn disparity_to_depth(d: &DisparityMap, calib: &DpCalibration) -> Result<(DepthMap, usize)> {
    disparity_to_depth_eps(d, calib, DEFAULT_EPS_DIV)
}

/// `d = A + B/Z` on every valid pixel.
pub fn depth_to_disparity(z: &DepthMap, calib: &DpCalibration) -> Result<DisparityMap> {
    let d = z.z().iter().zip(z.mask()).map(|(&v, &m)| if m { calib.disparity_at(v) } else { 0.0 }).collect();
    DisparityMap::new(z.width(), z.height(), d, z.mask().to_vec())
}

/// Sub-pixel saddle (X-corner) location from a least-squares quadratic
/// surface fit over a `window`×`window` patch centered on `initial`.
pub fn refine_saddle(img: &ImageF, initial: (f64, f64), window: usize) -> Result<(f64, f64)> {
    if window < 5 {
        return Err(Error::Domain(format!("saddle window must be ≥ 5 px, got {window}")));
    }
    let half = (window / 2) as i64;
    let (cx, cy) = (initial.0.round() as i64, initial.1.round() as i64);
    if cx - half < 0 || cy - half < 0 || cx + half >= img.width() as i64 || cy + half >= img.height() as i64 {
        return Err(Error::Domain("saddle window extends past the image".into()));
    }
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    for dy in -half..=half {
        for dx in -half..=half {
            let (x, y) = (dx as f64, dy as f64);
            let row = Vector6::new(1.0, x, y, x * x, x * y, y * y);
            let v = img.get((cx + dx) as usize, (cy + dy) as usize);
            ata += row * row.transpose();
            atb += row * v;
        }
    }
    let coef = ata.cholesky().ok_or(Error::DegenerateFit("quadratic design is singular".into()))?.solve(&atb);
    let (gx, gy, cxx, cxy, cyy) = (coef[1], coef[2], coef[3], coef[4], coef[5]);
    // Hessian [[2cxx, cxy], [cxy, 2cyy]]
    let det = 4.0 * cxx * cyy - cxy * cxy;
    let scale = (4.0 * cxx * cxx + 2.0 * cxy * cxy + 4.0 * cyy * cyy).max(1e-300);
    if det >= -1e-12 * scale {
        return Err(Error::NotASaddle);
    }
    let h = nalgebra::Matrix2::new(2.0 * cxx, cxy, cxy, 2.0 * cyy);
    let p = h.try_inverse().ok_or(Error::NotASaddle)? * -Vector2::new(gx, gy);
    if p.x.abs() > half as f64 || p.y.abs() > half as f64 {
        return Err(Error::Diverged { x: cx as f64 + p.x, y: cy as f64 + p.y });
    }
    Ok((cx as f64 + p.x, cy as f64 + p.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn line_samples(a: f64, b: f64, inv: &[f64]) -> Vec<CalibSample> {
        inv.iter().map(|&x| CalibSample::unweighted(x, a + b * x).unwrap()).collect()
    }

    #[test]
    fn noiseless_line_recovered() {
        let o = OpticsConfig::dataset_preset();
        let truth = DpCalibration::from_optics(&o).unwrap();
        let inv: Vec<f64> = (0..12).map(|i| 1.0 / (0.8 + 0.025 * i as f64)).collect();
        let c = fit_affine(&line_samples(truth.a(), truth.b(), &inv), 0.135, 5.6, o.pixel_pitch).unwrap();
        assert!(rel_close(c.a(), truth.a()) && rel_close(c.b(), truth.b()));
        assert!((c.focus_distance() - 0.97).abs() <= 1e-9 * 0.97);
        assert!((c.alpha() - o.alpha).abs() <= 1e-9 * o.alpha);
        assert!(c.residual_rms() < 1e-12);
    }

    #[test]
    fn two_samples_give_exact_line() {
        let s = [CalibSample::unweighted(1.0, 10.0).unwrap(), CalibSample::unweighted(1.25, 5.0).unwrap()];
        let c = fit_affine(&s, 0.135, 5.6, 1e-5).unwrap();
        assert!((c.b() + 20.0).abs() < 1e-12 && (c.a() - 30.0).abs() < 1e-12);
        assert!((c.focus_distance() - 20.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_inconsistent_inputs() {
        let same = line_samples(1.0, -1.0, &[1.0, 1.0, 1.0]);
        assert!(matches!(fit_affine(&same, 0.135, 5.6, 1e-5), Err(Error::DegenerateFit(_))));
        // g = −B/A = 0.1 < f
        let near = line_samples(10.0, -1.0, &[1.0, 2.0]);
        assert!(matches!(fit_affine(&near, 0.135, 5.6, 1e-5), Err(Error::InconsistentOptics(_))));
    }

    #[test]
    fn fit_is_equivariant_under_disparity_scaling() {
        let s: Vec<CalibSample> = [(1.0, 3.0), (1.1, 1.7), (1.2, 0.2), (1.3, -1.1)]
            .iter()
            .map(|&(x, y)| CalibSample::unweighted(x, y).unwrap())
            .collect();
        let k = 4.0;
        let scaled: Vec<CalibSample> = s.iter().map(|c| CalibSample { disparity: k * c.disparity, ..*c }).collect();
        let c1 = fit_affine(&s, 0.135, 5.6, 1e-5).unwrap();
        let c2 = fit_affine(&scaled, 0.135, 5.6, 1e-5).unwrap();
        assert_eq!(c2.a(), k * c1.a());
        assert_eq!(c2.b(), k * c1.b());
    }

    #[test]
    fn noisy_focus_distance_within_one_percent() {
        // 20 depths across the working range, σ = 0.05 px, 200 seeds
        let o = OpticsConfig::dataset_preset();
        let normal = Normal::new(0.0, 0.05).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<CalibSample> = (0..20)
                .map(|i| {
                    let z = 0.8 + 0.3 * i as f64 / 19.0;
                    CalibSample::unweighted(1.0 / z, o.blur_px(z) + normal.sample(&mut rng)).unwrap()
                })
                .collect();
            let c = fit_affine(&s, 0.135, 5.6, o.pixel_pitch).unwrap();
            worst = worst.max((c.focus_distance() - 0.97).abs() / 0.97);
        }
        assert!(worst <= 0.01, "worst relative g error {worst}");
    }

    #[test]
    fn conversions_invert_each_other() {
        let c = DpCalibration::from_optics(&OpticsConfig::dataset_preset()).unwrap();
        let one = DisparityMap::dense(1, 1, vec![c.a() + c.b() / 1.0]).unwrap();
        let (z, masked) = disparity_to_depth(&one, &c).unwrap();
        assert!((z.z()[0] - 1.0).abs() < 1e-12 && masked == 0);

        let pole = DisparityMap::dense(2, 1, vec![c.a(), 1.0]).unwrap();
        let (z, masked) = disparity_to_depth(&pole, &c).unwrap();
        assert_eq!((z.mask(), masked), (&[false, true][..], 1));

        let depth = DepthMap::dense(3, 1, vec![0.8, 0.97, 1.1]).unwrap();
        let d = depth_to_disparity(&depth, &c).unwrap();
        assert!(d.d()[1].abs() < 1e-12);
        let (back, _) = disparity_to_depth(&d, &c).unwrap();
        for (a, b) in back.z().iter().zip(depth.z()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn json_keeps_fields_and_validates() {
        let c = DpCalibration::from_optics(&OpticsConfig::default()).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        for key in ["\"A\"", "\"B\"", "\"f\"", "\"N\"", "\"g\"", "\"L\"", "\"alpha\"", "\"pixel_pitch\"", "\"residual_rms\""] {
            assert!(s.contains(key), "{key} missing in {s}");
        }
        assert_eq!(serde_json::from_str::<DpCalibration>(&s).unwrap(), c);
        let broken = s.replace("\"g\":0.97", "\"g\":1.5");
        assert!(serde_json::from_str::<DpCalibration>(&broken).is_err());
    }

    fn saddle_image(x0: f64, y0: f64, sigma: f64, seed: u64) -> ImageF {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        ImageF::from_fn(21, 21, |x, y| {
            let v = (x as f64 - x0) * (y as f64 - y0);
            if sigma > 0.0 {
                v + normal.sample(&mut rng)
            } else {
                v
            }
        })
        .unwrap()
    }

    #[test]
    fn exact_saddle_located() {
        let img = saddle_image(10.3, 9.6, 0.0, 0);
        let (x, y) = refine_saddle(&img, (10.0, 10.0), 7).unwrap();
        assert!((x - 10.3).abs() < 1e-6 && (y - 9.6).abs() < 1e-6);
    }

    #[test]
    fn noisy_saddle_within_a_tenth_pixel() {
        // window 9 spans values in [−16, 16]; σ = 1 % of that range
        let sigma = 0.01 * 32.0;
        for seed in 0..100 {
            let img = saddle_image(10.3, 9.6, sigma, seed);
            let (x, y) = refine_saddle(&img, (10.0, 10.0), 9).unwrap();
            assert!((x - 10.3).abs() < 0.1 && (y - 9.6).abs() < 0.1, "seed {seed}: ({x}, {y})");
        }
    }

    #[test]
    fn paraboloid_is_not_a_saddle() {
        let img = ImageF::from_fn(15, 15, |x, y| (x as f64 - 7.0).powi(2) + (y as f64 - 7.0).powi(2)).unwrap();
        assert!(matches!(refine_saddle(&img, (7.0, 7.0), 7), Err(Error::NotASaddle)));
    }

    #[test]
    fn far_saddle_diverges() {
        let img = saddle_image(18.0, 3.0, 0.0, 0);
        assert!(matches!(refine_saddle(&img, (10.0, 10.0), 5), Err(Error::Diverged { .. })));
        assert!(matches!(refine_saddle(&img, (1.0, 10.0), 5), Err(Error::Domain(_))));
    }
}
