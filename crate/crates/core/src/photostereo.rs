//! Chrome-ball light calibration and Lambertian photometric stereo.
//!
//! Light directions and normals share the normal frame documented on
//! [`NormalMap`]: x right, y down, z toward the viewer.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot3, normalize3, ImageF, NormalMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChromeBall {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl ChromeBall {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::Domain(format!("chrome ball needs a finite center and positive radius, got r = {radius}")));
        }
        Ok(Self { cx, cy, radius })
    }
}

/// Mirror reflection of the view vector R = (0, 0, 1) about the ball normal at `h`.
pub fn light_from_highlight(ball: &ChromeBall, hx: f64, hy: f64) -> Result<[f64; 3]> {
    let nx = hx - ball.cx;
    let ny = hy - ball.cy;
    let r2 = ball.radius * ball.radius;
    let rho2 = nx * nx + ny * ny;
    if !(rho2 <= r2 * (1.0 + 1e-12)) {
        return Err(Error::OutOfBall { hx, hy });
    }
    let n = Vector3::new(nx, ny, (r2 - rho2).max(0.0).sqrt()) / ball.radius;
    let view = Vector3::z();
    let l = 2.0 * n.dot(&view) * n - view;
    let l = l.normalize();
    Ok([l.x, l.y, l.z])
}

/// Unit light directions, in the normal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LightRecord", into = "LightRecord")]
pub struct LightSet {
    directions: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct LightRecord {
    directions: Vec<[f64; 3]>,
}

impl TryFrom<LightRecord> for LightSet {
    type Error = Error;
    fn try_from(r: LightRecord) -> Result<Self> {
        LightSet::new(r.directions)
    }
}

impl From<LightSet> for LightRecord {
    fn from(l: LightSet) -> Self {
        LightRecord { directions: l.directions }
    }
}

impl LightSet {
    /// Directions must already be unit length within 1e-9.
    pub fn new(directions: Vec<[f64; 3]>) -> Result<Self> {
        for (i, d) in directions.iter().enumerate() {
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !((len - 1.0).abs() <= 1e-9) {
                return Err(Error::Domain(format!("light {i} has length {len}, expected unit")));
            }
        }
        Ok(Self { directions })
    }

    /// Normalises every direction first; zero vectors are rejected.
    pub fn normalized(directions: Vec<[f64; 3]>) -> Result<Self> {
        let dirs = directions
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                normalize3(d).ok_or_else(|| Error::Domain(format!("light {i} is a zero vector")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dirs)
    }

    pub fn from_highlights(ball: &ChromeBall, highlights: &[(f64, f64)]) -> Result<Self> {
        let dirs = highlights.iter().map(|&(x, y)| light_from_highlight(ball, x, y)).collect::<Result<Vec<_>>>()?;
        Self::new(dirs)
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Numerical rank of the stacked direction matrix.
    pub fn rank(&self) -> usize {
        let gram = gram(self.directions.iter());
        let eig = SymmetricEigen::new(gram).eigenvalues;
        let top = eig.max();
        if top <= 0.0 {
            return 0;
        }
        eig.iter().filter(|&&e| e > 1e-12 * top).count()
    }
}

fn gram<'a>(rows: impl Iterator<Item = &'a [f64; 3]>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for l in rows {
        let v = Vector3::from(*l);
        m += v * v.transpose();
    }
    m
}

/// Rows are dropped when the intensity falls outside
/// `[min + low·range, min + high·range]`, where min and range are taken over
/// the whole image stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for ShadowThresholds {
    fn default() -> Self {
        Self { low: 0.05, high: 0.98 }
    }
}

impl ShadowThresholds {
    /// Keeps every observation.
    pub fn none() -> Self {
        Self { low: f64::NEG_INFINITY, high: f64::INFINITY }
    }
}

/// Per-pixel least squares of I = L·(ρN) over the non-shadowed rows.
/// Returns unit normals and albedo; pixels with fewer than three usable rows
/// or a rank-deficient light submatrix are masked.
pub fn solve_normals(images: &[ImageF], lights: &LightSet, thresholds: ShadowThresholds) -> Result<(NormalMap, ImageF)> {
    if images.len() < 3 {
        return Err(Error::EmptyInput(format!("photometric stereo needs ≥ 3 images, got {}", images.len())));
    }
    if images.len() != lights.len() {
        return Err(Error::Shape(format!("{} images but {} lights", images.len(), lights.len())));
    }
    let rank = lights.rank();
    if rank < 3 {
        return Err(Error::DegenerateLights(rank));
    }
    let (w, h) = (images[0].width(), images[0].height());
    if images.iter().any(|i| i.width() != w || i.height() != h) {
        return Err(Error::Shape("photometric stereo images differ in size".into()));
    }
    let gray: Vec<ImageF> = images.iter().map(ImageF::to_gray).collect();
    let (lo, hi) = gray
        .iter()
        .flat_map(|g| g.data().iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let (t_lo, t_hi) = (lo + thresholds.low * range, lo + thresholds.high * range);
    let dirs = lights.directions();

    let solved: Vec<Option<([f64; 3], f64)>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let mut ata = Matrix3::zeros();
            let mut atb = Vector3::zeros();
            let mut rows = 0;
            for (g, l) in gray.iter().zip(dirs) {
                let v = g.data()[i];
                let keep = if thresholds.low == f64::NEG_INFINITY { true } else { v > t_lo };
                let keep = keep && (thresholds.high == f64::INFINITY || v < t_hi);
                if !keep {
                    continue;
                }
                let lv = Vector3::from(*l);
                ata += lv * lv.transpose();
                atb += lv * v;
                rows += 1;
            }
            if rows < 3 {
                return None;
            }
            let eig = SymmetricEigen::new(ata).eigenvalues;
            if eig.min() <= 1e-10 * eig.max() {
                return None;
            }
            let g = ata.cholesky()?.solve(&atb);
            let rho = g.norm();
            if !(rho > 0.0 && rho.is_finite()) {
                return None;
            }
            let n = g / rho;
            Some(([n.x, n.y, n.z], rho))
        })
        .collect();

    let mut normals = vec![[0.0; 3]; w * h];
    let mut mask = vec![false; w * h];
    let mut albedo = vec![0.0; w * h];
    for (i, s) in solved.into_iter().enumerate() {
        if let Some((n, rho)) = s {
            normals[i] = n;
            albedo[i] = rho;
            mask[i] = true;
        }
    }
    Ok((NormalMap::new(w, h, normals, mask)?, ImageF::gray(w, h, albedo)?))
}

/// Lambertian rendering ρ·max(0, L·N) for each light; masked pixels are black.
pub fn render_lambertian(normals: &NormalMap, albedo: &ImageF, lights: &LightSet) -> Result<Vec<ImageF>> {
    if albedo.width() != normals.width() || albedo.height() != normals.height() {
        return Err(Error::Shape("albedo and normal map differ in size".into()));
    }
    let (w, h) = (normals.width(), normals.height());
    lights
        .directions()
        .iter()
        .map(|l| {
            let data = (0..w * h)
                .map(|i| {
                    if !normals.mask()[i] {
                        return 0.0;
                    }
                    albedo.data()[i] * dot3(l, &normals.n()[i]).max(0.0)
                })
                .collect();
            ImageF::gray(w, h, data)
        })
        .collect()
}
