//! Multi-view outlier filtering and normal-guided depth refinement.
//!
//! Refinement minimises
//! E = λ Σ‖X_p − X_p^m‖² + (1−λ) Σ ([T_x·N_p]² + [T_y·N_p]²)
//! with X_p = z_p·r_p along the fixed pixel ray, so the only unknown per pixel
//! is its depth and the whole problem is one sparse linear least-squares solve.

mod consistency;
pub mod solver;

pub use consistency::{filter_points, ConsistencyConfig, View};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DepthMap, NormalMap, PinholeCamera};
use solver::{pcg_normal, SparseRows};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_iters() -> usize {
    2000
}

impl RefineConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, solver_tol: default_tol(), max_iters: default_iters() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Domain(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::Domain(format!("solver_tol must be positive, got {}", self.solver_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub depth: DepthMap,
    pub energy_before: f64,
    pub energy_after: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// Pixels masked because the solve drove their depth to ≤ 0.
    pub nonpositive: usize,
}

struct Problem {
    sys: SparseRows,
    /// Valid pixel index for each unknown.
    pixels: Vec<usize>,
}

fn build(depth: &DepthMap, normals: &NormalMap, cam: &PinholeCamera, lambda: f64) -> Problem {
    let (w, h) = (depth.width(), depth.height());
    let mask = depth.mask();
    let mut unknown = vec![usize::MAX; w * h];
    let mut pixels = Vec::with_capacity(depth.valid_count());
    for (i, &m) in mask.iter().enumerate() {
        if m {
            unknown[i] = pixels.len();
            pixels.push(i);
        }
    }
    let ray = |i: usize| {
        let r = cam.ray((i % w) as f64, (i / w) as f64);
        [r.x, r.y, r.z]
    };
    let mut sys = SparseRows::new(pixels.len());
    let wd = lambda.sqrt();
    let wn = (1.0 - lambda).sqrt();
    for (k, &i) in pixels.iter().enumerate() {
        let r = ray(i);
        let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if wd > 0.0 {
            sys.push(&[(k, wd * rn)], wd * rn * depth.z()[i]);
        }
        if wn == 0.0 {
            continue;
        }
        // stored normals mirror z; the geometric normal in the camera frame flips it back
        let ns = normals.n()[i];
        let n = [ns[0], ns[1], -ns[2]];
        let (x, y) = (i % w, i / w);
        let neighbours = [
            (x + 1 < w).then(|| i + 1),
            (x > 0).then(|| i - 1),
            (y + 1 < h).then(|| i + w),
            (y > 0).then(|| i - w),
        ];
        for axis in 0..2 {
            let fwd = neighbours[2 * axis].filter(|&j| mask[j]);
            let bwd = neighbours[2 * axis + 1].filter(|&j| mask[j]);
            let (a, b) = match (fwd, bwd) {
                (Some(j), _) => (i, j),
                (None, Some(j)) => (j, i),
                (None, None) => continue,
            };
            // T = X_b − X_a, residual N·T
            let (ra, rb) = (ray(a), ray(b));
            let ca = -(n[0] * ra[0] + n[1] * ra[1] + n[2] * ra[2]);
            let cb = n[0] * rb[0] + n[1] * rb[1] + n[2] * rb[2];
            sys.push(&[(unknown[a], wn * ca), (unknown[b], wn * cb)], 0.0);
        }
    }
    Problem { sys, pixels }
}

/// Energy E of `depth` under the refinement objective, measured against `measured`.
pub fn refine_energy(depth: &DepthMap, measured: &DepthMap, normals: &NormalMap, cam: &PinholeCamera, lambda: f64) -> Result<f64> {
    check_inputs(measured, normals)?;
    if depth.mask() != measured.mask() {
        return Err(Error::Shape("energy: depth and measurement masks differ".into()));
    }
    let p = build(measured, normals, cam, lambda);
    let z: Vec<f64> = p.pixels.iter().map(|&i| depth.z()[i]).collect();
    Ok(p.sys.objective(&z))
}

fn check_inputs(depth: &DepthMap, normals: &NormalMap) -> Result<()> {
    if depth.width() != normals.width() || depth.height() != normals.height() {
        return Err(Error::Shape("depth and normal maps differ in size".into()));
    }
    if depth.mask() != normals.mask() {
        return Err(Error::Shape("depth and normal masks differ".into()));
    }
    Ok(())
}

pub fn refine_depth(depth: &DepthMap, normals: &NormalMap, cam: &PinholeCamera, cfg: &RefineConfig) -> Result<RefineResult> {
    cfg.validate()?;
    check_inputs(depth, normals)?;
    if depth.valid_count() == 0 {
        return Err(Error::EmptyInput("refine: depth map has no valid pixel".into()));
    }
    let p = build(depth, normals, cam, cfg.lambda);
    let z0: Vec<f64> = p.pixels.iter().map(|&i| depth.z()[i]).collect();
    let e0 = p.sys.objective(&z0);
    if cfg.lambda == 1.0 {
        return Ok(RefineResult {
            depth: depth.clone(),
            energy_before: e0,
            energy_after: e0,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
            nonpositive: 0,
        });
    }
    let mut z = z0.clone();
    let stats = pcg_normal(&p.sys, &mut z, cfg.solver_tol, cfg.max_iters);
    let mut e1 = p.sys.objective(&z);
    if !(e1 <= e0) {
        z = z0;
        e1 = e0;
    }
    let mut out = depth.z().to_vec();
    let mut mask = depth.mask().to_vec();
    let mut nonpositive = 0;
    for (k, &i) in p.pixels.iter().enumerate() {
        if z[k] > 0.0 && z[k].is_finite() {
            out[i] = z[k];
        } else {
            mask[i] = false;
            nonpositive += 1;
        }
    }
    Ok(RefineResult {
        depth: DepthMap::new(depth.width(), depth.height(), out, mask)?,
        energy_before: e0,
        energy_after: e1,
        iterations: stats.iterations,
        relative_residual: stats.relative_residual,
        converged: stats.converged,
        nonpositive,
    })
}
