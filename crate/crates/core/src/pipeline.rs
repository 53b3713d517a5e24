//! End-to-end synthetic run: scene → DP pair → matching → calibration →
//! depth → normals → refinement, scored against the scene's exact maps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dpcalib::{disparity_to_depth, fit_affine, CalibSample};
use crate::dpsim::{add_gaussian_noise, make_test_scene, render_dp, signed_blur, OpticsConfig, SceneParams};
use crate::error::{Error, Result};
use crate::geom::io::{pfm, write_json};
use crate::geom::{DepthMap, DisparityMap, NormalMap};
use crate::matcher::{match_pair, normals_from_depth, DisparityLabels, MatchConfig};
use crate::metrics::{depth_metrics, disparity_metrics, normal_metrics, with_affine, MetricReport};
use crate::refine::{refine_depth, RefineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub scene: SceneParams,
    pub optics: OpticsConfig,
    #[serde(default)]
    pub labels: DisparityLabels,
    #[serde(rename = "match", default)]
    pub matching: MatchConfig,
    pub refine: RefineConfig,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of additive noise on both views.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_neighborhood")]
    pub normal_neighborhood: usize,
    /// Ratio threshold for the δ metrics.
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_neighborhood() -> usize {
    5
}

fn default_tau() -> f64 {
    1.01
}

impl Default for PipelineConfig {
    /// A face-sized sphere at 128² with the dataset optics seen at quarter resolution.
    fn default() -> Self {
        Self {
            scene: SceneParams::sphere_default(128, 128),
            optics: OpticsConfig::dataset_preset().downsampled(4.0),
            labels: DisparityLabels::default(),
            matching: MatchConfig { window: 15, aggregate_radius: 3, ..MatchConfig::default() },
            refine: RefineConfig::new(0.1),
            seed: 0,
            noise_sigma: 0.0,
            normal_neighborhood: default_neighborhood(),
            tau: default_tau(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.optics.validate()?;
        self.matching.validate()?;
        self.refine.validate()?;
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Domain(format!("noise_sigma must be ≥ 0, got {}", self.noise_sigma)));
        }
        if !(self.tau > 1.0) {
            return Err(Error::Domain(format!("tau must exceed 1, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub a: f64,
    pub b: f64,
    pub focus_distance: f64,
    pub focus_distance_true: f64,
    pub focus_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSummary {
    pub energy_before: f64,
    pub energy_after: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub disparity: MetricReport,
    pub depth: MetricReport,
    pub normal: MetricReport,
    pub refined: MetricReport,
    pub calibration: CalibrationSummary,
    pub refine: RefineSummary,
    /// Matched pixels lost when converting disparity to depth.
    pub masked_by_conversion: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub disparity: DisparityMap,
    pub depth: DepthMap,
    pub normals: NormalMap,
    pub refined: DepthMap,
    pub report: PipelineReport,
}

/// Noiseless calibration samples from a target placed at the depth of every
/// disparity label the model can reach.
pub fn calibration_sweep(optics: &OpticsConfig, labels: &DisparityLabels) -> Result<Vec<CalibSample>> {
    optics.validate()?;
    labels
        .labels()
        .into_iter()
        .map(|d| optics.depth_for_disparity(d))
        .filter(|z| z.is_finite() && *z > 0.0)
        .map(|z| CalibSample::unweighted(1.0 / z, optics.blur_px(z)))
        .collect()
}

fn restrict(depth: &DepthMap, mask: &[bool]) -> Result<DepthMap> {
    let m: Vec<bool> = depth.mask().iter().zip(mask).map(|(a, b)| *a && *b).collect();
    DepthMap::new(depth.width(), depth.height(), depth.z().to_vec(), m)
}

pub fn run(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (rgb, gt_depth, gt_normals) = make_test_scene(&cfg.scene)?;
    let cam = cfg.scene.camera()?;
    let pair = render_dp(&rgb, &gt_depth, &cfg.optics)?;
    let (mut left, mut right) = (pair.left().to_gray(), pair.right().to_gray());
    if cfg.noise_sigma > 0.0 {
        left = add_gaussian_noise(&left, cfg.noise_sigma, cfg.seed)?;
        right = add_gaussian_noise(&right, cfg.noise_sigma, cfg.seed.wrapping_add(1))?;
    }
    let gt_disp = signed_blur(&gt_depth, &cfg.optics)?;

    let disparity = match_pair(&left, &right, &cfg.labels, &cfg.matching)?;

    let o = &cfg.optics;
    let samples = calibration_sweep(o, &cfg.labels)?;
    let calib = fit_affine(&samples, o.focal_length, o.f_number, o.pixel_pitch)?;

    let (depth, masked_by_conversion) = disparity_to_depth(&disparity, &calib)?;
    let normals = normals_from_depth(&depth, &cam, cfg.normal_neighborhood)?;
    let depth_n = restrict(&depth, normals.mask())?;
    let refined = refine_depth(&depth_n, &normals, &cam, &cfg.refine)?;

    let report = PipelineReport {
        disparity: with_affine(disparity_metrics(&disparity, &gt_disp)?, &disparity, &gt_disp)?,
        depth: with_affine(depth_metrics(&depth, &gt_depth, cfg.tau)?, &depth, &gt_depth)?,
        normal: normal_metrics(&normals, &gt_normals)?,
        refined: depth_metrics(&refined.depth, &gt_depth, cfg.tau)?,
        calibration: CalibrationSummary {
            a: calib.a(),
            b: calib.b(),
            focus_distance: calib.focus_distance(),
            focus_distance_true: o.focus_distance,
            focus_relative_error: (calib.focus_distance() - o.focus_distance).abs() / o.focus_distance,
        },
        refine: RefineSummary {
            energy_before: refined.energy_before,
            energy_after: refined.energy_after,
            iterations: refined.iterations,
            converged: refined.converged,
        },
        masked_by_conversion,
    };
    Ok(PipelineOutput { disparity, depth, normals, refined: refined.depth, report })
}

/// Writes disp.pfm, depth.pfm, normal.pfm, refined.pfm and report.json into `dir`.
pub fn write_outputs(out: &PipelineOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    pfm::write_disparity(dir.join("disp.pfm"), &out.disparity)?;
    pfm::write_depth(dir.join("depth.pfm"), &out.depth)?;
    pfm::write_normals(dir.join("normal.pfm"), &out.normals)?;
    pfm::write_depth(dir.join("refined.pfm"), &out.refined)?;
    write_json(dir.join("report.json"), &out.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpsim::SceneKind;

    fn small() -> PipelineConfig {
        PipelineConfig {
            scene: SceneParams::sphere_default(64, 64),
            matching: MatchConfig { window: 9, aggregate_radius: 2, ..MatchConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"match\""));
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sphere_run_recovers_focus_and_reports_every_section() {
        let out = run(&small()).unwrap();
        let r = &out.report;
        assert!(r.calibration.focus_relative_error < 1e-9);
        assert!(r.refine.energy_after <= r.refine.energy_before);
        for key in ["rmse", "mae", "wmae", "wrmse"] {
            assert!(r.disparity.get(key).unwrap().is_finite(), "{key}");
        }
        assert!(r.depth.get("delta1").is_some());
        assert!(r.normal.get("mae_deg").unwrap() < 45.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = small();
        cfg.noise_sigma = 0.01;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.refined, b.refined);
    }

    #[test]
    fn fronto_parallel_plane_matches_closely() {
        let mut cfg = small();
        let z = cfg.optics.depth_for_disparity(2.0);
        cfg.scene = SceneParams::plane_default(64, 64, z);
        assert!(matches!(cfg.scene.kind, SceneKind::Plane { .. }));
        let out = run(&cfg).unwrap();
        assert!(out.report.disparity.get("mae").unwrap() < 0.25, "{:?}", out.report.disparity);
    }

    #[test]
    fn invalid_refine_lambda_is_rejected() {
        let mut cfg = small();
        cfg.refine.lambda = 2.0;
        assert!(matches!(run(&cfg), Err(Error::Domain(_))));
    }
}
