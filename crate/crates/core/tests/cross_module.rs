//! Round trips that cross module boundaries.

use dualpix::dpcalib::{disparity_to_depth, fit_affine, DpCalibration};
use dualpix::dpsim::{make_test_scene, render_dp, signed_blur, OpticsConfig, SceneKind, SceneParams};
use dualpix::geom::io::pfm;
use dualpix::geom::{back_project, project, DepthMap, ImageF, PinholeCamera};
use dualpix::matcher::normals_from_depth;
use dualpix::metrics::{depth_metrics, normal_metrics};
use dualpix::photostereo::{render_lambertian, solve_normals, LightSet, ShadowThresholds};
use dualpix::pipeline::{calibration_sweep, run, write_outputs, PipelineConfig};
use dualpix::refine::{refine_depth, RefineConfig};
use dualpix::slight::{decode_axis, render_captures, triangulate, Orientation, PatternSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sphere() -> SceneParams {
    SceneParams {
        kind: SceneKind::Sphere { center: [0.0, 0.0, 1.0], radius: 0.2, background: None },
        width: 64,
        height: 64,
        focal_px: 100.0,
        texture_seed: 0,
    }
}

#[test]
fn signed_blur_inverts_through_calibration() {
    let optics = OpticsConfig::dataset_preset();
    let (_, depth, _) = make_test_scene(&SceneParams::sphere_default(48, 48)).unwrap();
    let calib = DpCalibration::from_optics(&optics).unwrap();
    let (z, masked) = disparity_to_depth(&signed_blur(&depth, &optics).unwrap(), &calib).unwrap();
    assert_eq!(masked, 0);
    for (a, b) in z.z().iter().zip(depth.z()) {
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }
}

#[test]
fn sweep_fit_matches_analytic_calibration() {
    let optics = OpticsConfig::dataset_preset().downsampled(4.0);
    let samples = calibration_sweep(&optics, &Default::default()).unwrap();
    let fit = fit_affine(&samples, optics.focal_length, optics.f_number, optics.pixel_pitch).unwrap();
    let exact = DpCalibration::from_optics(&optics).unwrap();
    assert!((fit.a() - exact.a()).abs() <= 1e-9 * exact.a().abs());
    assert!((fit.b() - exact.b()).abs() <= 1e-9 * exact.b().abs());
    assert!((fit.alpha() - optics.alpha).abs() <= 1e-9 * optics.alpha);
}

#[test]
fn in_focus_scene_renders_identical_views() {
    let optics = OpticsConfig::default();
    let p = SceneParams::plane_default(32, 32, optics.focus_distance);
    let (rgb, depth, _) = make_test_scene(&p).unwrap();
    let pair = render_dp(&rgb, &depth, &optics).unwrap();
    assert_eq!(pair.left(), &rgb);
    assert_eq!(pair.right(), &rgb);
}

#[test]
fn structured_light_depth_gives_plane_normals() {
    let cfg = PatternSet::standard(512, 512);
    let scene =
        SceneParams { kind: SceneKind::SlantedPlane { z0: 1.0, slope_x: 0.15, slope_y: 0.0 }, focal_px: 200.0, ..sphere() };
    let (_, truth, gt_normals) = make_test_scene(&scene).unwrap();
    let cam = scene.camera().unwrap();
    let proj =
        PinholeCamera::look_at(600.0, 600.0, 255.5, 255.5, [0.15, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]).unwrap();
    let caps = render_captures(&cfg, &truth, &cam, &proj, 0.05, 0.9).unwrap();
    let depth = triangulate(&decode_axis(&caps, &cfg, Orientation::Horizontal).unwrap(), &cam, &proj).unwrap();
    let report = depth_metrics(&depth, &truth, 1.01).unwrap();
    assert!(report.get("rmse").unwrap() < 1e-4);
    let normals = normals_from_depth(&depth, &cam, 5).unwrap();
    assert!(normal_metrics(&normals, &gt_normals).unwrap().get("mae_deg").unwrap() < 0.1);
}

#[test]
fn photometric_normals_drive_refinement() {
    let p = sphere();
    let (_, depth, normals) = make_test_scene(&p).unwrap();
    let cam = p.camera().unwrap();
    let lights = LightSet::normalized(
        (0..6)
            .map(|k| {
                let az = k as f64 * std::f64::consts::TAU / 6.0;
                [0.4 * az.cos(), 0.4 * az.sin(), 1.0]
            })
            .collect(),
    )
    .unwrap();
    let imgs = render_lambertian(&normals, &ImageF::constant(64, 64, 0.6).unwrap(), &lights).unwrap();
    let (ps, _) = solve_normals(&imgs, &lights, ShadowThresholds::default()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Normal::new(0.0, 0.002).unwrap();
    let mask: Vec<bool> = depth.mask().iter().zip(ps.mask()).map(|(a, b)| *a && *b).collect();
    let z: Vec<f64> = depth.z().iter().map(|z| z + g.sample(&mut rng)).collect();
    let noisy = DepthMap::new(64, 64, z, mask).unwrap();
    let refined = refine_depth(&noisy, &ps, &cam, &RefineConfig::new(0.1)).unwrap();
    let before = depth_metrics(&noisy, &depth, 1.01).unwrap().get("rmse").unwrap();
    let after = depth_metrics(&refined.depth, &depth, 1.01).unwrap().get("rmse").unwrap();
    assert!(after < 0.6 * before, "{after} vs {before}");
}

#[test]
fn back_projection_survives_reprojection() {
    let p = sphere();
    let (_, depth, _) = make_test_scene(&p).unwrap();
    let cam = p.camera().unwrap();
    let cloud = back_project(&depth, &cam).unwrap();
    let again = project(&cloud, &cam, 64, 64).unwrap();
    assert_eq!(again.mask(), depth.mask());
    for (a, b) in again.z().iter().zip(depth.z()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn pipeline_outputs_read_back() {
    let cfg = PipelineConfig { scene: SceneParams::sphere_default(48, 48), ..PipelineConfig::default() };
    let out = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&out, dir.path()).unwrap();
    let disp = pfm::read_disparity(dir.path().join("disp.pfm"), true).unwrap();
    assert_eq!(disp.mask(), out.disparity.mask());
    for (a, b) in disp.d().iter().zip(out.disparity.d()) {
        assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    for section in ["disparity", "depth", "normal", "refined", "calibration", "refine"] {
        assert!(report.get(section).is_some(), "{section}");
    }
}
