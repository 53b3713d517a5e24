use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dualpix::dpcalib::{disparity_to_depth, fit_affine, CalibSample, DpCalibration};
use dualpix::dpsim::{add_gaussian_noise, make_test_scene, render_dp, signed_blur, OpticsConfig, SceneKind, SceneParams};
use dualpix::geom::io::{pfm, pgm, ply, png16, read_json, write_json};
use dualpix::geom::{DepthMap, ImageF, NormalMap, PinholeCamera};
use dualpix::matcher::{match_pair, normals_from_depth, CostKind, DisparityLabels, MatchConfig, Sampling};
use dualpix::metrics::{depth_metrics, disparity_metrics, normal_metrics, with_affine};
use dualpix::photostereo::{solve_normals, ChromeBall, LightSet, ShadowThresholds};
use dualpix::pipeline::{calibration_sweep, run, write_outputs, PipelineConfig};
use dualpix::refine::{filter_points, refine_depth, ConsistencyConfig, RefineConfig, View};
use dualpix::slight::{decode_axis, generate_patterns, triangulate, Orientation, PatternSet};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (formats: pfm 1, ply 1, json 1)");

#[derive(Parser)]
#[command(name = "dualpix", version = VERSION, about = "Dual-pixel geometry toolkit")]
struct Cli {
    /// Worker threads; 0 picks the number of cores. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneArg {
    Plane,
    SlantedPlane,
    Sphere,
    Checkerboard,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Depth,
    Disparity,
    Normal,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic DP pair with its exact depth and normals.
    Simulate {
        /// JSON with `scene`, `optics`, and optional `noise_sigma` and `seed`; overrides the scene flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sphere")]
        scene: SceneArg,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Plane depth in meters (plane, slanted plane and checkerboard scenes).
        #[arg(long, default_value_t = 1.0)]
        depth: f64,
        /// Downsampling factor applied to the dataset optics.
        #[arg(long, default_value_t = 4.0)]
        downsample: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write samples.csv, a calibration sweep over the default label range.
        #[arg(long)]
        emit_samples: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit the affine inverse-depth/disparity model to CSV samples.
    Calibrate {
        /// Rows of inv_depth,disparity[,weight]; a header row is skipped.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        fnum: f64,
        #[arg(long)]
        pitch: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write the structured-light pattern stack and its patterns.json.
    SlGen {
        #[arg(long, default_value_t = 512)]
        proj_width: usize,
        #[arg(long, default_value_t = 512)]
        proj_height: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode a capture stack and triangulate depth.
    SlDecode {
        /// Captures in pattern order (sorted file names; pfm, png or pgm).
        #[arg(long)]
        captures: PathBuf,
        /// JSON with `camera` and `projector` records.
        #[arg(long)]
        rig: PathBuf,
        /// Defaults to patterns.json inside the capture directory.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Light directions from chrome-ball highlights.
    PsLights {
        /// Ball center and radius in pixels: cx,cy,r.
        #[arg(long, value_parser = parse_ball)]
        ball: ChromeBall,
        /// Rows of hx,hy, one per light.
        #[arg(long)]
        highlights: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Lambertian photometric stereo.
    PsSolve {
        /// One image per light, in light order (sorted file names).
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        lights: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        shadow: f64,
        #[arg(long, default_value_t = 0.98)]
        saturation: f64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        albedo: Option<PathBuf>,
    },
    /// Normal-guided depth refinement.
    Refine {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        normal: PathBuf,
        #[arg(long)]
        cam: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Multi-view consistency filter for a point cloud.
    Filter {
        #[arg(long)]
        cloud: PathBuf,
        /// Directory of cam_<k>.json, depth_<k>.pfm and optional image_<k>.pfm.
        #[arg(long)]
        views: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_views: usize,
        /// Meters.
        #[arg(long, default_value_t = 0.005)]
        depth_tol: f64,
        #[arg(long)]
        photo_tol: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Sub-pixel DP matching with soft-argmax regression.
    Match {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// min:max:step in pixels.
        #[arg(long, default_value = "-4:12:0.5", allow_hyphen_values = true)]
        labels: DisparityLabels,
        #[arg(long, default_value_t = 9)]
        window: usize,
        #[arg(long, default_value = "zncc")]
        cost: CostKind,
        #[arg(long, value_delimiter = ',', default_value = "nearest,bilinear,phase_shift")]
        sampling: Vec<Sampling>,
        #[arg(long, default_value_t = 2)]
        aggregate: usize,
        #[arg(long, default_value_t = 0.002)]
        temperature: f64,
        #[arg(short, long)]
        out: PathBuf,
        /// Write normals of the calibrated depth here.
        #[arg(long, requires_all = ["calib", "cam"])]
        normals: Option<PathBuf>,
        /// Write the calibrated depth here.
        #[arg(long, requires = "calib")]
        depth_out: Option<PathBuf>,
        #[arg(long)]
        calib: Option<PathBuf>,
        #[arg(long)]
        cam: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        neighborhood: usize,
    },
    /// Compare a prediction with ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum)]
        kind: MapKind,
        #[arg(long, default_value_t = 1.01)]
        tau: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Full synthetic run: simulate, match, calibrate, convert, refine and score.
    Pipeline {
        /// Pipeline JSON; the built-in sphere scene is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// A failure reported as one line of JSON on stderr.
#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
}

impl From<dualpix::Error> for Failure {
    fn from(e: dualpix::Error) -> Self {
        Failure { code: e.code(), message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: "parse_error", message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        dualpix::Error::from(e).into()
    }
}

fn parse_failure(message: String) -> Failure {
    Failure { code: "parse_error", message }
}

type CliResult<T> = Result<T, Failure>;

fn parse_ball(s: &str) -> Result<ChromeBall, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let [cx, cy, r] = v[..] else { return Err(format!("expected cx,cy,r, got {s:?}")) };
    ChromeBall::new(cx, cy, r).map_err(|e| e.to_string())
}

/// Numeric CSV rows; a first row that does not parse is treated as a header.
fn read_rows(path: &Path, min_cols: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.len() >= min_cols => rows.push(v),
            Ok(v) => return Err(parse_failure(format!("{}: row {} has {} columns, need {min_cols}", path.display(), i + 1, v.len()))),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_failure(format!("{}: row {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

fn read_image(path: &Path) -> CliResult<ImageF> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    Ok(match ext.as_str() {
        "pfm" => pfm::read_image(path)?,
        "png" => png16::read(path)?,
        "pgm" => pgm::read(path)?,
        _ => return Err(parse_failure(format!("{}: unsupported image format", path.display()))),
    })
}

/// Images of a directory in file-name order.
fn read_stack(dir: &Path) -> CliResult<Vec<ImageF>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| {
        matches!(p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(), Some("pfm" | "png" | "pgm"))
    });
    paths.sort();
    if paths.is_empty() {
        return Err(dualpix::Error::EmptyInput(format!("{}: no images", dir.display())).into());
    }
    paths.iter().map(|p| read_image(p)).collect()
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct SimulateFile {
    scene: SceneParams,
    optics: OpticsConfig,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Rig {
    camera: PinholeCamera,
    projector: PinholeCamera,
}

fn simulate(cli: &Command) -> CliResult<()> {
    let Command::Simulate { config, scene, width, height, depth, downsample, noise, seed, emit_samples, out } = cli else {
        unreachable!()
    };
    let (params, optics, noise, seed) = match config {
        Some(p) => {
            let f: SimulateFile = read_json(p)?;
            (f.scene, f.optics, f.noise_sigma, f.seed)
        }
        None => {
            let mut params = SceneParams::sphere_default(*width, *height);
            params.kind = match scene {
                SceneArg::Sphere => params.kind,
                SceneArg::Plane => SceneKind::Plane { z: *depth },
                SceneArg::SlantedPlane => SceneKind::SlantedPlane { z0: *depth, slope_x: 0.2, slope_y: 0.0 },
                SceneArg::Checkerboard => SceneKind::CheckerboardTarget { z: *depth, square_px: 8 },
            };
            (params, OpticsConfig::dataset_preset().downsampled(*downsample), *noise, *seed)
        }
    };
    let (rgb, gt_depth, gt_normals) = make_test_scene(&params)?;
    let pair = render_dp(&rgb, &gt_depth, &optics)?;
    let (mut left, mut right) = (pair.left().clone(), pair.right().clone());
    if noise > 0.0 {
        left = add_gaussian_noise(&left, noise, seed)?;
        right = add_gaussian_noise(&right, noise, seed.wrapping_add(1))?;
    }
    std::fs::create_dir_all(out)?;
    pfm::write_image(out.join("left.pfm"), &left)?;
    pfm::write_image(out.join("right.pfm"), &right)?;
    pfm::write_depth(out.join("gt_depth.pfm"), &gt_depth)?;
    pfm::write_normals(out.join("gt_normal.pfm"), &gt_normals)?;
    pfm::write_disparity(out.join("gt_disp.pfm"), &signed_blur(&gt_depth, &optics)?)?;
    write_json(out.join("optics.json"), &optics)?;
    write_json(out.join("camera.json"), &params.camera()?)?;
    if *emit_samples {
        let mut w = csv::Writer::from_path(out.join("samples.csv"))?;
        w.write_record(["inv_depth", "disparity"])?;
        for s in calibration_sweep(&optics, &DisparityLabels::default())? {
            w.write_record([s.inv_depth.to_string(), s.disparity.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { .. } => simulate(cmd)?,
        Command::Calibrate { samples, f, fnum, pitch, out } => {
            let samples = read_rows(samples, 2)?
                .into_iter()
                .map(|r| CalibSample::new(r[0], r[1], r.get(2).copied().unwrap_or(1.0)))
                .collect::<dualpix::Result<Vec<_>>>()?;
            let calib = fit_affine(&samples, *f, *fnum, *pitch)?;
            ensure_parent(out)?;
            write_json(out, &calib)?;
        }
        Command::SlGen { proj_width, proj_height, out } => {
            let cfg = PatternSet::standard(*proj_width, *proj_height);
            let images = generate_patterns(&cfg)?;
            std::fs::create_dir_all(out)?;
            for (k, img) in images.iter().enumerate() {
                pfm::write_image(out.join(format!("pattern_{k:03}.pfm")), img)?;
            }
            write_json(out.join("patterns.json"), &cfg)?;
        }
        Command::SlDecode { captures, rig, patterns, out } => {
            let cfg: PatternSet = read_json(patterns.clone().unwrap_or_else(|| captures.join("patterns.json")))?;
            let rig: Rig = read_json(rig)?;
            let stack = read_stack(captures)?;
            let gray: Vec<ImageF> = stack.iter().map(ImageF::to_gray).collect();
            let phase = decode_axis(&gray, &cfg, Orientation::Horizontal)?;
            let depth = triangulate(&phase, &rig.camera, &rig.projector)?;
            ensure_parent(out)?;
            pfm::write_depth(out, &depth)?;
        }
        Command::PsLights { ball, highlights, out } => {
            let hs: Vec<(f64, f64)> = read_rows(highlights, 2)?.into_iter().map(|r| (r[0], r[1])).collect();
            let lights = LightSet::from_highlights(ball, &hs)?;
            ensure_parent(out)?;
            write_json(out, &lights)?;
        }
        Command::PsSolve { images, lights, shadow, saturation, out, albedo } => {
            let lights: LightSet = read_json(lights)?;
            let stack = read_stack(images)?;
            let th = ShadowThresholds { low: *shadow, high: *saturation };
            let (normals, rho) = solve_normals(&stack, &lights, th)?;
            ensure_parent(out)?;
            pfm::write_normals(out, &normals)?;
            if let Some(p) = albedo {
                ensure_parent(p)?;
                pfm::write_image(p, &rho)?;
            }
        }
        Command::Refine { depth, normal, cam, lambda, out } => {
            let depth = pfm::read_depth(depth, true)?;
            let normals = pfm::read_normals(normal, true)?;
            let cam: PinholeCamera = read_json(cam)?;
            if depth.width() != normals.width() || depth.height() != normals.height() {
                return Err(dualpix::Error::Shape("depth and normal maps differ in size".into()).into());
            }
            // only pixels valid in both maps take part
            let mask: Vec<bool> = depth.mask().iter().zip(normals.mask()).map(|(a, b)| *a && *b).collect();
            let depth = DepthMap::new(depth.width(), depth.height(), depth.z().to_vec(), mask.clone())?;
            let normals = NormalMap::new(normals.width(), normals.height(), normals.n().to_vec(), mask)?;
            let r = refine_depth(&depth, &normals, &cam, &RefineConfig::new(*lambda))?;
            ensure_parent(out)?;
            pfm::write_depth(out, &r.depth)?;
        }
        Command::Filter { cloud, views, min_views, depth_tol, photo_tol, out } => {
            let cloud = ply::read(cloud)?;
            let views = read_views(views)?;
            let cfg = ConsistencyConfig { depth_tol: *depth_tol, min_views: *min_views, photo_tol: *photo_tol };
            let kept = filter_points(&cloud, &views, &cfg)?;
            ensure_parent(out)?;
            ply::write(out, &kept)?;
        }
        Command::Match {
            left,
            right,
            labels,
            window,
            cost,
            sampling,
            aggregate,
            temperature,
            out,
            normals,
            depth_out,
            calib,
            cam,
            neighborhood,
        } => {
            let cfg = MatchConfig {
                window: *window,
                cost_kind: *cost,
                sampling: sampling.clone(),
                aggregate_radius: *aggregate,
                softmax_temperature: *temperature,
            };
            let l = read_image(left)?.to_gray();
            let r = read_image(right)?.to_gray();
            let disp = match_pair(&l, &r, labels, &cfg)?;
            ensure_parent(out)?;
            pfm::write_disparity(out, &disp)?;
            if let Some(calib) = calib {
                let calib: DpCalibration = read_json(calib)?;
                let (depth, _) = disparity_to_depth(&disp, &calib)?;
                if let Some(p) = depth_out {
                    ensure_parent(p)?;
                    pfm::write_depth(p, &depth)?;
                }
                if let (Some(p), Some(cam)) = (normals, cam) {
                    let cam: PinholeCamera = read_json(cam)?;
                    ensure_parent(p)?;
                    pfm::write_normals(p, &normals_from_depth(&depth, &cam, *neighborhood)?)?;
                }
            }
        }
        Command::Eval { pred, gt, kind, tau, out } => {
            let report = match kind {
                MapKind::Depth => {
                    let (p, g) = (pfm::read_depth(pred, true)?, pfm::read_depth(gt, true)?);
                    with_affine(depth_metrics(&p, &g, *tau)?, &p, &g)?
                }
                MapKind::Disparity => {
                    let (p, g) = (pfm::read_disparity(pred, true)?, pfm::read_disparity(gt, true)?);
                    with_affine(disparity_metrics(&p, &g)?, &p, &g)?
                }
                MapKind::Normal => normal_metrics(&pfm::read_normals(pred, true)?, &pfm::read_normals(gt, true)?)?,
            };
            ensure_parent(out)?;
            write_json(out, &report)?;
        }
        Command::Pipeline { config, out } => {
            let cfg: PipelineConfig = match config {
                Some(p) => read_json(p)?,
                None => PipelineConfig::default(),
            };
            write_outputs(&run(&cfg)?, out)?;
        }
    }
    Ok(())
}

/// Views are numbered by the `<k>` in `cam_<k>.json`, in ascending order.
fn read_views(dir: &Path) -> CliResult<Vec<View>> {
    let mut ids: Vec<u32> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("cam_")?.strip_suffix(".json")?.parse().ok()
        })
        .collect();
    ids.sort_unstable();
    ids.into_iter()
        .map(|k| {
            let camera: PinholeCamera = read_json(dir.join(format!("cam_{k}.json")))?;
            let depth = pfm::read_depth(dir.join(format!("depth_{k}.pfm")), true)?;
            let img = dir.join(format!("image_{k}.pfm"));
            let image = if img.exists() { Some(pfm::read_image(img)?) } else { None };
            Ok(View { camera, depth, image })
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("{}", serde_json::json!({ "error": "thread_pool", "message": e.to_string() }));
        return ExitCode::from(1);
    }
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::json!({ "error": f.code, "message": f.message }));
            ExitCode::from(1)
        }
    }
}
