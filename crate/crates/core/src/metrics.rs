//! Evaluation metrics and training losses. Every function averages over the
//! co-valid pixels only (both masks set).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot3, DepthMap, DisparityMap, NormalMap};

/// Named scalar metrics plus the number of pixels they were computed on.
/// Serialises flat: `{"rmse": …, "mae": …, "pixel_count": …}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
    pub pixel_count: usize,
}

impl MetricReport {
    pub fn new(pixel_count: usize) -> Self {
        Self { values: BTreeMap::new(), pixel_count }
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    /// Adds every entry of `other`; pixel counts must agree.
    pub fn merge(&mut self, other: &MetricReport) {
        debug_assert_eq!(self.pixel_count, other.pixel_count);
        self.values.extend(other.values.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

/// A scalar map with a validity mask.
pub trait ScalarMap {
    fn values(&self) -> &[f64];
    fn valid(&self) -> &[bool];
}

impl ScalarMap for DepthMap {
    fn values(&self) -> &[f64] {
        self.z()
    }
    fn valid(&self) -> &[bool] {
        self.mask()
    }
}

impl ScalarMap for DisparityMap {
    fn values(&self) -> &[f64] {
        self.d()
    }
    fn valid(&self) -> &[bool] {
        self.mask()
    }
}

fn co_valid<M: ScalarMap>(pred: &M, gt: &M) -> Result<(Vec<f64>, Vec<f64>)> {
    if pred.values().len() != gt.values().len() {
        return Err(Error::Shape("prediction and ground truth differ in size".into()));
    }
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for i in 0..pred.values().len() {
        if pred.valid()[i] && gt.valid()[i] {
            p.push(pred.values()[i]);
            g.push(gt.values()[i]);
        }
    }
    Ok((p, g))
}

/// Affine alignment `gt ≈ a·pred + b` and the resulting error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub value: f64,
    pub a: f64,
    pub b: f64,
    /// Set when the prediction is constant and `a` was fixed to 0.
    pub degenerate: bool,
}

fn lp_error(pred: &[f64], gt: &[f64], a: f64, b: f64, p: u32) -> f64 {
    let n = pred.len() as f64;
    let s: f64 = pred.iter().zip(gt).map(|(x, y)| (y - (a * x + b)).abs().powi(p as i32)).sum();
    (s / n).powf(1.0 / p as f64)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

const IRLS_ITERS: usize = 20;
const IRLS_TOL: f64 = 1e-8;

/// Best intercept (the median residual) and the summed L1 error for slope `a`.
fn l1_profile(x: &[f64], y: &[f64], a: f64, buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(x.iter().zip(y).map(|(xi, yi)| yi - a * xi));
    let b = median(buf);
    (buf.iter().map(|r| (r - b).abs()).sum(), b)
}

/// L1 line fit. IRLS gives the starting slope; the profile error over the
/// slope (intercept set to the median residual) is convex, so a bracketing
/// golden-section search then pins the exact optimum.
fn l1_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let mut w = vec![1.0; n];
    let (mut a, mut b) = weighted_line(x, y, &w).expect("caller checked spread");
    for _ in 0..IRLS_ITERS {
        for i in 0..n {
            w[i] = 1.0 / (y[i] - a * x[i] - b).abs().max(1e-10);
        }
        let Some((na, nb)) = weighted_line(x, y, &w) else { break };
        let step = (na - a).abs() + (nb - b).abs();
        a = na;
        b = nb;
        if step <= IRLS_TOL * (1.0 + a.abs() + b.abs()) {
            break;
        }
    }

    let mut buf = Vec::with_capacity(n);
    let mut f = |s: f64| l1_profile(x, y, s, &mut buf).0;
    let mut step = 0.1 * (1.0 + a.abs());
    let (mut lo, mut hi) = (a - step, a + step);
    let fa = f(a);
    while f(lo) < fa && step < 1e12 {
        step *= 2.0;
        lo = a - step;
    }
    step = 0.1 * (1.0 + a.abs());
    while f(hi) < fa && step < 1e12 {
        step *= 2.0;
        hi = a + step;
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    let best = 0.5 * (lo + hi);
    let (_, b) = l1_profile(x, y, best, &mut buf);
    (best, b)
}

/// AIWE(p) = min over (a, b) of (mean |gt − (a·pred + b)|^p)^{1/p}, p ∈ {1, 2}.
pub fn aiwe<M: ScalarMap>(pred: &M, gt: &M, p: u32) -> Result<AffineFit> {
    if p != 1 && p != 2 {
        return Err(Error::Domain(format!("aiwe supports p = 1 or 2, got {p}")));
    }
    let (x, y) = co_valid(pred, gt)?;
    if x.len() < 2 {
        return Err(Error::DegenerateFit(format!("aiwe needs ≥ 2 co-valid pixels, got {}", x.len())));
    }
    if x.iter().all(|v| *v == x[0]) {
        let b = if p == 2 { y.iter().sum::<f64>() / y.len() as f64 } else { median(&mut y.clone()) };
        return Ok(AffineFit { value: lp_error(&x, &y, 0.0, b, p), a: 0.0, b, degenerate: true });
    }
    let (a, b) = if p == 2 { weighted_line(&x, &y, &vec![1.0; x.len()]).expect("spread checked") } else { l1_line(&x, &y) };
    let (mut a, mut b, mut value) = (a, b, lp_error(&x, &y, a, b, p));
    let identity = lp_error(&x, &y, 1.0, 0.0, p);
    if identity < value {
        (a, b, value) = (1.0, 0.0, identity);
    }
    Ok(AffineFit { value, a, b, degenerate: false })
}

/// RMSE, AbsRel, MAE and δ¹..δ³ with ratio threshold `tau`.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap, tau: f64) -> Result<MetricReport> {
    if !(tau > 1.0) {
        return Err(Error::Domain(format!("tau must exceed 1, got {tau}")));
    }
    let (p, g) = co_valid(pred, gt)?;
    if p.is_empty() {
        return Err(Error::EmptyInput("depth metrics: no co-valid pixel".into()));
    }
    let n = p.len() as f64;
    let mut r = MetricReport::new(p.len());
    r.insert("rmse", (p.iter().zip(&g).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / n).sqrt());
    r.insert("absrel", p.iter().zip(&g).map(|(a, b)| ((b - a) / b).abs()).sum::<f64>() / n);
    r.insert("mae", p.iter().zip(&g).map(|(a, b)| (b - a).abs()).sum::<f64>() / n);
    for (i, key) in ["delta1", "delta2", "delta3"].iter().enumerate() {
        let t = tau.powi(i as i32 + 1);
        let hits = p.iter().zip(&g).filter(|(a, b)| (*b / *a).max(*a / *b) < t).count();
        r.insert(key, hits as f64 / n);
    }
    Ok(r)
}

/// RMSE and MAE without alignment, for disparity maps.
pub fn disparity_metrics(pred: &DisparityMap, gt: &DisparityMap) -> Result<MetricReport> {
    let (p, g) = co_valid(pred, gt)?;
    if p.is_empty() {
        return Err(Error::EmptyInput("disparity metrics: no co-valid pixel".into()));
    }
    let n = p.len() as f64;
    let mut r = MetricReport::new(p.len());
    r.insert("rmse", (p.iter().zip(&g).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / n).sqrt());
    r.insert("mae", p.iter().zip(&g).map(|(a, b)| (b - a).abs()).sum::<f64>() / n);
    Ok(r)
}

/// Adds `wmae` and `wrmse` (AIWE(1), AIWE(2)) to a report.
pub fn with_affine<M: ScalarMap>(mut report: MetricReport, pred: &M, gt: &M) -> Result<MetricReport> {
    report.insert("wmae", aiwe(pred, gt, 1)?.value);
    report.insert("wrmse", aiwe(pred, gt, 2)?.value);
    Ok(report)
}

fn angle_deg(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dot3(a, b).clamp(-1.0, 1.0).acos().to_degrees()
}

fn co_valid_normals(pred: &NormalMap, gt: &NormalMap) -> Result<Vec<([f64; 3], [f64; 3])>> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Shape("normal maps differ in size".into()));
    }
    let pairs: Vec<_> = (0..pred.n().len())
        .filter(|&i| pred.mask()[i] && gt.mask()[i])
        .map(|i| (pred.n()[i], gt.n()[i]))
        .collect();
    for (a, b) in &pairs {
        for v in [a, b] {
            let len = dot3(v, v).sqrt();
            if (len - 1.0).abs() > 1e-3 {
                return Err(Error::Domain(format!("normal of length {len} is not unit")));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("normal metrics: no co-valid pixel".into()));
    }
    Ok(pairs)
}

/// Mean and RMS angular error in degrees (`mae_deg`, `rmsae_deg`).
pub fn normal_metrics(pred: &NormalMap, gt: &NormalMap) -> Result<MetricReport> {
    let pairs = co_valid_normals(pred, gt)?;
    let n = pairs.len() as f64;
    let angles: Vec<f64> = pairs.iter().map(|(a, b)| angle_deg(a, b)).collect();
    let mut r = MetricReport::new(pairs.len());
    r.insert("mae_deg", angles.iter().sum::<f64>() / n);
    r.insert("rmsae_deg", (angles.iter().map(|a| a * a).sum::<f64>() / n).sqrt());
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpoofLabel {
    Real,
    Fake,
}

/// APCER, BPCER and ACER from (predicted, true) label pairs.
pub fn spoof_metrics(samples: &[(SpoofLabel, SpoofLabel)]) -> Result<MetricReport> {
    let fakes = samples.iter().filter(|s| s.1 == SpoofLabel::Fake).count();
    let reals = samples.len() - fakes;
    if fakes == 0 || reals == 0 {
        return Err(Error::Domain(format!("spoof metrics need both classes, got {fakes} fake and {reals} real")));
    }
    let fake_as_real = samples.iter().filter(|s| s.1 == SpoofLabel::Fake && s.0 == SpoofLabel::Real).count();
    let real_as_fake = samples.iter().filter(|s| s.1 == SpoofLabel::Real && s.0 == SpoofLabel::Fake).count();
    let apcer = fake_as_real as f64 / fakes as f64;
    let bpcer = real_as_fake as f64 / reals as f64;
    let mut r = MetricReport::new(samples.len());
    r.insert("apcer", apcer);
    r.insert("bpcer", bpcer);
    r.insert("acer", 0.5 * (apcer + bpcer));
    Ok(r)
}

/// x²/2 for |x| < 1, |x| − ½ otherwise.
pub fn smooth_l1_value(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * a * a
    } else {
        a - 0.5
    }
}

pub fn smooth_l1(pred: &DisparityMap, gt: &DisparityMap) -> Result<f64> {
    let (p, g) = co_valid(pred, gt)?;
    if p.is_empty() {
        return Err(Error::EmptyInput("smooth_l1: no co-valid pixel".into()));
    }
    Ok(p.iter().zip(&g).map(|(a, b)| smooth_l1_value(b - a)).sum::<f64>() / p.len() as f64)
}

/// Mean of 1 − N·N̂.
pub fn cosine_normal_loss(pred: &NormalMap, gt: &NormalMap) -> Result<f64> {
    let pairs = co_valid_normals(pred, gt)?;
    Ok(pairs.iter().map(|(a, b)| 1.0 - dot3(a, b)).sum::<f64>() / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disp(v: &[f64]) -> DisparityMap {
        DisparityMap::dense(v.len(), 1, v.to_vec()).unwrap()
    }

    fn depth(v: &[f64]) -> DepthMap {
        DepthMap::dense(v.len(), 1, v.to_vec()).unwrap()
    }

    /// Exact L1 oracle: the optimum line passes through two of the points.
    fn l1_pairs_oracle(x: &[f64], y: &[f64]) -> f64 {
        let mut best = lp_error(x, y, 1.0, 0.0, 1);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                if x[i] != x[j] {
                    let a = (y[j] - y[i]) / (x[j] - x[i]);
                    best = best.min(lp_error(x, y, a, y[i] - a * x[i], 1));
                }
            }
        }
        best
    }

    #[test]
    fn affine_prediction_scores_zero() {
        let gt = disp(&[1.0, 2.0, 3.5, 4.0, 7.0]);
        let pred = disp(&[7.0, 9.0, 12.0, 13.0, 19.0]);
        assert!(aiwe(&pred, &gt, 1).unwrap().value < 1e-9);
        assert!(aiwe(&pred, &gt, 2).unwrap().value < 1e-9);
        assert_eq!(aiwe(&gt, &gt, 2).unwrap().value, 0.0);
    }

    #[test]
    fn three_pixel_l2_against_grid() {
        let (gt, pred) = (disp(&[1.0, 2.0, 3.0]), disp(&[1.0, 2.0, 4.0]));
        let v = aiwe(&pred, &gt, 2).unwrap().value;
        let mut best = f64::INFINITY;
        for i in 0..=2000 {
            for j in 0..=2000 {
                let a = i as f64 * 0.001;
                let b = -1.0 + j as f64 * 0.001;
                best = best.min(lp_error(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0], a, b, 2));
            }
        }
        // fit y = a·x + b with x = {1,2,4}: a = 9/14, b = 1 − a·7/3
        let a = 9.0 / 14.0;
        let b = 2.0 - a * 7.0 / 3.0;
        assert!((v - lp_error(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0], a, b, 2)).abs() < 1e-12);
        assert!(v <= best + 1e-12 && best - v < 1e-4);
    }

    #[test]
    fn constant_prediction_flagged() {
        let f = aiwe(&disp(&[2.0, 2.0, 2.0]), &disp(&[1.0, 2.0, 6.0]), 2).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.a, 0.0);
        assert!((f.b - 3.0).abs() < 1e-12);
        assert!(matches!(aiwe(&disp(&[1.0]), &disp(&[1.0]), 1), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn depth_examples() {
        let r = depth_metrics(&depth(&[1.1, 1.9]), &depth(&[1.0, 2.0]), 1.01).unwrap();
        assert!((r.get("mae").unwrap() - 0.1).abs() < 1e-12);
        assert!((r.get("rmse").unwrap() - 0.1).abs() < 1e-12);
        assert!((r.get("absrel").unwrap() - 0.075).abs() < 1e-12);
        let g = depth(&[1.0, 1.3, 2.0]);
        let p = depth(&[1.005, 1.3 * 1.005, 2.01]);
        assert_eq!(depth_metrics(&p, &g, 1.01).unwrap().get("delta1"), Some(1.0));
        let same = depth_metrics(&g, &g, 1.01).unwrap();
        for k in ["rmse", "absrel", "mae"] {
            assert_eq!(same.get(k), Some(0.0));
        }
        assert_eq!(same.pixel_count, 3);
    }

    #[test]
    fn empty_overlap_is_an_error() {
        let a = DepthMap::new(2, 1, vec![1.0, 0.0], vec![true, false]).unwrap();
        let b = DepthMap::new(2, 1, vec![0.0, 1.0], vec![false, true]).unwrap();
        assert!(matches!(depth_metrics(&a, &b, 1.01), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn normal_examples() {
        let up = NormalMap::dense(2, 1, vec![[0.0, 0.0, 1.0]; 2]).unwrap();
        let t = 10f64.to_radians();
        let tilted = NormalMap::dense(2, 1, vec![[t.sin(), 0.0, t.cos()], [0.0, t.sin(), t.cos()]]).unwrap();
        let r = normal_metrics(&tilted, &up).unwrap();
        assert!((r.get("mae_deg").unwrap() - 10.0).abs() < 1e-9);
        assert!((r.get("rmsae_deg").unwrap() - 10.0).abs() < 1e-9);
        let mixed = NormalMap::dense(2, 1, vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        let r = normal_metrics(&mixed, &up).unwrap();
        assert!((r.get("mae_deg").unwrap() - 45.0).abs() < 1e-9);
        assert!((r.get("rmsae_deg").unwrap() - (90.0f64 * 90.0 / 2.0).sqrt()).abs() < 1e-9);
        let flipped = NormalMap::dense(2, 1, vec![[0.0, 0.0, -1.0]; 2]).unwrap();
        assert!((cosine_normal_loss(&flipped, &up).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(cosine_normal_loss(&up, &up).unwrap(), 0.0);
    }

    #[test]
    fn spoof_examples() {
        use SpoofLabel::*;
        let mut s = vec![(Fake, Fake); 8];
        s.extend([(Real, Fake); 2]);
        s.extend([(Real, Real); 19]);
        s.push((Fake, Real));
        let r = spoof_metrics(&s).unwrap();
        assert!((r.get("apcer").unwrap() - 0.2).abs() < 1e-12);
        assert!((r.get("bpcer").unwrap() - 0.05).abs() < 1e-12);
        assert!((r.get("acer").unwrap() - 0.125).abs() < 1e-12);
        let all_real = spoof_metrics(&[(Real, Real), (Real, Fake)]).unwrap();
        assert_eq!((all_real.get("apcer"), all_real.get("bpcer"), all_real.get("acer")), (Some(1.0), Some(0.0), Some(0.5)));
        assert!(spoof_metrics(&[(Real, Real)]).is_err());
    }

    #[test]
    fn smooth_l1_quadratic_branch_and_knee() {
        let gt = disp(&[1.0, 2.0, 3.0]);
        let pred = disp(&[1.5, 2.5, 2.5]);
        assert!((smooth_l1(&pred, &gt).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(smooth_l1(&gt, &gt).unwrap(), 0.0);
        // value and slope agree across |x| = 1
        let h = 1e-7;
        assert!((smooth_l1_value(1.0 - 1e-12) - smooth_l1_value(1.0 + 1e-12)).abs() < 1e-9);
        let left = (smooth_l1_value(1.0) - smooth_l1_value(1.0 - h)) / h;
        let right = (smooth_l1_value(1.0 + h) - smooth_l1_value(1.0)) / h;
        assert!((left - right).abs() < 1e-6);
        assert!((left - 1.0).abs() < 1e-6);
    }

    #[test]
    fn report_serialises_flat() {
        let r = depth_metrics(&depth(&[1.0]), &depth(&[1.0]), 1.01).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["pixel_count"], 1);
        assert_eq!(v["rmse"], 0.0);
        let back: MetricReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn aiwe_zero_on_affine_maps(gt in proptest::collection::vec(0.1f64..10.0, 4..40), a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -10.0f64..10.0) {
            prop_assume!(gt.iter().any(|v| (v - gt[0]).abs() > 1e-3));
            let pred: Vec<f64> = gt.iter().map(|g| a * g + b).collect();
            for p in [1, 2] {
                prop_assert!(aiwe(&disp(&pred), &disp(&gt), p).unwrap().value < 1e-6);
            }
        }

        #[test]
        fn aiwe_l1_matches_pair_oracle(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..25)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let v = aiwe(&disp(&x), &disp(&y), 1).unwrap().value;
            let oracle = l1_pairs_oracle(&x, &y);
            prop_assert!(v >= oracle - 1e-9);
            prop_assert!(v <= oracle + 1e-6 * (1.0 + oracle), "{} vs {}", v, oracle);
        }

        #[test]
        fn aiwe_never_exceeds_plain_error(pts in proptest::collection::vec((0.1f64..5.0, 0.1f64..5.0), 2..30)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let (p, g) = (disp(&x), disp(&y));
            let plain = disparity_metrics(&p, &g).unwrap();
            prop_assert!(aiwe(&p, &g, 1).unwrap().value <= plain.get("mae").unwrap() + 1e-12);
            prop_assert!(aiwe(&p, &g, 2).unwrap().value <= plain.get("rmse").unwrap() + 1e-12);
        }

        #[test]
        fn deltas_are_nested_and_order_free(pts in proptest::collection::vec((0.5f64..2.0, 0.5f64..2.0), 1..30), junk in 0usize..5) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
            let r = depth_metrics(&depth(&x), &depth(&y), 1.01).unwrap();
            let (d1, d2, d3) = (r.get("delta1").unwrap(), r.get("delta2").unwrap(), r.get("delta3").unwrap());
            prop_assert!(d1 <= d2 && d2 <= d3);
            // reversed order plus co-invalid padding
            let mut xr: Vec<f64> = x.iter().rev().cloned().collect();
            let mut yr: Vec<f64> = y.iter().rev().cloned().collect();
            let mut m = vec![true; xr.len()];
            for k in 0..junk {
                xr.push(1.0 + k as f64);
                yr.push(3.0);
                m.push(false);
            }
            let n = xr.len();
            let r2 = depth_metrics(
                &DepthMap::new(n, 1, xr, m.clone()).unwrap(),
                &DepthMap::new(n, 1, yr, m).unwrap(),
                1.01,
            ).unwrap();
            for (k, v) in &r.values {
                prop_assert!((v - r2.get(k).unwrap()).abs() < 1e-12);
            }
            prop_assert_eq!(r.pixel_count, r2.pixel_count);
        }
    }
}
