//! Classical dual-pixel matcher: sub-pixel cost volume, soft-argmax
//! disparity and local-plane normals.
//!
//! Raw-intensity window costs stand in for learned features, the per-pixel
//! maximum over sampling methods stands in for attention-based fusion, and a
//! box filter stands in for learned aggregation.

mod normals;
mod shift;

pub use normals::normals_from_depth;
pub use shift::{shift_subpixel, Sampling};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DisparityMap, ImageF};
use shift::{spatial_shift, RowSpectra};

/// Evenly spaced disparity hypotheses, in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabelRecord", into = "LabelRecord")]
pub struct DisparityLabels {
    d_min: f64,
    d_max: f64,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    d_min: f64,
    d_max: f64,
    count: usize,
}

impl TryFrom<LabelRecord> for DisparityLabels {
    type Error = Error;
    fn try_from(r: LabelRecord) -> Result<Self> {
        DisparityLabels::new(r.d_min, r.d_max, r.count)
    }
}

impl From<DisparityLabels> for LabelRecord {
    fn from(l: DisparityLabels) -> Self {
        LabelRecord { d_min: l.d_min, d_max: l.d_max, count: l.count }
    }
}

impl Default for DisparityLabels {
    fn default() -> Self {
        Self { d_min: -4.0, d_max: 12.0, count: 33 }
    }
}

impl DisparityLabels {
    pub fn new(d_min: f64, d_max: f64, count: usize) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite()) || count < 2 || !(d_max > d_min) {
            return Err(Error::Domain(format!("labels need d_min < d_max and ≥ 2 labels, got {d_min}:{d_max} × {count}")));
        }
        Ok(Self { d_min, d_max, count })
    }

    /// Labels `d_min, d_min + step, …, d_max`; the range must be a whole number of steps.
    pub fn with_step(d_min: f64, d_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Domain(format!("label step must be positive, got {step}")));
        }
        let n = (d_max - d_min) / step;
        if (n - n.round()).abs() > 1e-9 * n.abs().max(1.0) {
            return Err(Error::Domain(format!("range {d_min}..{d_max} is not a multiple of step {step}")));
        }
        Self::new(d_min, d_max, n.round() as usize + 1)
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn step(&self) -> f64 {
        (self.d_max - self.d_min) / (self.count - 1) as f64
    }

    pub fn label(&self, m: usize) -> f64 {
        if m + 1 == self.count {
            self.d_max
        } else {
            self.d_min + m as f64 * self.step()
        }
    }

    pub fn labels(&self) -> Vec<f64> {
        (0..self.count).map(|m| self.label(m)).collect()
    }
}

/// Parses `min:max:step`.
impl std::str::FromStr for DisparityLabels {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad label spec {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        match nums.as_slice() {
            [a, b, step] => Self::with_step(*a, *b, *step),
            _ => Err(Error::Domain(format!("label spec must be min:max:step, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Sad,
    Zncc,
}

impl std::str::FromStr for CostKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sad" => Ok(CostKind::Sad),
            "zncc" => Ok(CostKind::Zncc),
            other => Err(Error::Domain(format!("unknown cost kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub window: usize,
    pub cost_kind: CostKind,
    pub sampling: Vec<Sampling>,
    pub aggregate_radius: usize,
    pub softmax_temperature: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            window: 9,
            cost_kind: CostKind::Zncc,
            sampling: Sampling::ALL.to_vec(),
            aggregate_radius: 2,
            softmax_temperature: 0.002,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::Domain(format!("window must be odd and ≥ 3, got {}", self.window)));
        }
        if self.sampling.is_empty() {
            return Err(Error::Domain("at least one sampling method is required".into()));
        }
        if !(self.softmax_temperature > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {}", self.softmax_temperature)));
        }
        Ok(())
    }
}

/// Matching scores, higher is better. Layout is row-major with the label
/// index fastest: `cost[(y·W + x)·M + m]`. Pixels whose window or shifted
/// support leaves the image are marked invalid and hold score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    labels: DisparityLabels,
    cost: Vec<f64>,
    valid: Vec<bool>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, labels: DisparityLabels, cost: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if cost.len() != width * height * labels.count() || valid.len() != width * height {
            return Err(Error::Shape("cost volume buffers do not match its dimensions".into()));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("cost volume contains non-finite scores".into()));
        }
        Ok(Self { width, height, labels, cost, valid })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &DisparityLabels {
        &self.labels
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn scores(&self, x: usize, y: usize) -> &[f64] {
        let m = self.labels.count();
        let i = (y * self.width + x) * m;
        &self.cost[i..i + m]
    }

    /// Label index with the highest score.
    pub fn argmax(&self, x: usize, y: usize) -> usize {
        let s = self.scores(x, y);
        (0..s.len()).fold(0, |b, m| if s[m] > s[b] { m } else { b })
    }
}

/// Summed-area table for O(1) window sums.
struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut sums = vec![0.0; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    /// Sum over the inclusive box [x0, x1] × [y0, y1].
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = |x: usize, y: usize| self.sums[y * (self.w + 1) + x];
        s(x1 + 1, y1 + 1) - s(x0, y1 + 1) - s(x1 + 1, y0) + s(x0, y0)
    }
}

/// Variance product below which ZNCC is treated as undefined and scored 0.
const ZNCC_EPS: f64 = 1e-12;

fn window_scores(left: &ImageF, shifted: &ImageF, kind: CostKind, r: usize, valid: &[bool]) -> Vec<f64> {
    let (w, h) = (left.width(), left.height());
    let (l, s) = (left.data(), shifted.data());
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut out = vec![0.0; w * h];
    match kind {
        CostKind::Sad => {
            let ad = Integral::new(w, h, |i| (l[i] - s[i]).abs());
            for (i, o) in out.iter_mut().enumerate() {
                if valid[i] {
                    let (x, y) = (i % w, i / w);
                    *o = -ad.sum(x - r, y - r, x + r, y + r) / n;
                }
            }
        }
        CostKind::Zncc => {
            let sl = Integral::new(w, h, |i| l[i]);
            let ss = Integral::new(w, h, |i| s[i]);
            let sll = Integral::new(w, h, |i| l[i] * l[i]);
            let sss = Integral::new(w, h, |i| s[i] * s[i]);
            let sls = Integral::new(w, h, |i| l[i] * s[i]);
            for (i, o) in out.iter_mut().enumerate() {
                if !valid[i] {
                    continue;
                }
                let (x, y) = (i % w, i / w);
                let b = |t: &Integral| t.sum(x - r, y - r, x + r, y + r);
                let (ml, ms) = (b(&sl) / n, b(&ss) / n);
                let vl = (b(&sll) / n - ml * ml).max(0.0);
                let vs = (b(&sss) / n - ms * ms).max(0.0);
                let cov = b(&sls) / n - ml * ms;
                *o = if vl * vs > ZNCC_EPS { (cov / (vl * vs).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
            }
        }
    }
    out
}

fn box_mean_valid(values: &[f64], valid: &[bool], w: usize, h: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return values.to_vec();
    }
    let vi = Integral::new(w, h, |i| if valid[i] { values[i] } else { 0.0 });
    let ci = Integral::new(w, h, |i| valid[i] as u8 as f64);
    (0..w * h)
        .map(|i| {
            if !valid[i] {
                return 0.0;
            }
            let (x, y) = (i % w, i / w);
            let (x0, y0, x1, y1) = (x.saturating_sub(r), y.saturating_sub(r), (x + r).min(w - 1), (y + r).min(h - 1));
            vi.sum(x0, y0, x1, y1) / ci.sum(x0, y0, x1, y1)
        })
        .collect()
}

/// Pixels whose full window, and its shifted support for every label, lies inside the image.
pub fn interior_mask(width: usize, height: usize, labels: &DisparityLabels, window: usize) -> Vec<bool> {
    let r = window / 2;
    let reach = labels.d_min().abs().max(labels.d_max().abs()).ceil() as usize + 1;
    let mx = r + reach;
    (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            x >= mx && x + mx < width && y >= r && y + r < height
        })
        .collect()
}

/// Shifts the right view by every label with each enabled sampling method,
/// scores windows against the left view, keeps the best method per pixel and
/// box-aggregates the result.
pub fn build_cost_volume(left: &ImageF, right: &ImageF, labels: &DisparityLabels, cfg: &MatchConfig) -> Result<CostVolume> {
    cfg.validate()?;
    if !left.same_shape(right) {
        return Err(Error::Shape("left and right views differ in shape".into()));
    }
    let (w, h) = (left.width(), left.height());
    let reach = labels.d_min().abs().max(labels.d_max().abs());
    if reach >= w as f64 / 2.0 {
        return Err(Error::Domain(format!("label range ±{reach} px is too wide for a {w} px image")));
    }
    let (lg, rg) = (left.to_gray(), right.to_gray());
    let r = cfg.window / 2;
    let valid = interior_mask(w, h, labels, cfg.window);
    let spectra = cfg
        .sampling
        .contains(&Sampling::PhaseShift)
        .then(|| RowSpectra::new(&rg, &RowSpectra::planner(w)));

    let per_label: Vec<Result<Vec<f64>>> = labels
        .labels()
        .into_par_iter()
        .map(|d| {
            let mut best: Option<Vec<f64>> = None;
            for &m in &cfg.sampling {
                let shifted = match m {
                    Sampling::PhaseShift => spectra.as_ref().expect("spectra built").shifted(d)?,
                    other => spatial_shift(&rg, d, other)?,
                };
                let s = window_scores(&lg, &shifted, cfg.cost_kind, r, &valid);
                best = Some(match best {
                    None => s,
                    Some(b) => b.iter().zip(&s).map(|(a, c)| a.max(*c)).collect(),
                });
            }
            Ok(box_mean_valid(&best.expect("sampling non-empty"), &valid, w, h, cfg.aggregate_radius))
        })
        .collect();

    let m_count = labels.count();
    let mut cost = vec![0.0; w * h * m_count];
    for (m, slice) in per_label.into_iter().enumerate() {
        for (i, v) in slice?.into_iter().enumerate() {
            cost[i * m_count + m] = v;
        }
    }
    CostVolume::new(w, h, labels.clone(), cost, valid)
}

/// Soft-argmax: d̂ = Σ_m d^m · softmax(score / T)_m.
pub fn regress_disparity(vol: &CostVolume, temperature: f64) -> Result<DisparityMap> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let labels = vol.labels().labels();
    let (w, h) = (vol.width(), vol.height());
    let d: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if !vol.valid()[i] {
                return 0.0;
            }
            let s = vol.scores(i % w, i / w);
            let top = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (mut num, mut den) = (0.0, 0.0);
            for (score, d) in s.iter().zip(&labels) {
                let e = ((score - top) / temperature).exp();
                num += e * d;
                den += e;
            }
            (num / den).clamp(labels[0], labels[labels.len() - 1])
        })
        .collect();
    DisparityMap::new(w, h, d, vol.valid().to_vec())
}

/// Cost volume plus soft-argmax in one call.
pub fn match_pair(left: &ImageF, right: &ImageF, labels: &DisparityLabels, cfg: &MatchConfig) -> Result<DisparityMap> {
    let vol = build_cost_volume(left, right, labels, cfg)?;
    regress_disparity(&vol, cfg.softmax_temperature)
}
