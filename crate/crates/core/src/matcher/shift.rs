//! Horizontal sub-pixel translation: out(x) = in(x − delta).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ImageF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Nearest,
    Bilinear,
    PhaseShift,
}

impl Sampling {
    pub const ALL: [Sampling; 3] = [Sampling::Nearest, Sampling::Bilinear, Sampling::PhaseShift];
}

impl std::str::FromStr for Sampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Sampling::Nearest),
            "bilinear" => Ok(Sampling::Bilinear),
            "phase_shift" | "phase" => Ok(Sampling::PhaseShift),
            other => Err(Error::Domain(format!("unknown sampling method {other:?}"))),
        }
    }
}

/// Nearest and bilinear clamp at the image edges; phase shifting treats each row as periodic.
pub fn shift_subpixel(img: &ImageF, delta: f64, method: Sampling) -> Result<ImageF> {
    check_delta(img, delta)?;
    let channels: Vec<ImageF> = split_channels(img)?;
    let shifted = match method {
        Sampling::PhaseShift => {
            let planner = RowSpectra::planner(img.width());
            channels.iter().map(|c| RowSpectra::new(c, &planner).shifted(delta)).collect::<Result<Vec<_>>>()?
        }
        m => channels.iter().map(|c| spatial_shift(c, delta, m)).collect::<Result<Vec<_>>>()?,
    };
    merge_channels(&shifted)
}

fn check_delta(img: &ImageF, delta: f64) -> Result<()> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!("shift must be finite, got {delta}")));
    }
    if delta.abs() >= img.width() as f64 / 2.0 {
        return Err(Error::Domain(format!("shift {delta} exceeds half the image width {}", img.width())));
    }
    Ok(())
}

fn split_channels(img: &ImageF) -> Result<Vec<ImageF>> {
    (0..img.channels()).map(|c| ImageF::from_fn(img.width(), img.height(), |x, y| img.get_c(x, y, c))).collect()
}

fn merge_channels(chs: &[ImageF]) -> Result<ImageF> {
    if chs.len() == 1 {
        return Ok(chs[0].clone());
    }
    let (w, h, c) = (chs[0].width(), chs[0].height(), chs.len());
    let mut data = vec![0.0; w * h * c];
    for (k, ch) in chs.iter().enumerate() {
        for (i, v) in ch.data().iter().enumerate() {
            data[i * c + k] = *v;
        }
    }
    ImageF::new(w, h, c, data)
}

pub(crate) fn spatial_shift(img: &ImageF, delta: f64, method: Sampling) -> Result<ImageF> {
    let w = img.width() as i64;
    let at = |row: &[f64], x: i64| row[x.clamp(0, w - 1) as usize];
    match method {
        Sampling::Nearest => {
            let s = delta.round_ties_even() as i64;
            ImageF::from_fn(img.width(), img.height(), |x, y| at(img.row(y), x as i64 - s))
        }
        Sampling::Bilinear => {
            let base = delta.floor();
            let t = delta - base;
            let s = base as i64;
            // x − delta = (x − s − 1) + (1 − t)
            ImageF::from_fn(img.width(), img.height(), |x, y| {
                let row = img.row(y);
                let x = x as i64;
                if t == 0.0 {
                    at(row, x - s)
                } else {
                    t * at(row, x - s - 1) + (1.0 - t) * at(row, x - s)
                }
            })
        }
        Sampling::PhaseShift => unreachable!("phase shift goes through RowSpectra"),
    }
}

/// Forward row spectra of a grayscale image, computed once and reused across shifts.
pub(crate) struct RowSpectra {
    width: usize,
    height: usize,
    spectra: Vec<Complex<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) struct Planner {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RowSpectra {
    pub(crate) fn planner(width: usize) -> Planner {
        let mut p = FftPlanner::new();
        Planner { forward: p.plan_fft_forward(width), inverse: p.plan_fft_inverse(width) }
    }

    pub(crate) fn new(img: &ImageF, planner: &Planner) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut spectra: Vec<Complex<f64>> = img.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        for row in spectra.chunks_mut(w) {
            planner.forward.process(row);
        }
        Self { width: w, height: h, spectra, inverse: planner.inverse.clone() }
    }

    pub(crate) fn shifted(&self, delta: f64) -> Result<ImageF> {
        let w = self.width;
        let phase: Vec<Complex<f64>> = (0..w)
            .map(|k| {
                // signed frequency; the Nyquist bin keeps only its real response
                let kk = if 2 * k < w { k as f64 } else { k as f64 - w as f64 };
                let theta = -std::f64::consts::TAU * kk * delta / w as f64;
                if 2 * k == w {
                    Complex::new(theta.cos(), 0.0)
                } else {
                    Complex::from_polar(1.0, theta)
                }
            })
            .collect();
        let mut buf: Vec<Complex<f64>> = self.spectra.iter().enumerate().map(|(i, c)| c * phase[i % w]).collect();
        for row in buf.chunks_mut(w) {
            self.inverse.process(row);
        }
        let scale = 1.0 / w as f64;
        ImageF::gray(w, self.height, buf.iter().map(|c| c.re * scale).collect())
    }
}
