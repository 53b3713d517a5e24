//! Portable float map. Always written little-endian (scale −1.0), rows stored
//! bottom-to-top as the format prescribes. Samples are 32-bit floats, so a
//! round trip is exact for every f32-representable value.

use std::path::Path;

use super::HeaderCursor;
use crate::error::{Error, Result};
use crate::geom::{DepthMap, DisparityMap, ImageF, NormalMap};

/// Raw PFM payload in top-down row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
    /// Byte offset of the first sample, used to report bad samples.
    data_offset: usize,
}

impl Pfm {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        Self { width, height, channels, data, data_offset: 0 }
    }

    fn sample_offset(&self, index: usize) -> usize {
        let (row, rest) = (index / (self.width * self.channels), index % (self.width * self.channels));
        let stored_row = self.height - 1 - row;
        self.data_offset + 4 * (stored_row * self.width * self.channels + rest)
    }

    /// Fails on the first NaN unless `allow_nan`, in which case NaN marks an invalid pixel.
    fn nan_mask(&self, allow_nan: bool) -> Result<Vec<bool>> {
        let mut mask = Vec::with_capacity(self.width * self.height);
        for (px, s) in self.data.chunks_exact(self.channels).enumerate() {
            let bad = s.iter().any(|v| v.is_nan());
            if bad && !allow_nan {
                return Err(Error::parse(self.sample_offset(px * self.channels), "NaN sample (allow-NaN not set)"));
            }
            mask.push(!bad);
        }
        Ok(mask)
    }
}

pub fn encode(pfm: &Pfm) -> Vec<u8> {
    let tag = if pfm.channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{} {}\n-1.0\n", pfm.width, pfm.height).into_bytes();
    let row_len = pfm.width * pfm.channels;
    out.reserve(4 * pfm.data.len());
    for row in pfm.data.chunks_exact(row_len).rev() {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Pfm> {
    let mut cur = HeaderCursor::new(bytes);
    let magic = cur.token()?;
    let channels = match magic.1.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::parse(magic.0, format!("bad PFM magic {other:?}"))),
    };
    let width: usize = cur.parse_token("width")?;
    let height: usize = cur.parse_token("height")?;
    let (scale_off, scale_tok) = cur.token()?;
    let scale: f64 = scale_tok.parse().map_err(|_| Error::parse(scale_off, format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(scale_off, "scale must be non-zero"));
    }
    if width == 0 || height == 0 {
        return Err(Error::parse(scale_off, "zero-sized PFM"));
    }
    let data_offset = cur.end_header()?;
    let n = width * height * channels;
    let body = &bytes[data_offset..];
    if body.len() < 4 * n {
        return Err(Error::parse(bytes.len(), format!("truncated PFM body: need {} bytes, have {}", 4 * n, body.len())));
    }
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut data = vec![0.0; n];
    for (stored_row, chunk) in body[..4 * n].chunks_exact(4 * row_len).enumerate() {
        let row = height - 1 - stored_row;
        for (k, b) in chunk.chunks_exact(4).enumerate() {
            let raw = [b[0], b[1], b[2], b[3]];
            let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
            data[row * row_len + k] = v as f64;
        }
    }
    Ok(Pfm { width, height, channels, data, data_offset })
}

pub fn read(path: impl AsRef<Path>) -> Result<Pfm> {
    decode(&std::fs::read(path)?)
}

pub fn write(path: impl AsRef<Path>, pfm: &Pfm) -> Result<()> {
    std::fs::write(path, encode(pfm))?;
    Ok(())
}

fn expect_channels(pfm: &Pfm, channels: usize, what: &str) -> Result<()> {
    if pfm.channels != channels {
        return Err(Error::Shape(format!("{what} expects {channels}-channel PFM, got {}", pfm.channels)));
    }
    Ok(())
}

fn masked(values: &[f64], mask: &[bool]) -> Vec<f64> {
    values.iter().zip(mask).map(|(&v, &m)| if m { v } else { f64::NAN }).collect()
}

pub fn depth_to_pfm(d: &DepthMap) -> Pfm {
    Pfm::new(d.width(), d.height(), 1, masked(d.z(), d.mask()))
}

pub fn depth_from_pfm(pfm: &Pfm, allow_nan: bool) -> Result<DepthMap> {
    expect_channels(pfm, 1, "depth")?;
    let mask = pfm.nan_mask(allow_nan)?;
    DepthMap::new(pfm.width, pfm.height, pfm.data.clone(), mask)
}

pub fn disparity_to_pfm(d: &DisparityMap) -> Pfm {
    Pfm::new(d.width(), d.height(), 1, masked(d.d(), d.mask()))
}

pub fn disparity_from_pfm(pfm: &Pfm, allow_nan: bool) -> Result<DisparityMap> {
    expect_channels(pfm, 1, "disparity")?;
    let mask = pfm.nan_mask(allow_nan)?;
    DisparityMap::new(pfm.width, pfm.height, pfm.data.clone(), mask)
}

pub fn normals_to_pfm(n: &NormalMap) -> Pfm {
    let data = n
        .n()
        .iter()
        .zip(n.mask())
        .flat_map(|(v, &m)| if m { *v } else { [f64::NAN; 3] })
        .collect();
    Pfm::new(n.width(), n.height(), 3, data)
}

/// Normals are renormalised after the f32 round trip so the unit invariant holds.
pub fn normals_from_pfm(pfm: &Pfm, allow_nan: bool) -> Result<NormalMap> {
    expect_channels(pfm, 3, "normal")?;
    let mask = pfm.nan_mask(allow_nan)?;
    let n = pfm
        .data
        .chunks_exact(3)
        .zip(&mask)
        .map(|(c, &m)| {
            if !m {
                return [0.0; 3];
            }
            let len = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if (len - 1.0).abs() <= 1e-5 {
                [c[0] / len, c[1] / len, c[2] / len]
            } else {
                [c[0], c[1], c[2]]
            }
        })
        .collect();
    NormalMap::new(pfm.width, pfm.height, n, mask)
}

pub fn image_to_pfm(img: &ImageF) -> Pfm {
    Pfm::new(img.width(), img.height(), img.channels(), img.data().to_vec())
}

pub fn image_from_pfm(pfm: &Pfm) -> Result<ImageF> {
    pfm.nan_mask(false)?;
    ImageF::new(pfm.width, pfm.height, pfm.channels, pfm.data.clone())
}

pub fn write_depth(path: impl AsRef<Path>, d: &DepthMap) -> Result<()> {
    write(path, &depth_to_pfm(d))
}

pub fn read_depth(path: impl AsRef<Path>, allow_nan: bool) -> Result<DepthMap> {
    depth_from_pfm(&read(path)?, allow_nan)
}

pub fn write_disparity(path: impl AsRef<Path>, d: &DisparityMap) -> Result<()> {
    write(path, &disparity_to_pfm(d))
}

pub fn read_disparity(path: impl AsRef<Path>, allow_nan: bool) -> Result<DisparityMap> {
    disparity_from_pfm(&read(path)?, allow_nan)
}

pub fn write_normals(path: impl AsRef<Path>, n: &NormalMap) -> Result<()> {
    write(path, &normals_to_pfm(n))
}

pub fn read_normals(path: impl AsRef<Path>, allow_nan: bool) -> Result<NormalMap> {
    normals_from_pfm(&read(path)?, allow_nan)
}

pub fn write_image(path: impl AsRef<Path>, img: &ImageF) -> Result<()> {
    write(path, &image_to_pfm(img))
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageF> {
    image_from_pfm(&read(path)?)
}
