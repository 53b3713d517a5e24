//! Dense per-pixel containers.
//!
//! All maps are row-major with a top-left origin. Invalid pixels are carried
//! by an explicit mask; the stored value at an invalid pixel is normalised to
//! zero so that equality and file round-trips are well defined.

use crate::error::{Error, Result};

fn check_len(what: &str, width: usize, height: usize, per_pixel: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!("{what}: zero-sized {width}x{height}")));
    }
    let expected = width * height * per_pixel;
    if len != expected {
        return Err(Error::Shape(format!(
            "{what}: expected {expected} samples for {width}x{height}x{per_pixel}, got {len}"
        )));
    }
    Ok(())
}

/// Single- or three-channel floating point image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("image: unsupported channel count {channels}")));
        }
        check_len("image", width, height, channels, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("image: non-finite sample at index {i}")));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    /// Builds a grayscale image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::gray(width, height, data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::gray(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Channel-0 sample at `(x, y)`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels]
    }

    #[inline]
    pub fn get_c(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        let w = self.width * self.channels;
        &self.data[y * w..(y + 1) * w]
    }

    pub fn same_shape(&self, other: &ImageF) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Luminance of a three-channel image (plain channel average); a copy for grayscale input.
    pub fn to_gray(&self) -> ImageF {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self.data.chunks_exact(3).map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
        ImageF { width: self.width, height: self.height, channels: 1, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ImageF> {
        ImageF::new(self.width, self.height, self.channels, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Metric depth along +z, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    z: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, mut z: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        check_len("depth", width, height, 1, z.len())?;
        check_len("depth mask", width, height, 1, mask.len())?;
        for (i, (v, &m)) in z.iter_mut().zip(&mask).enumerate() {
            if m {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(Error::Domain(format!("depth: valid pixel {i} has depth {v}")));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(Self { width, height, z, mask })
    }

    /// Fully valid map.
    pub fn dense(width: usize, height: usize, z: Vec<f64>) -> Result<Self> {
        let mask = vec![true; z.len()];
        Self::new(width, height, z, mask)
    }

    /// Marks every non-finite or non-positive sample invalid instead of rejecting it.
    pub fn from_raw_lossy(width: usize, height: usize, z: Vec<f64>) -> Result<Self> {
        let mask = z.iter().map(|v| v.is_finite() && *v > 0.0).collect();
        Self::new(width, height, z, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.z[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Signed disparity, pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    d: Vec<f64>,
    mask: Vec<bool>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, mut d: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        check_len("disparity", width, height, 1, d.len())?;
        check_len("disparity mask", width, height, 1, mask.len())?;
        for (i, (v, &m)) in d.iter_mut().zip(&mask).enumerate() {
            if m {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("disparity: valid pixel {i} is {v}")));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(Self { width, height, d, mask })
    }

    pub fn dense(width: usize, height: usize, d: Vec<f64>) -> Result<Self> {
        let mask = vec![true; d.len()];
        Self::new(width, height, d, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.d[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Unit surface normals in camera space.
///
/// Normals use the camera x (right) and y (down) axes with z pointing back
/// toward the viewer, the same frame as photometric-stereo light directions,
/// so `L·n` is the Lambertian shading term. A surface seen head-on stores
/// (0, 0, 1), and the depth surface Z = h(X, Y) stores (∂h/∂X, ∂h/∂Y, 1)
/// normalised. Camera-facing normals therefore have n_z > 0. Values are stored
/// as computed; no sign flip is applied on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    n: Vec<[f64; 3]>,
    mask: Vec<bool>,
}

/// Allowed deviation of a stored normal from unit length.
pub const UNIT_TOL: f64 = 1e-6;

impl NormalMap {
    pub fn new(width: usize, height: usize, mut n: Vec<[f64; 3]>, mask: Vec<bool>) -> Result<Self> {
        check_len("normal", width, height, 1, n.len())?;
        check_len("normal mask", width, height, 1, mask.len())?;
        for (i, (v, &m)) in n.iter_mut().zip(&mask).enumerate() {
            if m {
                let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if !len.is_finite() || (len - 1.0).abs() > UNIT_TOL {
                    return Err(Error::Domain(format!("normal: valid pixel {i} has length {len}")));
                }
            } else {
                *v = [0.0; 3];
            }
        }
        Ok(Self { width, height, n, mask })
    }

    pub fn dense(width: usize, height: usize, n: Vec<[f64; 3]>) -> Result<Self> {
        let mask = vec![true; n.len()];
        Self::new(width, height, n, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n(&self) -> &[[f64; 3]] {
        &self.n
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<[f64; 3]> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.n[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}
