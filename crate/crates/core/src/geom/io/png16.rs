//! 16-bit grayscale PNG, intensities in [0, 1].

use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::geom::ImageF;

pub fn write(path: impl AsRef<Path>, img: &ImageF) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::Shape("16-bit PNG writer expects a single-channel image".into()));
    }
    let raw: Vec<u16> = img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw)
        .ok_or_else(|| Error::Shape("png buffer size mismatch".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Image(e.to_string()))
}

/// Reads any PNG, converting to 16-bit luma.
pub fn read(path: impl AsRef<Path>) -> Result<ImageF> {
    let img = image::open(path).map_err(|e| Error::Image(e.to_string()))?.into_luma16();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|q| q as f64 / 65535.0).collect();
    ImageF::gray(w as usize, h as usize, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = ImageF::gray(2, 2, [0u16, 7, 40000, 65535].iter().map(|&q| q as f64 / 65535.0).collect()).unwrap();
        write(&p, &img).unwrap();
        assert_eq!(read(&p).unwrap(), img);
    }
}
