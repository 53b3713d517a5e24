//! Binary PGM (P5). Written with maxval 65535 and big-endian samples; read
//! with any maxval. Intensities map to [0, 1] by `sample / maxval`.

use std::path::Path;

use super::HeaderCursor;
use crate::error::{Error, Result};
use crate::geom::ImageF;

pub fn encode(img: &ImageF) -> Result<Vec<u8>> {
    if img.channels() != 1 {
        return Err(Error::Shape("PGM holds single-channel images only".into()));
    }
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<ImageF> {
    let mut cur = HeaderCursor::new(bytes);
    let (off, magic) = cur.token()?;
    if magic != "P5" {
        return Err(Error::parse(off, format!("bad PGM magic {magic:?}")));
    }
    let width: usize = cur.parse_token("width")?;
    let height: usize = cur.parse_token("height")?;
    let (max_off, maxval) = cur.token()?;
    let maxval: u32 = maxval.parse().map_err(|_| Error::parse(max_off, "bad maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(max_off, format!("maxval {maxval} out of range")));
    }
    let start = cur.end_header()?;
    let bps = if maxval < 256 { 1 } else { 2 };
    let n = width * height;
    let body = &bytes[start..];
    if body.len() < n * bps {
        return Err(Error::parse(bytes.len(), format!("truncated PGM body: need {} bytes", n * bps)));
    }
    let scale = maxval as f64;
    let data = if bps == 1 {
        body[..n].iter().map(|&b| b as f64 / scale).collect()
    } else {
        body[..2 * n].chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale).collect()
    };
    ImageF::gray(width, height, data)
}

pub fn read(path: impl AsRef<Path>) -> Result<ImageF> {
    decode(&std::fs::read(path)?)
}

pub fn write(path: impl AsRef<Path>, img: &ImageF) -> Result<()> {
    std::fs::write(path, encode(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_round_trip_on_grid_values() {
        let img = ImageF::gray(3, 2, [0u16, 1, 300, 32768, 65534, 65535].iter().map(|&q| q as f64 / 65535.0).collect())
            .unwrap();
        let bytes = encode(&img).unwrap();
        assert_eq!(&bytes[..15], b"P5\n3 2\n65535\n\0\0");
        assert_eq!(decode(&bytes).unwrap(), img);
    }

    #[test]
    fn eight_bit_with_comment() {
        let bytes = b"P5\n# hi\n2 1\n255\n\x00\xff";
        let img = decode(bytes).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(decode(b"P2\n1 1\n255\n0"), Err(Error::Parse { offset: 0, .. })));
    }
}
